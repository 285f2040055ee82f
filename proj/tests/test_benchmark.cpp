#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "helpers.hpp"
#include "vapbench/benchmark.hpp"
#include "vapbench/corpus.hpp"

using namespace vapbench;

namespace {

FeatureMatrix random_matrix(std::size_t rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FeatureMatrix m;
  for (std::size_t r = 0; r < rows; ++r) {
    FeatureRow row{"v" + std::to_string(r % 7), r, {}};
    for (auto& v : row.features.values) v = u(rng);
    m.rows.push_back(row);
  }
  return m;
}

CostColumn column_from(const FeatureMatrix& m, std::string name, Primitive p,
                       const std::function<double(const FeatureVector&)>& f) {
  CostColumn c{std::move(name), p, {}};
  for (const auto& r : m.rows) c.cost.push_back(f(r.features));
  return c;
}

FeatureMatrix one_feature(const std::vector<double>& values, std::size_t feature, const std::vector<std::string>& videos = {}) {
  FeatureMatrix m;
  for (std::size_t i = 0; i < values.size(); ++i) {
    FeatureRow row{videos.empty() ? "v" : videos[i], i, {}};
    row.features.values[feature] = values[i];
    m.rows.push_back(row);
  }
  return m;
}

}  // namespace

TEST(Correlate, PerfectLines) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y, z;
  for (double v : x) {
    y.push_back(2 * v + 1);
    z.push_back(-v);
  }
  EXPECT_NEAR(*correlate(x, y), 1.0, 1e-12);
  EXPECT_NEAR(*correlate(x, z), -1.0, 1e-12);
  EXPECT_FALSE(correlate(x, std::vector<double>(5, 3.0)).has_value());
}

TEST(Correlate, TenPairFixture) {
  const std::vector<double> x{1, 3, 2, 5, 4, 7, 6, 9, 8, 10};
  const std::vector<double> y{2, 1, 4, 3, 6, 5, 8, 7, 10, 9};
  // textbook form: (n sum xy - sum x sum y) / sqrt((n sum x2 - (sum x)^2)(n sum y2 - (sum y)^2))
  double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
  }
  const double n = 10;
  const double r = (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  EXPECT_NEAR(*correlate(x, y), r, 1e-12);
}

TEST(Select, SingleDrivingFeatureChosenAlone) {
  const auto m = random_matrix(200, 1);
  const auto col = column_from(m, "uniform_sampling", Primitive::temporal, [](const FeatureVector& f) { return 3 * f[4]; });
  const auto sel = select_features(m, {col}, HoldoutSet({}));
  EXPECT_EQ(sel.at(Primitive::temporal).set.feature_ids, (std::vector<std::size_t>{4}));
  EXPECT_TRUE(sel.at(Primitive::spatial).set.feature_ids.empty());
  EXPECT_FALSE(sel.at(Primitive::spatial).warnings.empty());
}

TEST(Select, DuplicateFeatureAdmittedOnce) {
  auto m = random_matrix(200, 2);
  for (auto& r : m.rows) r.features.values[9] = r.features.values[3];
  const auto col = column_from(m, "trigger_diff", Primitive::temporal, [](const FeatureVector& f) { return f[3]; });
  const auto sel = select_features(m, {col}, HoldoutSet({}));
  // equal |r|: the name-ordered first of the pair wins
  const auto& ids = sel.at(Primitive::temporal).set.feature_ids;
  ASSERT_EQ(ids.size(), 1u);
  const auto first = feature_names()[3] < feature_names()[9] ? 3u : 9u;
  EXPECT_EQ(ids[0], first);
}

TEST(Select, GeneratorCoupledToTwoFeatures) {
  const auto m = random_matrix(300, 3);
  const std::size_t a = feature_index("object_speed_p50"), b = feature_index("total_area_mean");
  const auto col = column_from(m, "quality_downsize", Primitive::spatial,
                               [&](const FeatureVector& f) { return f[a] + f[b]; });
  const auto sel = select_features(m, {col}, HoldoutSet({}));
  auto ids = sel.at(Primitive::spatial).set.feature_ids;
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(ids, (std::vector<std::size_t>{std::min(a, b), std::max(a, b)}));
}

TEST(Select, HoldoutStrategiesIgnored) {
  const auto m = random_matrix(200, 4);
  const auto train = column_from(m, "uniform_sampling", Primitive::temporal, [](const FeatureVector& f) { return f[0]; });
  const auto held = column_from(m, "trigger_diff", Primitive::temporal, [](const FeatureVector& f) { return f[20]; });
  const auto sel = select_features(m, {train, held}, HoldoutSet({"trigger_diff"}));
  EXPECT_EQ(sel.at(Primitive::temporal).set.feature_ids, (std::vector<std::size_t>{0}));
  const auto both = select_features(m, {train, held}, HoldoutSet({}));
  EXPECT_EQ(both.at(Primitive::temporal).set.feature_ids.size(), 2u);
}

TEST(Select, MissingCostsSkippedAndMaxFeaturesHonoured) {
  const auto m = random_matrix(200, 5);
  auto col = column_from(m, "uniform_sampling", Primitive::temporal,
                         [](const FeatureVector& f) { return f[1] + f[2] + f[3]; });
  for (std::size_t i = 0; i < col.cost.size(); i += 3) col.cost[i].reset();
  SelectionOptions opt;
  opt.max_features = 2;
  const auto sel = select_features(m, {col}, HoldoutSet({}), opt);
  EXPECT_EQ(sel.at(Primitive::temporal).set.feature_ids.size(), 2u);
  col.cost.pop_back();
  EXPECT_THROW(select_features(m, {col}, HoldoutSet({})), InputError);
}

TEST(Select, InvariantToCsvColumnOrder) {
  const auto m = random_matrix(120, 6);
  std::stringstream ss;
  write_feature_csv(ss, m);
  // reverse the feature columns of the CSV text
  std::stringstream reordered;
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    std::reverse(cells.begin(), cells.begin() + static_cast<long>(kFeatureCount));
    for (std::size_t i = 0; i < cells.size(); ++i) reordered << (i ? "," : "") << cells[i];
    reordered << '\n';
  }
  const auto back = read_feature_csv(reordered);
  const auto f = [](const FeatureVector& v) { return v[7] - 0.5 * v[30]; };
  const auto s1 = select_features(m, {column_from(m, "region_crop", Primitive::spatial, f)}, HoldoutSet({}));
  const auto s2 = select_features(back, {column_from(back, "region_crop", Primitive::spatial, f)}, HoldoutSet({}));
  EXPECT_EQ(s1.at(Primitive::spatial).set.feature_ids, s2.at(Primitive::spatial).set.feature_ids);
}

TEST(Buckets, BoundaryRule) {
  const auto m = one_feature({0, 1, 2, 3, 4}, 5);
  const auto spec = build_buckets(m, {5});
  EXPECT_EQ(spec.edges[0], (std::vector<double>{0, 1, 2, 3, 4}));
  EXPECT_EQ(spec.bucket_of(0, 4.0), 3);
  EXPECT_EQ(spec.bucket_of(0, 0.0), 0);
  EXPECT_EQ(spec.bucket_of(0, 1.0), 1);
  EXPECT_EQ(spec.bucket_of(0, 0.999), 0);
  EXPECT_EQ(spec.bucket_of(0, -5.0), 0);
  EXPECT_EQ(spec.bucket_of(0, 50.0), 3);
}

TEST(Buckets, ConstantFeatureDegenerates) {
  const auto m = one_feature({2, 2, 2}, 0);
  std::vector<std::string> warnings;
  const auto spec = build_buckets(m, {0}, {}, &warnings);
  EXPECT_EQ(spec.buckets_for(0), 1);
  EXPECT_EQ(spec.bucket_of(0, 2.0), 0);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Buckets, FixtureEdgesAndClipping) {
  const auto m = one_feature({0.2, 0.4, 1.0, 0.6, 0.3, 5.0}, 2);
  const auto spec = build_buckets(m, {2}, {2});
  ASSERT_EQ(spec.edges[0].size(), 3u);
  EXPECT_DOUBLE_EQ(spec.edges[0][0], 0.2);
  EXPECT_DOUBLE_EQ(spec.edges[0][1], 2.6);
  EXPECT_DOUBLE_EQ(spec.edges[0][2], 5.0);
  BucketOptions clip{2, 20.0};
  // nearest rank of 6 sorted values: p20 -> 2nd (0.3), p80 -> 5th (1.0)
  const auto clipped = build_buckets(m, {2}, clip);
  EXPECT_DOUBLE_EQ(clipped.edges[0].front(), 0.3);
  EXPECT_DOUBLE_EQ(clipped.edges[0].back(), 1.0);
  EXPECT_THROW(build_buckets(m, {2}, {0}), ConfigError);
}

TEST(Buckets, JsonRoundTripAndKeys) {
  const auto m = random_matrix(50, 7);
  const auto spec = build_buckets(m, {1, 12, 40});
  const nlohmann::json j = spec;
  EXPECT_EQ(j.get<BucketSpec>(), spec);
  EXPECT_EQ(encode_key({0, 3, 1}), "0-3-1");
  EXPECT_EQ(decode_key("0-3-1"), (BucketKey{0, 3, 1}));
  EXPECT_TRUE(decode_key("").empty());
  EXPECT_EQ(l1_distance({0, 3, 1}, {1, 1, 1}), 3);
  EXPECT_EQ(spec.project({40, 1}).feature_ids, (std::vector<std::size_t>{40, 1}));
}

TEST(Segments, OnePerKeyIsChosen) {
  const auto m = one_feature({0, 1, 2, 3, 4}, 0);
  const auto spec = build_buckets(m, {0});
  const auto b = select_segments(m, spec, 2);
  EXPECT_EQ(b.entries.size(), 4u);
  EXPECT_EQ(b.segment_count(), 5u);
  EXPECT_EQ(b.entries.at("0"), (std::vector<SegmentRef>{{"v", 0}}));
}

TEST(Segments, TieBreakPrefersDistinctVideos) {
  const std::vector<std::string> vids{"b", "a", "a", "a", "c", "b", "a", "d", "a", "a"};
  const auto m = one_feature(std::vector<double>(10, 1.0), 0, vids);
  const auto spec = build_buckets(m, {0});
  const auto b = select_segments(m, spec, 4);
  ASSERT_EQ(b.entries.size(), 1u);
  const std::vector<SegmentRef> expected{{"a", 1}, {"b", 0}, {"c", 4}, {"d", 7}};
  EXPECT_EQ(b.entries.begin()->second, expected);
  const auto two = select_segments(m, spec, 2);
  EXPECT_EQ(two.entries.begin()->second, (std::vector<SegmentRef>{{"a", 1}, {"b", 0}}));
  EXPECT_THROW(select_segments(m, spec, 0), ConfigError);
}

TEST(Segments, CoverageAndMembership) {
  const auto m = random_matrix(400, 8);
  const auto spec = build_buckets(m, {0, 1, 2});
  const auto b = select_segments(m, spec, 3);
  std::set<std::string> present;
  for (const auto& r : m.rows) present.insert(encode_key(spec.key_of(r.features)));
  EXPECT_EQ(b.entries.size(), present.size());
  for (const auto& [key, refs] : b.entries) {
    EXPECT_GE(refs.size(), 1u);
    EXPECT_LE(refs.size(), 3u);
    for (const auto& ref : refs) EXPECT_EQ(encode_key(spec.key_of(m.rows[ref.segment_index].features)), key);
  }
  const auto again = select_segments(m, spec, 3);
  EXPECT_EQ(again.entries, b.entries);
}

TEST(Segments, SkewedCorpusShrinks) {
  Corpus c;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    ScenarioSpec s;
    s.video_id = "cam" + std::to_string(seed);
    s.seed = seed;
    s.duration = 120.0;
    s.width = 320;
    s.height = 240;
    const auto v = generate(s);
    c.add_video(v.ground_truth, &v.cheap, 5.0);
  }
  const auto m = featurize_corpus(c);
  const auto spec = build_buckets(m, {feature_index("object_count_mean")}, {2});
  const auto b = select_segments(m, spec, 2);
  EXPECT_EQ(c.size(), 144u);
  EXPECT_LE(b.segment_count(), 4u);
}

TEST(Segments, JsonRoundTrip) {
  const auto m = random_matrix(30, 9);
  const auto spec = build_buckets(m, {3});
  const auto b = select_segments(m, spec, 2, Primitive::model);
  const nlohmann::json j = b;
  const auto back = j.get<BenchmarkSet>();
  EXPECT_EQ(back.primitive, Primitive::model);
  EXPECT_EQ(back.buckets, b.buckets);
  EXPECT_EQ(back.entries, b.entries);
}

TEST(CostColumn, BandRuleOnStaticScene) {
  Corpus c;
  auto t = testing_helpers::make_trace(100, 100);
  for (int i = 0; i < 60; ++i) t.frames.push_back(testing_helpers::frame(i, {testing_helpers::det(1, 10, 10, 20, 20)}));
  c.add_video(t, nullptr, 6.0);
  const auto tmpl = StrategyConfig{Primitive::temporal, StrategyKind::uniform_sampling};
  const auto knobs = default_knobs(tmpl, DegradationParams{});
  // static scene is perfect at every rate: nothing inside [0.9, 0.95]
  const auto col = strategy_cost_column(tmpl, knobs, c, CostDimension::compute);
  EXPECT_FALSE(col.cost[0].has_value());
  const auto above = strategy_cost_column(tmpl, knobs, c, CostDimension::compute, {}, true);
  EXPECT_DOUBLE_EQ(*above.cost[0], 1.0 / 30);
  EXPECT_EQ(col.strategy, "uniform_sampling");
}
