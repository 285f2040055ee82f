#include <gtest/gtest.h>

#include "helpers.hpp"
#include "vapbench/estimate.hpp"

using namespace vapbench;

namespace {

PrimitiveProfile temporal_fixture(BucketSpec buckets, std::map<std::string, std::vector<PerfPoint>> rows) {
  PrimitiveProfile prof;
  prof.primitive = Primitive::temporal;
  prof.kind = StrategyKind::uniform_sampling;
  prof.buckets = std::move(buckets);
  const auto knobs = default_knobs(StrategyConfig{Primitive::temporal, StrategyKind::uniform_sampling}, {});
  for (auto& [key, pts] : rows)
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (prof.knobs.size() <= i) prof.knobs.push_back(knobs[i]);
      prof.table[key].push_back({knobs[i], pts[i].accuracy, pts[i].network, pts[i].compute, 1});
    }
  return prof;
}

PCProfile pc_of(const PrimitiveProfile& t) {
  return build_pc_profile(t, oracle_profile(Primitive::spatial), oracle_profile(Primitive::model), CostDimension::compute);
}

ScanResult scan_with_keys(const std::vector<BucketKey>& keys) {
  ScanResult r;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    ScannedSegment s;
    s.segment_index = i;
    s.key = keys[i];
    r.segments.push_back(s);
    r.distribution.weights[encode_key(keys[i])] += 1.0 / static_cast<double>(keys.size());
  }
  return r;
}

SyntheticVideo stationary_video() {
  ScenarioSpec s;
  s.video_id = "still";
  s.duration = 120.0;
  s.width = 320;
  s.height = 240;
  s.arrival_rate = 0.3;
  s.dwell_min = s.dwell_max = 200.0;
  s.speed_min = s.speed_max = 1.0;
  return generate(s);
}

}  // namespace

TEST(Scan, PositionsArePairs) {
  EXPECT_EQ(scan_positions(25, 5), (std::vector<std::size_t>{0, 1, 10, 11, 20, 21}));
  EXPECT_EQ(scan_positions(4, 1), (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_THROW(scan_positions(4, 0), ConfigError);
}

TEST(Scan, FactorOneMatchesFullFeaturization) {
  const auto v = testing_helpers::random_segment(3, 60.0);
  const auto spec = BucketSpec{{0, 20}, {{0, 1, 2}, {0, 1}}};
  ScanOptions opt;
  opt.subsample_factor = 1;
  opt.segment_seconds = 20.0;
  const auto r = scan_features(v.ground_truth, spec, opt);
  const auto segs = segmentize(v.ground_truth, 20.0);
  ASSERT_EQ(r.segments.size(), segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i)
    EXPECT_EQ(r.segments[i].features.values, featurize_segment(slice(v.ground_truth, segs[i])).values);
  EXPECT_DOUBLE_EQ(r.scan_cost, 0.1);
}

TEST(Scan, StationarySceneKeepsKeys) {
  const auto v = stationary_video();
  const auto spec = BucketSpec{{feature_index("object_count_mean"), feature_index("object_speed_mean")},
                               {{0, 10, 20, 30, 40}, {1, 2, 3}}};
  ScanOptions full;
  full.subsample_factor = 1;
  const auto a = scan_features(v.ground_truth, spec, full);
  const auto b = scan_features(v.ground_truth, spec);
  ASSERT_EQ(a.segments.size(), b.segments.size());
  for (std::size_t i = 0; i < a.segments.size(); ++i) EXPECT_EQ(a.segments[i].key, b.segments[i].key);
}

TEST(Scan, ShortSegmentsFlaggedLowConfidence) {
  const auto v = testing_helpers::random_segment(5, 6.0);
  ScanOptions opt;
  opt.subsample_factor = 100;
  opt.segment_seconds = 6.0;
  const auto r = scan_features(v.cheap, BucketSpec{{0}, {{0, 1}}}, opt);
  ASSERT_EQ(r.segments.size(), 1u);
  EXPECT_TRUE(r.segments[0].low_confidence);
  EXPECT_EQ(r.segments[0].frames_scanned, 2u);
}

TEST(Scan, CostMonotoneInFactorAndWeightsSumToOne) {
  const auto v = testing_helpers::random_segment(6, 120.0);
  const auto spec = BucketSpec{{feature_index("object_count_mean")}, {{0, 1, 2, 3}}};
  double prev = 2.0;
  for (std::size_t f : {1u, 2u, 5u, 10u, 30u, 100u}) {
    ScanOptions opt;
    opt.subsample_factor = f;
    const auto r = scan_features(v.cheap, spec, opt);
    EXPECT_LE(r.scan_cost, prev);
    prev = r.scan_cost;
    double total = 0.0;
    for (const auto& [k, w] : r.distribution.weights) {
      EXPECT_GE(w, 0.0);
      total += w;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Estimate, PointMassEqualsKeyQuery) {
  const auto t = temporal_fixture(BucketSpec{{0}, {{0, 1, 2}}},
                                  {{"0", {{1, 1, 1}, {0.95, 0.5, 0.5}, {0.8, 0.2, 0.2}}}, {"1", {{1, 1, 1}, {0.85, 0.5, 0.5}, {0.6, 0.2, 0.2}}}});
  const auto pc = pc_of(t);
  const auto rep = estimate_performance(pc, scan_with_keys({{0}, {0}, {0}}), {0.9, CostDimension::compute});
  const auto q = query_min_cost(pc, {0}, 0.9, CostDimension::compute);
  for (const auto& s : rep.segments) EXPECT_EQ(s.query.point, q.point);
  EXPECT_DOUBLE_EQ(rep.mean_cost, 0.5);
  EXPECT_DOUBLE_EQ(rep.p90_cost, 0.5);
}

TEST(Estimate, PerfectProfileGivesFullAlpha) {
  const auto t = temporal_fixture(BucketSpec{{0}, {{0, 1, 2}}}, {{"0", {{1, 1, 1}, {1, 0.5, 0.5}}}, {"1", {{1, 1, 1}, {1, 0.2, 0.2}}}});
  const auto rep = estimate_performance(pc_of(t), scan_with_keys({{0}, {1}, {1}}));
  EXPECT_DOUBLE_EQ(rep.alpha, 1.0);
  EXPECT_DOUBLE_EQ(rep.beta, 0.0);
}

TEST(Estimate, AlphaBetaPartition) {
  const std::vector<double> accs{0.95, 0.9, 0.85, 0.8, 0.7, 0.69, 0.2, 1.0};
  const auto [a, b] = alpha_beta(accs);
  EXPECT_DOUBLE_EQ(a, 3.0 / 8);
  EXPECT_DOUBLE_EQ(b, 2.0 / 8);
  std::size_t middle = 0;
  for (double x : accs) middle += (x >= 0.7 && x <= 0.85);
  EXPECT_DOUBLE_EQ(a + b + static_cast<double>(middle) / 8, 1.0);
}

TEST(Estimate, FixedKnobsDriveAlphaBeta) {
  const auto t = temporal_fixture(BucketSpec{{0}, {{0, 1, 2}}},
                                  {{"0", {{1, 1, 1}, {0.9, 0.5, 0.5}, {0.6, 0.2, 0.2}}}, {"1", {{1, 1, 1}, {0.8, 0.5, 0.5}, {0.75, 0.2, 0.2}}}});
  const auto pc = pc_of(t);
  EstimateOptions opt;
  opt.fixed_knobs = std::array{uniform_sampling(0.2), oracle(Primitive::spatial), oracle(Primitive::model)};
  const auto rep = estimate_performance(pc, scan_with_keys({{0}, {1}, {1}, {0}}), opt);
  EXPECT_DOUBLE_EQ(rep.alpha, 0.0);
  EXPECT_DOUBLE_EQ(rep.beta, 0.5);
  opt.fixed_knobs = std::array{uniform_sampling(0.25), oracle(Primitive::spatial), oracle(Primitive::model)};
  EXPECT_THROW(estimate_performance(pc, scan_with_keys({{0}}), opt), ConfigError);
}

TEST(Estimate, SelfConsistencyAndKnownOffset) {
  const auto t = temporal_fixture(BucketSpec{{0}, {{0, 1, 2}}}, {{"0", {{1, 1, 1}, {0.92, 0.5, 0.5}}}, {"1", {{1, 1, 1}, {0.91, 0.2, 0.2}}}});
  const auto rep = estimate_performance(pc_of(t), scan_with_keys({{0}, {1}, {1}}), {0.9, CostDimension::compute});
  std::vector<MeasuredSegment> same, shifted;
  for (const auto& s : rep.segments) {
    same.push_back({s.segment_index, s.query.point.perf.compute, s.query.point.perf.accuracy});
    shifted.push_back({s.segment_index, s.query.point.perf.compute + 0.05, s.query.point.perf.accuracy});
  }
  const auto e0 = estimation_error(rep, same);
  EXPECT_DOUBLE_EQ(e0.median_cost_error, 0.0);
  EXPECT_DOUBLE_EQ(e0.alpha_error, 0.0);
  EXPECT_DOUBLE_EQ(e0.beta_error, 0.0);
  const auto e1 = estimation_error(rep, shifted);
  EXPECT_NEAR(e1.median_cost_error, 0.05, 1e-12);
  EXPECT_NEAR(e1.mean_cost_error, 0.05, 1e-12);
  EXPECT_THROW(estimation_error(rep, {}), InputError);
}

TEST(Estimate, ClosedLoopReproducesKeyMeans) {
  // profile built from every corpus segment with factor-1 ground-truth scan
  Corpus c;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto v = testing_helpers::random_segment(seed, 40.0);
    v.ground_truth.video_id = v.cheap.video_id = "cam" + std::to_string(seed);
    c.add_video(v.ground_truth, &v.cheap, 10.0);
  }
  const auto m = featurize_corpus(c);
  const auto spec = build_buckets(m, {feature_index("object_count_mean")}, {3});
  const auto bench = select_segments(m, spec, 1000);
  const StrategyConfig tmpl{Primitive::temporal, StrategyKind::uniform_sampling};
  const auto prof = profile_primitive(tmpl, {uniform_sampling(0.2)}, bench, c);
  const auto pc = build_pc_profile(prof, oracle_profile(Primitive::spatial), oracle_profile(Primitive::model),
                                   CostDimension::compute);
  ScanOptions opt;
  opt.subsample_factor = 1;
  opt.segment_seconds = 10.0;
  for (const auto& id : c.video_ids()) {
    DetectionTrace whole;
    for (std::size_t i = 0; c.contains({id, i}); ++i) {
      const auto& seg = c.at({id, i}).gt;
      if (i == 0) {
        whole = seg;
        continue;
      }
      for (auto f : seg.frames) {
          f.frame_index = static_cast<std::int64_t>(whole.frames.size());
          whole.frames.push_back(f);
        }
    }
    const auto scan = scan_features(whole, spec, opt);
    const auto rep = estimate_performance(pc, scan, {0.0, CostDimension::compute});
    for (const auto& s : rep.segments) {
      const auto& entry = prof.table.at(s.key).front();
      EXPECT_FALSE(s.query.fallback);
      EXPECT_DOUBLE_EQ(s.query.point.perf.compute, entry.compute);
      EXPECT_DOUBLE_EQ(s.query.point.perf.accuracy, entry.accuracy);
    }
  }
}
