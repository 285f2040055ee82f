#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vapbench/errors.hpp"
#include "vapbench/features.hpp"
#include "vapbench/stats.hpp"
#include "vapbench/strategies.hpp"

namespace vapbench {

// ---------------------------------------------------------------------------
// Bucket keys

using BucketKey = std::vector<int>;

/// Stable textual key "b0-b1-...-bm"; the empty key encodes as "".
inline std::string encode_key(const BucketKey& k) {
  std::string s;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(k[i]);
  }
  return s;
}

inline BucketKey decode_key(const std::string& s) {
  BucketKey k;
  if (s.empty()) return k;
  std::istringstream in(s);
  std::string part;
  while (std::getline(in, part, '-')) {
    try {
      k.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw InputError("malformed bucket key '" + s + "'");
    }
  }
  return k;
}

inline int l1_distance(const BucketKey& a, const BucketKey& b) {
  if (a.size() != b.size()) throw InputError("bucket keys differ in arity");
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

// ---------------------------------------------------------------------------
// Feature sets and buckets

struct FeatureSet {
  Primitive primitive = Primitive::temporal;
  std::vector<std::size_t> feature_ids;

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (auto id : feature_ids) out.push_back(feature_names().at(id));
    return out;
  }
};

/// Equal-width buckets per feature: edges[i] holds n+1 ascending values
/// (a single degenerate bucket {v, v} for a constant feature).
struct BucketSpec {
  std::vector<std::size_t> feature_ids;
  std::vector<std::vector<double>> edges;

  std::size_t arity() const { return feature_ids.size(); }

  int buckets_for(std::size_t i) const { return std::max<int>(1, static_cast<int>(edges[i].size()) - 1); }

  /// Interior edges are lower-inclusive, the top edge is inclusive, and values
  /// outside the corpus range clamp to the end buckets.
  int bucket_of(std::size_t i, double v) const {
    const auto& e = edges.at(i);
    if (e.size() <= 2) return 0;
    const auto it = std::upper_bound(e.begin() + 1, e.end() - 1, v);
    return static_cast<int>(it - (e.begin() + 1));
  }

  BucketKey key_of(const FeatureVector& fv) const {
    BucketKey k(feature_ids.size());
    for (std::size_t i = 0; i < feature_ids.size(); ++i) k[i] = bucket_of(i, fv.values[feature_ids[i]]);
    return k;
  }

  /// Spec restricted to a subset of its features, in the given order.
  BucketSpec project(const std::vector<std::size_t>& ids) const {
    BucketSpec out;
    for (auto id : ids) {
      const auto it = std::find(feature_ids.begin(), feature_ids.end(), id);
      if (it == feature_ids.end()) throw InputError("feature " + feature_names().at(id) + " is not bucketed");
      out.feature_ids.push_back(id);
      out.edges.push_back(edges[static_cast<std::size_t>(it - feature_ids.begin())]);
    }
    return out;
  }

  friend bool operator==(const BucketSpec&, const BucketSpec&) = default;
};

struct BucketOptions {
  int n = 4;
  /// When set, the range is [p, 100-p] percentiles instead of raw min/max.
  std::optional<double> clip_percentile;
};

inline BucketSpec build_buckets(const FeatureMatrix& m, const std::vector<std::size_t>& feature_ids,
                                const BucketOptions& opt = {}, std::vector<std::string>* warnings = nullptr) {
  if (opt.n < 1) throw ConfigError("bucket count must be >= 1");
  if (m.rows.empty()) throw InputError("cannot bucket an empty feature matrix");
  BucketSpec spec;
  for (auto id : feature_ids) {
    if (id >= kFeatureCount) throw ConfigError("feature id out of range");
    auto col = m.column(id);
    double lo, hi;
    if (opt.clip_percentile) {
      lo = stats::percentile(col, *opt.clip_percentile);
      hi = stats::percentile(col, 100.0 - *opt.clip_percentile);
    } else {
      std::tie(lo, hi) = stats::min_max(col);
    }
    spec.feature_ids.push_back(id);
    if (!(hi > lo)) {
      if (warnings) warnings->push_back("feature " + feature_names()[id] + " is constant; single degenerate bucket");
      spec.edges.push_back({lo, lo});
      continue;
    }
    std::vector<double> e(static_cast<std::size_t>(opt.n) + 1);
    for (int b = 0; b <= opt.n; ++b) e[static_cast<std::size_t>(b)] = lo + (hi - lo) * b / opt.n;
    e.back() = hi;
    spec.edges.push_back(std::move(e));
  }
  return spec;
}

inline void to_json(nlohmann::json& j, const BucketSpec& b) {
  j = nlohmann::json::array();
  for (std::size_t i = 0; i < b.feature_ids.size(); ++i)
    j.push_back({{"feature", feature_names().at(b.feature_ids[i])}, {"edges", b.edges[i]}});
}

inline void from_json(const nlohmann::json& j, BucketSpec& b) {
  b = {};
  for (const auto& f : j) {
    b.feature_ids.push_back(feature_index(f.at("feature").get<std::string>()));
    b.edges.push_back(f.at("edges").get<std::vector<double>>());
  }
}

// ---------------------------------------------------------------------------
// Correlation-driven feature selection

inline std::optional<double> correlate(std::span<const double> feature, std::span<const double> cost) {
  return stats::pearson(feature, cost);
}

/// Cost of one training (or holdout) strategy per feature-matrix row; rows
/// without an in-band measurement are nullopt.
struct CostColumn {
  std::string strategy;
  Primitive primitive = Primitive::temporal;
  std::vector<std::optional<double>> cost;
};

/// Strategies withheld from selection. Callers must name them explicitly.
class HoldoutSet {
 public:
  explicit HoldoutSet(std::vector<std::string> names) : names_(std::move(names)) {}
  bool contains(const std::string& s) const { return std::find(names_.begin(), names_.end(), s) != names_.end(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

struct SelectionOptions {
  double relevance_threshold = 0.3;
  double redundancy_threshold = 0.5;
  /// 0 keeps every admitted feature.
  std::size_t max_features = 0;
};

struct FeatureScore {
  std::size_t feature = 0;
  double max_abs_r = 0.0;
  std::string strategy;
};

struct FeatureSelection {
  FeatureSet set;
  std::vector<FeatureScore> candidates;  // relevance-qualified, ranked
  std::vector<std::string> warnings;
};

/// Per primitive: keep features whose |r| with some training strategy's cost
/// reaches the relevance threshold, rank by that |r|, then admit greedily
/// while the correlation with every admitted feature stays below the
/// redundancy threshold.
inline std::map<Primitive, FeatureSelection> select_features(const FeatureMatrix& m,
                                                             const std::vector<CostColumn>& columns,
                                                             const HoldoutSet& holdout,
                                                             const SelectionOptions& opt = {}) {
  for (const auto& c : columns)
    if (c.cost.size() != m.rows.size()) throw InputError("cost column '" + c.strategy + "' does not match the matrix");
  std::map<Primitive, FeatureSelection> out;
  for (auto prim : kPrimitives) {
    FeatureSelection sel;
    sel.set.primitive = prim;
    bool any_column = false;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      FeatureScore best{f, -1.0, {}};
      for (const auto& c : columns) {
        if (c.primitive != prim || holdout.contains(c.strategy)) continue;
        any_column = true;
        std::vector<double> xs, ys;
        for (std::size_t r = 0; r < m.rows.size(); ++r)
          if (c.cost[r]) {
            xs.push_back(m.rows[r].features.values[f]);
            ys.push_back(*c.cost[r]);
          }
        const auto r = correlate(xs, ys);
        if (r && std::abs(*r) > best.max_abs_r) best = {f, std::abs(*r), c.strategy};
      }
      if (best.max_abs_r >= opt.relevance_threshold) sel.candidates.push_back(best);
    }
    std::stable_sort(sel.candidates.begin(), sel.candidates.end(), [](const FeatureScore& a, const FeatureScore& b) {
      if (a.max_abs_r != b.max_abs_r) return a.max_abs_r > b.max_abs_r;
      return feature_names()[a.feature] < feature_names()[b.feature];
    });
    for (const auto& cand : sel.candidates) {
      if (opt.max_features && sel.set.feature_ids.size() >= opt.max_features) break;
      const auto x = m.column(cand.feature);
      bool redundant = false;
      for (auto admitted : sel.set.feature_ids) {
        const auto r = stats::pearson(x, m.column(admitted));
        if (r && std::abs(*r) >= opt.redundancy_threshold) {
          redundant = true;
          break;
        }
        // identical columns are maximally redundant even when constant
        if (!r && x == m.column(admitted)) {
          redundant = true;
          break;
        }
      }
      if (!redundant) sel.set.feature_ids.push_back(cand.feature);
    }
    if (!any_column)
      sel.warnings.push_back("no training strategy for primitive " + std::string(to_string(prim)));
    else if (sel.set.feature_ids.empty())
      sel.warnings.push_back("no feature reaches the relevance threshold for primitive " + std::string(to_string(prim)));
    out.emplace(prim, std::move(sel));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark segment selection

struct SegmentRef {
  std::string video_id;
  std::size_t segment_index = 0;

  friend auto operator<=>(const SegmentRef&, const SegmentRef&) = default;
};

struct BenchmarkSet {
  Primitive primitive = Primitive::temporal;
  BucketSpec buckets;
  std::map<std::string, std::vector<SegmentRef>> entries;

  std::size_t segment_count() const {
    std::size_t n = 0;
    for (const auto& [k, v] : entries) n += v.size();
    return n;
  }
};

/// For every bucket key present in the corpus picks up to k segments,
/// preferring distinct videos, in ascending (video_id, segment_index) order.
inline BenchmarkSet select_segments(const FeatureMatrix& m, const BucketSpec& spec, std::size_t k,
                                    Primitive primitive = Primitive::temporal) {
  if (k == 0) throw ConfigError("k must be >= 1");
  std::map<std::string, std::vector<SegmentRef>> groups;
  for (const auto& r : m.rows) groups[encode_key(spec.key_of(r.features))].push_back({r.video_id, r.segment_index});
  BenchmarkSet b{primitive, spec, {}};
  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end());
    std::vector<SegmentRef> picked;
    std::set<std::string> videos;
    std::vector<bool> used(members.size(), false);
    for (std::size_t i = 0; i < members.size() && picked.size() < k; ++i)
      if (videos.insert(members[i].video_id).second) {
        picked.push_back(members[i]);
        used[i] = true;
      }
    for (std::size_t i = 0; i < members.size() && picked.size() < k; ++i)
      if (!used[i]) picked.push_back(members[i]);
    std::sort(picked.begin(), picked.end());
    b.entries.emplace(key, std::move(picked));
  }
  return b;
}

inline void to_json(nlohmann::json& j, const SegmentRef& s) {
  j = nlohmann::json{{"video_id", s.video_id}, {"segment_index", s.segment_index}};
}
inline void from_json(const nlohmann::json& j, SegmentRef& s) {
  s.video_id = j.at("video_id").get<std::string>();
  s.segment_index = j.at("segment_index").get<std::size_t>();
}

inline void to_json(nlohmann::json& j, const BenchmarkSet& b) {
  j = nlohmann::json{{"primitive", std::string(to_string(b.primitive))}, {"buckets", b.buckets}, {"entries", b.entries}};
}
inline void from_json(const nlohmann::json& j, BenchmarkSet& b) {
  b.primitive = primitive_from_string(j.at("primitive").get<std::string>());
  b.buckets = j.at("buckets").get<BucketSpec>();
  b.entries = j.at("entries").get<std::map<std::string, std::vector<SegmentRef>>>();
}

}  // namespace vapbench
