#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vapbench/benchmark.hpp"
#include "vapbench/errors.hpp"
#include "vapbench/profile.hpp"
#include "vapbench/stats.hpp"

namespace vapbench {

// ---------------------------------------------------------------------------
// Coverage and variance

struct ClarityScore {
  std::optional<double> coverage;  // missing when the reference range is degenerate
  double variance = 0.0;           // standard deviation of the evaluated costs
  double band_lo = 0.9;
  double band_hi = 0.95;
  std::size_t evaluated = 0;
};

/// Coverage is the evaluated cost range over the reference cost range,
/// clipped to [0,1]; variance is the standard deviation of the evaluated
/// costs.
inline ClarityScore clarity_score(const std::vector<double>& evaluated, const std::vector<double>& reference,
                                  double band_lo = 0.9, double band_hi = 0.95) {
  if (evaluated.empty() || reference.empty()) throw InputError("clarity score needs nonempty cost sets");
  ClarityScore s;
  s.band_lo = band_lo;
  s.band_hi = band_hi;
  s.evaluated = evaluated.size();
  const auto [rlo, rhi] = stats::min_max(reference);
  const auto [elo, ehi] = stats::min_max(evaluated);
  if (rhi > rlo) s.coverage = std::clamp((ehi - elo) / (rhi - rlo), 0.0, 1.0);
  s.variance = stats::stddev(evaluated);
  return s;
}

inline void to_json(nlohmann::json& j, const ClarityScore& s) {
  j = nlohmann::json{{"coverage", s.coverage ? nlohmann::json(*s.coverage) : nlohmann::json(nullptr)},
                     {"variance", s.variance},
                     {"accuracy_band", {s.band_lo, s.band_hi}},
                     {"evaluated", s.evaluated}};
}

// ---------------------------------------------------------------------------
// Profile discrepancy

inline std::vector<double> default_accuracy_levels() { return {0.8, 0.85, 0.9, 0.95}; }

/// Minimum cost among points reaching the accuracy level.
inline std::optional<double> min_cost_reaching(const std::vector<FrontierPoint>& pts, double level, CostDimension dim) {
  std::optional<double> best;
  for (const auto& p : pts)
    if (p.perf.accuracy >= level && (!best || p.perf.cost(dim) < *best)) best = p.perf.cost(dim);
  return best;
}

struct Discrepancy {
  double mean = 0.0;
  std::size_t comparisons = 0;
  std::size_t shared_keys = 0;
};

/// Mean absolute cost gap over keys present in both profiles and the given
/// accuracy levels; a (key, level) pair counts when both profiles reach it.
inline Discrepancy profile_discrepancy(const PCProfile& a, const PCProfile& b, CostDimension dim,
                                       const std::vector<double>& levels = default_accuracy_levels()) {
  if (a.schema.buckets != b.schema.buckets) throw InputError("profiles use different bucket schemas");
  Discrepancy d;
  double sum = 0.0;
  for (const auto& [key, pts] : a.table) {
    const auto it = b.table.find(key);
    if (it == b.table.end()) continue;
    ++d.shared_keys;
    for (double lv : levels) {
      const auto ca = min_cost_reaching(pts, lv, dim);
      const auto cb = min_cost_reaching(it->second, lv, dim);
      if (!ca || !cb) continue;
      sum += std::abs(*ca - *cb);
      ++d.comparisons;
    }
  }
  if (d.comparisons) d.mean = sum / static_cast<double>(d.comparisons);
  return d;
}

// ---------------------------------------------------------------------------
// Conditional correlation

struct ConditionalCorrelation {
  std::optional<double> r_high;  // x2 >= split
  std::size_t n_high = 0;
  std::optional<double> r_low;   // x2 < split
  std::size_t n_low = 0;
};

inline ConditionalCorrelation conditional_correlation(const std::vector<double>& x1, const std::vector<double>& cost,
                                                      const std::vector<double>& x2, double split) {
  if (x1.size() != cost.size() || x1.size() != x2.size()) throw InputError("conditional correlation columns differ in length");
  std::vector<double> hx, hy, lx, ly;
  for (std::size_t i = 0; i < x1.size(); ++i) {
    if (x2[i] >= split) {
      hx.push_back(x1[i]);
      hy.push_back(cost[i]);
    } else {
      lx.push_back(x1[i]);
      ly.push_back(cost[i]);
    }
  }
  return {stats::pearson(hx, hy), hx.size(), stats::pearson(lx, ly), lx.size()};
}

/// Same analysis on a feature matrix with one cost value per row.
inline ConditionalCorrelation conditional_correlation(const FeatureMatrix& m, const std::vector<std::optional<double>>& cost,
                                                      std::size_t x1, std::size_t x2, double split) {
  if (cost.size() != m.rows.size()) throw InputError("cost column does not match the matrix");
  std::vector<double> a, c, b;
  for (std::size_t i = 0; i < m.rows.size(); ++i)
    if (cost[i]) {
      a.push_back(m.rows[i].features.values[x1]);
      c.push_back(*cost[i]);
      b.push_back(m.rows[i].features.values[x2]);
    }
  return conditional_correlation(a, c, b, split);
}

inline void to_json(nlohmann::json& j, const ConditionalCorrelation& c) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  j = nlohmann::json{{"r_high", opt(c.r_high)}, {"n_high", c.n_high}, {"r_low", opt(c.r_low)}, {"n_low", c.n_low}};
}

// ---------------------------------------------------------------------------
// Operating-regime map

enum class RegimeCell { first, second, tie, no_data };

inline std::string_view to_string(RegimeCell c) {
  switch (c) {
    case RegimeCell::first: return "first";
    case RegimeCell::second: return "second";
    case RegimeCell::tie: return "tie";
    case RegimeCell::no_data: return "no_data";
  }
  return "?";
}

enum class Marginalization { populated_mean, fixed_slice };

struct RegimeOptions {
  double accuracy_target = 0.9;
  CostDimension dimension = CostDimension::both;
  /// Relative tie tolerance: |a-b| <= eps * max(a, b).
  double tie_epsilon = 0.01;
  Marginalization mode = Marginalization::populated_mean;
  /// Bucket indices of the non-plotted features in fixed_slice mode, keyed by
  /// feature id.
  std::map<std::size_t, int> slice;
};

struct RegimeMap {
  std::string first;
  std::string second;
  std::size_t feature_x = 0;
  std::size_t feature_y = 0;
  int nx = 0;
  int ny = 0;
  std::vector<std::vector<RegimeCell>> cells;                 // [y][x]
  std::vector<std::vector<std::optional<double>>> cost_first;  // [y][x]
  std::vector<std::vector<std::optional<double>>> cost_second;
};

namespace detail {

inline std::vector<std::vector<std::optional<double>>> regime_costs(const PrimitiveProfile& p, std::size_t fx,
                                                                   std::size_t fy, int nx, int ny,
                                                                   const RegimeOptions& opt) {
  const auto& ids = p.buckets.feature_ids;
  const auto ix = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), fx) - ids.begin());
  const auto iy = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), fy) - ids.begin());
  std::vector<std::vector<double>> sum(static_cast<std::size_t>(ny), std::vector<double>(static_cast<std::size_t>(nx), 0.0));
  std::vector<std::vector<int>> count(static_cast<std::size_t>(ny), std::vector<int>(static_cast<std::size_t>(nx), 0));
  for (const auto& [k, entries] : p.table) {
    const auto key = decode_key(k);
    if (key.size() != ids.size()) throw InputError("profile key arity does not match its buckets");
    if (opt.mode == Marginalization::fixed_slice) {
      bool on_slice = true;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i == ix || i == iy) continue;
        const auto it = opt.slice.find(ids[i]);
        if (it == opt.slice.end()) throw ConfigError("fixed-slice mode needs a bucket for " + feature_names()[ids[i]]);
        on_slice = on_slice && it->second == key[i];
      }
      if (!on_slice) continue;
    }
    std::optional<double> best;
    for (const auto& e : entries)
      if (e.accuracy >= opt.accuracy_target && (!best || e.perf().cost(opt.dimension) < *best))
        best = e.perf().cost(opt.dimension);
    if (!best) continue;
    const auto x = static_cast<std::size_t>(key[ix]);
    const auto y = static_cast<std::size_t>(key[iy]);
    sum[y][x] += *best;
    count[y][x] += 1;
  }
  std::vector<std::vector<std::optional<double>>> out(static_cast<std::size_t>(ny),
                                                      std::vector<std::optional<double>>(static_cast<std::size_t>(nx)));
  for (std::size_t y = 0; y < out.size(); ++y)
    for (std::size_t x = 0; x < out[y].size(); ++x)
      if (count[y][x]) out[y][x] = sum[y][x] / count[y][x];
  return out;
}

inline std::pair<int, std::vector<double>> axis_of(const PrimitiveProfile& p, std::size_t f) {
  const auto& ids = p.buckets.feature_ids;
  const auto it = std::find(ids.begin(), ids.end(), f);
  if (it == ids.end())
    throw InputError("profile of " + std::string(to_string(p.kind)) + " does not bucket " + feature_names().at(f));
  const auto i = static_cast<std::size_t>(it - ids.begin());
  return {p.buckets.buckets_for(i), p.buckets.edges[i]};
}

}  // namespace detail

/// Per cell of the two plotted features: the strategy with the lower
/// minimum cost at accuracy >= target, or a tie, or no data when either
/// strategy lacks an entry there.
inline RegimeMap regime_map(const PrimitiveProfile& a, const PrimitiveProfile& b, std::size_t feature_x,
                            std::size_t feature_y, const RegimeOptions& opt = {}) {
  if (feature_x == feature_y) throw ConfigError("regime map needs two distinct features");
  if (!(opt.tie_epsilon >= 0.0)) throw ConfigError("tie epsilon must be >= 0");
  const auto [nx, ex] = detail::axis_of(a, feature_x);
  const auto [ny, ey] = detail::axis_of(a, feature_y);
  if (detail::axis_of(b, feature_x).second != ex || detail::axis_of(b, feature_y).second != ey)
    throw InputError("strategies bucket the plotted features differently");
  RegimeMap m;
  m.first = std::string(to_string(a.kind));
  m.second = std::string(to_string(b.kind));
  m.feature_x = feature_x;
  m.feature_y = feature_y;
  m.nx = nx;
  m.ny = ny;
  m.cost_first = detail::regime_costs(a, feature_x, feature_y, nx, ny, opt);
  m.cost_second = detail::regime_costs(b, feature_x, feature_y, nx, ny, opt);
  m.cells.assign(static_cast<std::size_t>(ny), std::vector<RegimeCell>(static_cast<std::size_t>(nx), RegimeCell::no_data));
  for (std::size_t y = 0; y < m.cells.size(); ++y)
    for (std::size_t x = 0; x < m.cells[y].size(); ++x) {
      const auto& ca = m.cost_first[y][x];
      const auto& cb = m.cost_second[y][x];
      if (!ca || !cb) continue;
      if (std::abs(*ca - *cb) <= opt.tie_epsilon * std::max(*ca, *cb))
        m.cells[y][x] = RegimeCell::tie;
      else
        m.cells[y][x] = *ca < *cb ? RegimeCell::first : RegimeCell::second;
    }
  return m;
}

inline void to_json(nlohmann::json& j, const RegimeMap& m) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& row : m.cells) {
    nlohmann::json r = nlohmann::json::array();
    for (auto c : row) r.push_back(std::string(to_string(c)));
    cells.push_back(r);
  }
  j = nlohmann::json{{"first", m.first},
                     {"second", m.second},
                     {"feature_x", feature_names().at(m.feature_x)},
                     {"feature_y", feature_names().at(m.feature_y)},
                     {"cells", cells}};
}

}  // namespace vapbench
