#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "vapbench/accuracy.hpp"
#include "vapbench/errors.hpp"
#include "vapbench/params.hpp"
#include "vapbench/strategies.hpp"
#include "vapbench/trace.hpp"

namespace vapbench {

enum class CostDimension { network, compute, both };

inline std::string_view to_string(CostDimension d) {
  switch (d) {
    case CostDimension::network: return "network";
    case CostDimension::compute: return "compute";
    case CostDimension::both: return "both";
  }
  return "?";
}

inline CostDimension cost_dimension_from_string(std::string_view s) {
  if (s == "network") return CostDimension::network;
  if (s == "compute") return CostDimension::compute;
  if (s == "both") return CostDimension::both;
  throw ConfigError("unknown cost dimension '" + std::string(s) + "'");
}

struct PerfPoint {
  double accuracy = 1.0;
  double network = 1.0;
  double compute = 1.0;

  /// Scalar cost in one dimension; `both` is the mean of the two.
  double cost(CostDimension d) const {
    switch (d) {
      case CostDimension::network: return network;
      case CostDimension::compute: return compute;
      case CostDimension::both: return 0.5 * (network + compute);
    }
    return network;
  }
  friend bool operator==(const PerfPoint&, const PerfPoint&) = default;
};

inline void to_json(nlohmann::json& j, const PerfPoint& p) {
  j = nlohmann::json{{"accuracy", p.accuracy}, {"network", p.network}, {"compute", p.compute}};
}
inline void from_json(const nlohmann::json& j, PerfPoint& p) {
  p.accuracy = j.at("accuracy").get<double>();
  p.network = j.at("network").get<double>();
  p.compute = j.at("compute").get<double>();
}

/// A pipeline v = (temporal, spatial, model).
struct VapConfig {
  StrategyConfig temporal = oracle(Primitive::temporal);
  StrategyConfig spatial = oracle(Primitive::spatial);
  StrategyConfig model = oracle(Primitive::model);
  CostDimension cost_dimension = CostDimension::both;

  const StrategyConfig& stage(Primitive p) const {
    return p == Primitive::temporal ? temporal : p == Primitive::spatial ? spatial : model;
  }
  StrategyConfig& stage(Primitive p) {
    return p == Primitive::temporal ? temporal : p == Primitive::spatial ? spatial : model;
  }
  bool needs_cheap_trace() const {
    return vapbench::needs_cheap_trace(temporal) || vapbench::needs_cheap_trace(spatial) ||
           vapbench::needs_cheap_trace(model);
  }
  friend bool operator==(const VapConfig&, const VapConfig&) = default;
};

inline VapConfig all_oracle(CostDimension d = CostDimension::both) { return VapConfig{.cost_dimension = d}; }

inline void to_json(nlohmann::json& j, const VapConfig& v) {
  j = nlohmann::json{{"temporal", v.temporal},
                     {"spatial", v.spatial},
                     {"model", v.model},
                     {"cost_dimension", std::string(to_string(v.cost_dimension))}};
}

inline void from_json(const nlohmann::json& j, VapConfig& v) {
  v.temporal = j.at("temporal").get<StrategyConfig>();
  v.spatial = j.at("spatial").get<StrategyConfig>();
  v.model = j.at("model").get<StrategyConfig>();
  v.temporal.primitive = Primitive::temporal;
  v.spatial.primitive = Primitive::spatial;
  v.model.primitive = Primitive::model;
  v.cost_dimension = cost_dimension_from_string(j.value("cost_dimension", std::string("both")));
}

struct VapRun {
  DetectionTrace output;
  PerfPoint perf;
  F1Report f1;
  /// Per-stage cost factors in temporal, spatial, model order.
  std::array<CostVector, 3> factors;
};

/// Applies temporal, then spatial, then model pruning; costs are the products
/// of per-stage factors and accuracy is F1 against the input trace.
inline VapRun run_vap(const VapConfig& config, const DetectionTrace& gt, const DetectionTrace* cheap,
                      const DegradationParams& params = {}, const MatchSpec& match = {}) {
  if (config.needs_cheap_trace() && !cheap) throw InputError("pipeline needs a cheap-model trace");
  if (cheap && cheap->frames.size() != gt.frames.size()) throw InputError("cheap trace is not frame-aligned");
  DetectionTrace current = gt;
  materialize_frame_diffs(current);
  VapRun run;
  for (std::size_t s = 0; s < kPrimitives.size(); ++s) {
    auto outcome = apply_strategy(config.stage(kPrimitives[s]), current, cheap, params);
    run.factors[s] = outcome.cost;
    current = std::move(outcome.trace);
  }
  run.f1 = f1_over_segment(current, gt, match);
  run.perf.accuracy = run.f1.f1;
  run.perf.network = run.factors[0].network * run.factors[1].network * run.factors[2].network;
  run.perf.compute = run.factors[0].compute * run.factors[1].compute * run.factors[2].compute;
  run.output = std::move(current);
  return run;
}

// ---------------------------------------------------------------------------
// Presets

struct PresetRow {
  std::string_view name;
  StrategyKind temporal;
  StrategyKind spatial;
  StrategyKind model;
  CostDimension cost_dimension;
};

/// Shipped presets. Glimpse's model stage is a fixed tiny model, expressed as
/// model selection pinned to the "tiny" tier.
inline constexpr std::array<PresetRow, 7> kPresets{{
    {"videostorm", StrategyKind::uniform_sampling, StrategyKind::quality_downsize, StrategyKind::model_select,
     CostDimension::compute},
    {"noscope", StrategyKind::trigger_diff, StrategyKind::oracle, StrategyKind::model_specialize,
     CostDimension::compute},
    {"awstream", StrategyKind::uniform_sampling, StrategyKind::quality_downsize, StrategyKind::oracle,
     CostDimension::network},
    {"glimpse", StrategyKind::trigger_diff, StrategyKind::oracle, StrategyKind::model_select, CostDimension::both},
    {"vigil", StrategyKind::trigger_diff, StrategyKind::region_crop, StrategyKind::oracle, CostDimension::network},
    {"reducto", StrategyKind::trigger_diff, StrategyKind::oracle, StrategyKind::oracle, CostDimension::network},
    {"dds", StrategyKind::oracle, StrategyKind::region_crop, StrategyKind::oracle, CostDimension::network},
}};

/// Strategy combination of a named pipeline with knobs left unset.
inline VapConfig preset(std::string_view name) {
  for (const auto& row : kPresets) {
    if (row.name != name) continue;
    VapConfig v;
    v.temporal = {Primitive::temporal, row.temporal};
    v.spatial = {Primitive::spatial, row.spatial};
    v.model = {Primitive::model, row.model};
    if (name == "glimpse") v.model.tier = "tiny";
    v.cost_dimension = row.cost_dimension;
    return v;
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Knob grids and per-segment tuning

/// Candidate knob settings per primitive; an empty list means "keep the
/// template's stage as is".
struct KnobGrid {
  std::array<std::vector<StrategyConfig>, 3> stages;

  std::vector<StrategyConfig>& operator[](Primitive p) { return stages[static_cast<std::size_t>(p)]; }
  const std::vector<StrategyConfig>& operator[](Primitive p) const { return stages[static_cast<std::size_t>(p)]; }
};

inline std::vector<double> default_sampling_rates() { return {1.0, 1.0 / 2, 1.0 / 5, 1.0 / 10, 1.0 / 15, 1.0 / 30}; }

/// Twelve thresholds, doubling from 1e-3.
inline std::vector<double> default_diff_thresholds() {
  std::vector<double> out;
  for (int k = 0; k < 12; ++k) out.push_back(1e-3 * std::ldexp(1.0, k));
  return out;
}

inline std::vector<double> default_crop_margins() { return {0.0, 4.0, 16.0, 64.0}; }

inline std::vector<std::pair<double, double>> default_specialize_bands() {
  return {{0.5, 0.5}, {0.45, 0.55}, {0.35, 0.65}, {0.25, 0.75}, {0.1, 0.9}};
}

inline std::string default_cheap_tier() { return "tiny"; }

/// Knob values for one strategy kind.
inline std::vector<StrategyConfig> default_knobs(const StrategyConfig& tmpl, const DegradationParams& params) {
  std::vector<StrategyConfig> out;
  auto with = [&](auto&& mutate) {
    StrategyConfig c = tmpl;
    mutate(c);
    out.push_back(c);
  };
  switch (tmpl.kind) {
    case StrategyKind::oracle: out.push_back(tmpl); break;
    case StrategyKind::uniform_sampling:
      for (double r : default_sampling_rates()) with([&](StrategyConfig& c) { c.knob = r; });
      break;
    case StrategyKind::trigger_diff:
      for (double t : default_diff_thresholds()) with([&](StrategyConfig& c) { c.knob = t; });
      break;
    case StrategyKind::quality_downsize:
      for (double q : params.quality_ladder) with([&](StrategyConfig& c) { c.knob = q; });
      break;
    case StrategyKind::region_crop:
      for (double m : default_crop_margins()) with([&](StrategyConfig& c) { c.knob = m; });
      break;
    case StrategyKind::model_select:
      if (!tmpl.tier.empty()) {
        out.push_back(tmpl);
      } else {
        for (const auto& t : params.tiers) with([&](StrategyConfig& c) { c.tier = t.name; });
      }
      break;
    case StrategyKind::model_specialize:
      for (auto [lo, hi] : default_specialize_bands())
        with([&](StrategyConfig& c) {
          if (c.tier.empty()) c.tier = default_cheap_tier();
          c.band_low = lo;
          c.band_high = hi;
        });
      break;
  }
  return out;
}

inline KnobGrid default_grid(const VapConfig& tmpl, const DegradationParams& params) {
  KnobGrid g;
  for (auto p : kPrimitives) g[p] = default_knobs(tmpl.stage(p), params);
  return g;
}

/// Every configuration of the grid in lexicographic (temporal, spatial,
/// model) order.
inline std::vector<VapConfig> expand_grid(const VapConfig& tmpl, const KnobGrid& grid) {
  std::array<std::vector<StrategyConfig>, 3> lists;
  for (auto p : kPrimitives) {
    const auto i = static_cast<std::size_t>(p);
    lists[i] = grid[p].empty() ? std::vector<StrategyConfig>{tmpl.stage(p)} : grid[p];
  }
  std::vector<VapConfig> out;
  for (const auto& t : lists[0])
    for (const auto& s : lists[1])
      for (const auto& m : lists[2]) {
        VapConfig v = tmpl;
        v.temporal = t;
        v.spatial = s;
        v.model = m;
        out.push_back(v);
      }
  return out;
}

struct TuneResult {
  VapConfig config;
  PerfPoint prefix_perf;
  bool met_target = false;
  std::size_t grid_index = 0;
};

/// Index of the preferred point: cheapest with accuracy strictly above the
/// target (ties: higher accuracy, then earlier index); if none qualifies,
/// the most accurate (ties: cheaper, then earlier index).
inline std::pair<std::size_t, bool> pick_operating_point(const std::vector<PerfPoint>& pts, double target,
                                                         CostDimension dim) {
  if (pts.empty()) throw InputError("no candidate operating points");
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!(pts[i].accuracy > target)) continue;
    if (!best || std::make_tuple(pts[i].cost(dim), -pts[i].accuracy) <
                     std::make_tuple(pts[*best].cost(dim), -pts[*best].accuracy))
      best = i;
  }
  if (best) return {*best, true};
  std::size_t fb = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (std::make_tuple(-pts[i].accuracy, pts[i].cost(dim)) < std::make_tuple(-pts[fb].accuracy, pts[fb].cost(dim)))
      fb = i;
  return {fb, false};
}

inline std::size_t prefix_length(std::size_t n) { return n / 3; }

/// Picks the grid configuration for a segment from its first third.
inline TuneResult tune_on_prefix(const VapConfig& tmpl, const KnobGrid& grid, const DetectionTrace& gt,
                                 const DetectionTrace* cheap, double accuracy_target,
                                 const DegradationParams& params = {}, const MatchSpec& match = {}) {
  if (!(accuracy_target > 0.0 && accuracy_target <= 1.0)) throw ConfigError("accuracy target must lie in (0,1]");
  const std::size_t cut = prefix_length(gt.frames.size());
  if (cut == 0) throw InputError("segment prefix is empty");
  const auto configs = expand_grid(tmpl, grid);
  if (configs.empty()) throw ConfigError("knob grid is empty");
  const DetectionTrace gt_prefix = slice_frames(gt, 0, cut);
  std::optional<DetectionTrace> cheap_prefix;
  if (cheap) cheap_prefix = slice_frames(*cheap, 0, cut);
  std::vector<PerfPoint> pts;
  pts.reserve(configs.size());
  for (const auto& c : configs)
    pts.push_back(run_vap(c, gt_prefix, cheap_prefix ? &*cheap_prefix : nullptr, params, match).perf);
  const auto [idx, met] = pick_operating_point(pts, accuracy_target, tmpl.cost_dimension);
  return {configs[idx], pts[idx], met, idx};
}

/// Measures a tuned configuration on the last two thirds of the segment.
inline PerfPoint evaluate_held_out(const VapConfig& config, const DetectionTrace& gt, const DetectionTrace* cheap,
                                   const DegradationParams& params = {}, const MatchSpec& match = {}) {
  const std::size_t cut = prefix_length(gt.frames.size());
  if (cut >= gt.frames.size()) throw InputError("segment has no held-out part");
  const DetectionTrace rest = slice_frames(gt, cut, gt.frames.size());
  std::optional<DetectionTrace> cheap_rest;
  if (cheap) cheap_rest = slice_frames(*cheap, cut, cheap->frames.size());
  return run_vap(config, rest, cheap_rest ? &*cheap_rest : nullptr, params, match).perf;
}

}  // namespace vapbench
