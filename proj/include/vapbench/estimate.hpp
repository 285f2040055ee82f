#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vapbench/benchmark.hpp"
#include "vapbench/errors.hpp"
#include "vapbench/features.hpp"
#include "vapbench/profile.hpp"
#include "vapbench/stats.hpp"
#include "vapbench/trace.hpp"

namespace vapbench {

/// Positions scanned within a segment of n frames at subsample factor f:
/// frame pairs {i, i+1} with i a multiple of 2f, so roughly n/f frames are
/// read and consecutive-frame features remain measurable.
inline std::vector<std::size_t> scan_positions(std::size_t n, std::size_t factor) {
  if (factor < 1) throw ConfigError("subsample factor must be >= 1");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (i % (2 * factor) < 2) out.push_back(i);
  return out;
}

/// Keeps the listed positions; frame indices are preserved so consecutive
/// pairs stay recognizable.
inline DetectionTrace subsample(const DetectionTrace& t, const std::vector<std::size_t>& positions) {
  DetectionTrace out = t;
  out.frames.clear();
  for (auto p : positions) out.frames.push_back(t.frames.at(p));
  return out;
}

struct ScannedSegment {
  std::size_t segment_index = 0;
  FeatureVector features;
  BucketKey key;
  std::size_t frames_scanned = 0;
  std::size_t frames_total = 0;
  bool low_confidence = false;
};

struct FeatureKeyDistribution {
  std::map<std::string, double> weights;
  std::size_t subsample_factor = 1;
  std::string tier;
  std::size_t frames_scanned = 0;
  std::size_t frames_total = 0;
};

struct ScanResult {
  std::string video_id;
  std::vector<ScannedSegment> segments;
  FeatureKeyDistribution distribution;
  /// Cheap-model-cost-weighted share of frames read, relative to running the
  /// full model on every frame.
  double scan_cost = 0.0;
};

struct ScanOptions {
  std::size_t subsample_factor = 10;
  double segment_seconds = 30.0;
  std::string tier = "tiny";
  double tier_cost = 0.1;
  std::size_t min_frames = 3;
  FeatureOptions features;
};

/// Featurizes every segment of a video from a subsample of its (usually
/// cheap-model) trace and buckets it with `buckets`.
inline ScanResult scan_features(const DetectionTrace& trace, const BucketSpec& buckets, const ScanOptions& opt = {}) {
  if (opt.subsample_factor < 1) throw ConfigError("subsample factor must be >= 1");
  if (!(opt.tier_cost > 0.0 && opt.tier_cost <= 1.0)) throw ConfigError("tier cost must lie in (0,1]");
  ScanResult res;
  res.video_id = trace.video_id;
  res.distribution.subsample_factor = opt.subsample_factor;
  res.distribution.tier = opt.tier;
  for (const auto& seg : segmentize(trace, opt.segment_seconds)) {
    const DetectionTrace full = slice(trace, seg);
    const auto pos = scan_positions(full.frames.size(), opt.subsample_factor);
    const DetectionTrace part = subsample(full, pos);
    ScannedSegment s;
    s.segment_index = seg.segment_index;
    s.features = featurize_segment(part, opt.features);
    s.key = buckets.key_of(s.features);
    s.frames_scanned = pos.size();
    s.frames_total = full.frames.size();
    s.low_confidence = pos.size() < opt.min_frames;
    res.distribution.frames_scanned += s.frames_scanned;
    res.distribution.frames_total += s.frames_total;
    res.segments.push_back(std::move(s));
  }
  const double n = static_cast<double>(res.segments.size());
  for (const auto& s : res.segments) res.distribution.weights[encode_key(s.key)] += 1.0 / n;
  if (res.distribution.frames_total > 0)
    res.scan_cost = static_cast<double>(res.distribution.frames_scanned) /
                    static_cast<double>(res.distribution.frames_total) * opt.tier_cost;
  return res;
}

struct AlphaBetaThresholds {
  double high = 0.85;
  double low = 0.7;
};

struct SegmentEstimate {
  std::size_t segment_index = 0;
  std::string key;
  QueryResult query;
  /// Predicted performance of the fixed configuration, when one was given.
  std::optional<PerfPoint> fixed;
  bool low_confidence = false;
};

struct EstimateReport {
  double accuracy_target = 0.9;
  CostDimension dimension = CostDimension::both;
  std::vector<SegmentEstimate> segments;
  double mean_cost = 0.0;
  double p10_cost = 0.0;
  double p50_cost = 0.0;
  double p90_cost = 0.0;
  std::size_t infeasible = 0;
  std::size_t fallbacks = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double scan_cost = 0.0;

  std::vector<double> predicted_costs() const {
    std::vector<double> out;
    for (const auto& s : segments) out.push_back(s.query.point.perf.cost(dimension));
    return out;
  }
};

inline std::pair<double, double> alpha_beta(const std::vector<double>& accuracies, AlphaBetaThresholds th = {}) {
  if (accuracies.empty()) return {0.0, 0.0};
  double a = 0.0, b = 0.0;
  for (double x : accuracies) {
    if (x > th.high) a += 1.0;
    if (x < th.low) b += 1.0;
  }
  const auto n = static_cast<double>(accuracies.size());
  return {a / n, b / n};
}

struct EstimateOptions {
  double accuracy_target = 0.9;
  CostDimension dimension = CostDimension::both;
  /// Knob triple whose per-segment accuracy drives alpha/beta; without it the
  /// accuracies of the target queries are used.
  std::optional<std::array<StrategyConfig, 3>> fixed_knobs;
  AlphaBetaThresholds thresholds;
  MissingKeyPolicy missing = MissingKeyPolicy::nearest;
};

inline EstimateReport estimate_performance(const PCProfile& pc, const ScanResult& scan, const EstimateOptions& opt = {}) {
  if (scan.segments.empty()) throw InputError("scan has no segments");
  EstimateReport rep;
  rep.accuracy_target = opt.accuracy_target;
  rep.dimension = opt.dimension;
  rep.scan_cost = scan.scan_cost;
  std::vector<double> accs;
  for (const auto& s : scan.segments) {
    if (s.key.size() != pc.schema.buckets.arity()) throw InputError("scan buckets do not match the profile schema");
    SegmentEstimate e;
    e.segment_index = s.segment_index;
    e.key = encode_key(s.key);
    e.low_confidence = s.low_confidence;
    e.query = query_min_cost(pc, s.key, opt.accuracy_target, opt.dimension, opt.missing);
    if (!e.query.feasible) ++rep.infeasible;
    if (e.query.fallback) ++rep.fallbacks;
    if (opt.fixed_knobs) {
      e.fixed = point_at(pc, s.key, *opt.fixed_knobs);
      if (!e.fixed) throw ConfigError("fixed configuration is not part of the profile grid");
      accs.push_back(e.fixed->accuracy);
    } else {
      accs.push_back(e.query.point.perf.accuracy);
    }
    rep.segments.push_back(std::move(e));
  }
  auto costs = rep.predicted_costs();
  rep.mean_cost = stats::mean(costs);
  std::sort(costs.begin(), costs.end());
  rep.p10_cost = stats::percentile_sorted(costs, 10);
  rep.p50_cost = stats::percentile_sorted(costs, 50);
  rep.p90_cost = stats::percentile_sorted(costs, 90);
  std::tie(rep.alpha, rep.beta) = alpha_beta(accs, opt.thresholds);
  return rep;
}

/// Measured counterpart of one estimated segment.
struct MeasuredSegment {
  std::size_t segment_index = 0;
  std::optional<double> cost;      // min cost at the accuracy target
  std::optional<double> accuracy;  // of the fixed configuration
};

struct EstimationError {
  std::vector<double> cost_errors;
  double median_cost_error = 0.0;
  double mean_cost_error = 0.0;
  double alpha_error = 0.0;
  double beta_error = 0.0;
  double alpha_measured = 0.0;
  double beta_measured = 0.0;
  double scan_cost_ratio = 0.0;
};

/// `full_run_cost` is the cost of emulating the video at full fidelity, in
/// the same units as the report's scan cost (1.0 for one full-model pass).
inline EstimationError estimation_error(const EstimateReport& rep, const std::vector<MeasuredSegment>& measured,
                                        double full_run_cost = 1.0, AlphaBetaThresholds th = {}) {
  if (!(full_run_cost > 0.0)) throw ConfigError("full run cost must be positive");
  std::map<std::size_t, const MeasuredSegment*> by_index;
  for (const auto& m : measured) by_index[m.segment_index] = &m;
  EstimationError err;
  std::vector<double> accs;
  for (const auto& s : rep.segments) {
    const auto it = by_index.find(s.segment_index);
    if (it == by_index.end()) throw InputError("no measurement for segment " + std::to_string(s.segment_index));
    if (it->second->cost) err.cost_errors.push_back(std::abs(s.query.point.perf.cost(rep.dimension) - *it->second->cost));
    if (it->second->accuracy) accs.push_back(*it->second->accuracy);
  }
  err.median_cost_error = stats::median(err.cost_errors);
  err.mean_cost_error = stats::mean(err.cost_errors);
  std::tie(err.alpha_measured, err.beta_measured) = alpha_beta(accs, th);
  err.alpha_error = std::abs(rep.alpha - err.alpha_measured);
  err.beta_error = std::abs(rep.beta - err.beta_measured);
  err.scan_cost_ratio = rep.scan_cost / full_run_cost;
  return err;
}

inline void to_json(nlohmann::json& j, const EstimateReport& r) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : r.segments) {
    nlohmann::json e{{"segment_index", s.segment_index},
                     {"key", s.key},
                     {"key_used", s.query.key},
                     {"feasible", s.query.feasible},
                     {"fallback", s.query.fallback},
                     {"low_confidence", s.low_confidence},
                     {"perf", s.query.point.perf},
                     {"knobs", s.query.point.knobs}};
    if (s.fixed) e["fixed_perf"] = *s.fixed;
    segs.push_back(std::move(e));
  }
  j = nlohmann::json{{"accuracy_target", r.accuracy_target},
                     {"cost_dimension", std::string(to_string(r.dimension))},
                     {"mean_cost", r.mean_cost},
                     {"p10_cost", r.p10_cost},
                     {"p50_cost", r.p50_cost},
                     {"p90_cost", r.p90_cost},
                     {"infeasible", r.infeasible},
                     {"fallbacks", r.fallbacks},
                     {"alpha", r.alpha},
                     {"beta", r.beta},
                     {"scan_cost", r.scan_cost},
                     {"segments", segs}};
}

inline void to_json(nlohmann::json& j, const EstimationError& e) {
  j = nlohmann::json{{"median_cost_error", e.median_cost_error}, {"mean_cost_error", e.mean_cost_error},
                     {"alpha_error", e.alpha_error},             {"beta_error", e.beta_error},
                     {"alpha_measured", e.alpha_measured},       {"beta_measured", e.beta_measured},
                     {"scan_cost_ratio", e.scan_cost_ratio}};
}

}  // namespace vapbench
