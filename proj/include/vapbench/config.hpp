#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vapbench/accuracy.hpp"
#include "vapbench/benchmark.hpp"
#include "vapbench/corpus.hpp"
#include "vapbench/errors.hpp"
#include "vapbench/estimate.hpp"
#include "vapbench/evalmetrics.hpp"
#include "vapbench/features.hpp"
#include "vapbench/params.hpp"
#include "vapbench/synth.hpp"

namespace vapbench {

/// Built-in defaults. The shipped config/default.json mirrors this object
/// key for key (with comments); a config file may only name keys that exist
/// here.
inline nlohmann::json default_config() {
  using nlohmann::json;
  const FeatureOptions fo;
  const SelectionOptions so;
  const ScanOptions sc;
  const AlphaBetaThresholds ab;
  const RegimeOptions ro;
  ScenarioSpec base;
  base.duration = 300.0;
  base.width = 640;
  base.height = 360;
  // recorded cheap traces miss objects independently of the pipeline's tiers
  base.cheap_tier.min_area_fraction = 4e-4;
  base.cheap_tier.miss_noise_seed = 1009;
  json base_json = base;
  base_json.erase("video_id");
  base_json.erase("seed");
  auto video = [](const char* id, double arrival, std::pair<double, double> area, std::pair<double, double> speed) {
    return json{{"video_id", id}, {"arrival_rate", arrival}, {"area", {area.first, area.second}},
                {"speed", {speed.first, speed.second}}};
  };
  return json{
      {"seed", 1},
      {"jobs", 1},
      {"segment_seconds", 30.0},
      {"accuracy_target", 0.9},
      {"accuracy_band", {0.9, 0.95}},
      {"cost_dimension", "both"},
      {"match", {{"iou_threshold", 0.5}, {"class_sensitive", true}}},
      {"degradation", DegradationParams{}},
      {"features",
       {{"speed_cap", fo.speed_cap},
        {"association_iou", fo.association_iou},
        {"neutral_value", fo.neutral_value},
        {"total_area_as_sum", fo.total_area_as_sum}}},
      {"selection",
       {{"source", "cheap"},
        {"relevance_threshold", so.relevance_threshold},
        {"redundancy_threshold", so.redundancy_threshold},
        {"max_features", so.max_features},
        {"allow_above_band", false},
        {"strategies",
         {"uniform_sampling", "trigger_diff", "quality_downsize", "region_crop", "model_select", "model_specialize"}}}},
      {"benchmark", {{"buckets", 4}, {"segments_per_bucket", 4}, {"clip_percentile", nullptr}}},
      {"scan", {{"subsample_factor", sc.subsample_factor}, {"tier", sc.tier}, {"min_frames", sc.min_frames}}},
      {"estimate", {{"alpha_above", ab.high}, {"beta_below", ab.low}, {"missing_key", "nearest"}}},
      {"regime", {{"tie_epsilon", ro.tie_epsilon}, {"marginalization", "populated_mean"}, {"slice", json::object()}}},
      {"synth",
       {{"base", base_json},
        {"videos",
         {video("highway", 1.0, {3e-3, 4.5e-3}, {1.4, 1.48}), video("urban", 1.2, {4e-3, 6e-3}, {1.05, 1.06}),
          video("rural", 0.07, {8e-3, 1.2e-2}, {1.1, 1.12}), video("parking", 0.2, {1e-2, 1.5e-2}, {1.005, 1.006}),
          video("aerial", 0.45, {8e-4, 1.2e-3}, {1.2, 1.24}), video("closeup", 0.3, {3e-2, 4.5e-2}, {1.15, 1.18})}}}},
  };
}

namespace detail {

inline void check_known_keys(const nlohmann::json& base, const nlohmann::json& overlay, const std::string& path) {
  if (!overlay.is_object()) throw ConfigError("config " + (path.empty() ? std::string("root") : path) + " must be an object");
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    const std::string where = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + where + "'");
    const auto& b = base.at(it.key());
    // maps with free-form keys are taken as given
    if (b.is_object() && !b.empty()) check_known_keys(b, it.value(), where);
  }
}

// unlike merge_patch, null is a value here rather than a deletion
inline void merge_into(nlohmann::json& base, const nlohmann::json& overlay) {
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    auto& slot = base[it.key()];
    if (slot.is_object() && it.value().is_object())
      merge_into(slot, it.value());
    else
      slot = it.value();
  }
}

}  // namespace detail

/// Applies `overlay` on top of `base` (objects merge, everything else
/// replaces) after rejecting keys the base does not know.
inline nlohmann::json layer_config(nlohmann::json base, const nlohmann::json& overlay) {
  detail::check_known_keys(base, overlay, "");
  detail::merge_into(base, overlay);
  return base;
}

/// Parses a config file; `//` and `/* */` comments are allowed.
inline nlohmann::json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path);
  try {
    return nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
}

/// Typed view of a layered config.
struct Settings {
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  double segment_seconds = 30.0;
  double accuracy_target = 0.9;
  AccuracyBand band;
  CostDimension dimension = CostDimension::both;
  MatchSpec match;
  DegradationParams degradation;
  FeatureOptions features;
  FeatureSource selection_source = FeatureSource::cheap;
  SelectionOptions selection;
  bool allow_above_band = false;
  std::vector<StrategyKind> selection_strategies;
  BucketOptions buckets;
  std::size_t segments_per_bucket = 4;
  ScanOptions scan;
  AlphaBetaThresholds thresholds;
  MissingKeyPolicy missing = MissingKeyPolicy::nearest;
  RegimeOptions regime;
  /// Slice bucket per non-plotted feature, by feature name.
  std::map<std::string, int> regime_slice;
  nlohmann::json synth_base;
  std::vector<nlohmann::json> synth_videos;

  std::vector<ScenarioSpec> scenarios() const {
    std::vector<ScenarioSpec> out;
    for (std::size_t i = 0; i < synth_videos.size(); ++i) {
      nlohmann::json j = synth_base;
      detail::merge_into(j, synth_videos[i]);
      auto s = j.get<ScenarioSpec>();
      if (!synth_videos[i].contains("seed")) s.seed = detail::combine(seed, i);
      if (!synth_videos[i].contains("video_id")) s.video_id = "video" + std::to_string(i);
      validate(s);
      out.push_back(std::move(s));
    }
    return out;
  }
};

inline Settings settings_from(const nlohmann::json& j) {
  Settings s;
  try {
    s.seed = j.at("seed").get<std::uint64_t>();
    s.jobs = j.at("jobs").get<std::size_t>();
    s.segment_seconds = j.at("segment_seconds").get<double>();
    s.accuracy_target = j.at("accuracy_target").get<double>();
    s.band = {j.at("accuracy_band").at(0).get<double>(), j.at("accuracy_band").at(1).get<double>()};
    s.dimension = cost_dimension_from_string(j.at("cost_dimension").get<std::string>());
    s.match.iou_threshold = j.at("match").at("iou_threshold").get<double>();
    s.match.class_sensitive = j.at("match").at("class_sensitive").get<bool>();
    s.degradation = j.at("degradation").get<DegradationParams>();
    const auto& f = j.at("features");
    s.features.speed_cap = f.at("speed_cap").get<double>();
    s.features.association_iou = f.at("association_iou").get<double>();
    s.features.neutral_value = f.at("neutral_value").get<double>();
    s.features.total_area_as_sum = f.at("total_area_as_sum").get<bool>();
    const auto& sel = j.at("selection");
    const auto source = sel.at("source").get<std::string>();
    if (source != "cheap" && source != "ground_truth") throw ConfigError("selection.source must be cheap or ground_truth");
    s.selection_source = source == "cheap" ? FeatureSource::cheap : FeatureSource::ground_truth;
    s.selection.relevance_threshold = sel.at("relevance_threshold").get<double>();
    s.selection.redundancy_threshold = sel.at("redundancy_threshold").get<double>();
    s.selection.max_features = sel.at("max_features").get<std::size_t>();
    s.allow_above_band = sel.at("allow_above_band").get<bool>();
    for (const auto& k : sel.at("strategies")) s.selection_strategies.push_back(strategy_kind_from_string(k.get<std::string>()));
    const auto& b = j.at("benchmark");
    s.buckets.n = b.at("buckets").get<int>();
    if (!b.at("clip_percentile").is_null()) s.buckets.clip_percentile = b.at("clip_percentile").get<double>();
    s.segments_per_bucket = b.at("segments_per_bucket").get<std::size_t>();
    const auto& sc = j.at("scan");
    s.scan.subsample_factor = sc.at("subsample_factor").get<std::size_t>();
    s.scan.tier = sc.at("tier").get<std::string>();
    s.scan.min_frames = sc.at("min_frames").get<std::size_t>();
    s.scan.segment_seconds = s.segment_seconds;
    s.scan.features = s.features;
    const auto& e = j.at("estimate");
    s.thresholds = {e.at("alpha_above").get<double>(), e.at("beta_below").get<double>()};
    const auto missing = e.at("missing_key").get<std::string>();
    if (missing != "nearest" && missing != "error") throw ConfigError("estimate.missing_key must be nearest or error");
    s.missing = missing == "nearest" ? MissingKeyPolicy::nearest : MissingKeyPolicy::error;
    const auto& r = j.at("regime");
    s.regime.tie_epsilon = r.at("tie_epsilon").get<double>();
    const auto mode = r.at("marginalization").get<std::string>();
    if (mode != "populated_mean" && mode != "fixed_slice")
      throw ConfigError("regime.marginalization must be populated_mean or fixed_slice");
    s.regime.mode = mode == "populated_mean" ? Marginalization::populated_mean : Marginalization::fixed_slice;
    s.regime_slice = r.at("slice").get<std::map<std::string, int>>();
    s.synth_base = j.at("synth").at("base");
    s.synth_videos = j.at("synth").at("videos").get<std::vector<nlohmann::json>>();
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("config: ") + ex.what());
  }
  if (s.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (!(s.segment_seconds > 0.0)) throw ConfigError("segment_seconds must be positive");
  if (!(s.accuracy_target > 0.0 && s.accuracy_target <= 1.0)) throw ConfigError("accuracy_target must lie in (0,1]");
  if (!(s.band.lo <= s.band.hi)) throw ConfigError("accuracy_band must be ascending");
  if (s.segments_per_bucket < 1) throw ConfigError("segments_per_bucket must be >= 1");
  validate(s.match);
  validate(s.degradation);
  s.scan.tier_cost = s.degradation.tier(s.scan.tier).cost_factor;
  s.regime.accuracy_target = s.accuracy_target;
  s.regime.dimension = s.dimension;
  for (const auto& [name, bucket] : s.regime_slice) s.regime.slice[feature_index(name)] = bucket;
  return s;
}

}  // namespace vapbench
