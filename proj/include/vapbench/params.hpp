#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vapbench/errors.hpp"
#include "vapbench/trace.hpp"

namespace vapbench {

/// A detector tier standing in for one DNN of a model family.
struct ModelTier {
  std::string name;
  double cost_factor = 1.0;
  double min_area_fraction = 0.0;
  double confidence_scale = 1.0;
  double miss_noise = 0.0;  // fraction of detections dropped pseudo-randomly
  std::uint64_t miss_noise_seed = 0;

  bool is_identity() const { return min_area_fraction == 0.0 && confidence_scale == 1.0 && miss_noise == 0.0; }
};

/// Surrogate degradation constants. These are calibration knobs for the
/// emulator, not measured properties of real detectors.
struct DegradationParams {
  std::vector<double> quality_ladder{1.0, 0.75, 0.5, 0.25};
  double a_min = 2e-4;  // minimum (area fraction * q^2) that survives downsizing
  double gamma = 0.5;   // confidence scale exponent under downsizing
  double rho = 2.0;     // network factor exponent under downsizing
  double bits_per_pixel = kDefaultBitsPerPixel;
  std::vector<ModelTier> tiers{
      {"full", 1.0, 0.0, 1.0, 0.0, 0},
      {"medium", 0.5, 3e-4, 0.95, 0.03, 11},
      {"small", 0.25, 1e-3, 0.9, 0.08, 23},
      {"tiny", 0.1, 2e-3, 0.8, 0.15, 37},
  };

  const ModelTier& tier(const std::string& name) const {
    for (const auto& t : tiers)
      if (t.name == name) return t;
    throw ConfigError("unknown model tier '" + name + "'");
  }

  bool in_ladder(double q) const {
    return std::any_of(quality_ladder.begin(), quality_ladder.end(),
                       [q](double l) { return std::abs(l - q) <= 1e-9; });
  }
};

inline void validate(const ModelTier& t) {
  if (t.name.empty()) throw ConfigError("model tier needs a name");
  if (!(t.cost_factor > 0.0 && t.cost_factor <= 1.0)) throw ConfigError("tier '" + t.name + "': cost_factor must lie in (0,1]");
  if (!(t.min_area_fraction >= 0.0)) throw ConfigError("tier '" + t.name + "': min_area_fraction must be >= 0");
  if (!(t.confidence_scale > 0.0 && t.confidence_scale <= 1.0))
    throw ConfigError("tier '" + t.name + "': confidence_scale must lie in (0,1]");
  if (!(t.miss_noise >= 0.0 && t.miss_noise < 1.0)) throw ConfigError("tier '" + t.name + "': miss_noise must lie in [0,1)");
}

inline void validate(const DegradationParams& p) {
  if (p.quality_ladder.empty()) throw ConfigError("quality_ladder is empty");
  for (double q : p.quality_ladder)
    if (!(q > 0.0 && q <= 1.0)) throw ConfigError("quality levels must lie in (0,1]");
  if (!(p.a_min >= 0.0)) throw ConfigError("A_min must be >= 0");
  if (!(p.gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
  if (!(p.rho > 0.0)) throw ConfigError("rho must be > 0");
  if (!(p.bits_per_pixel > 0.0)) throw ConfigError("bits_per_pixel must be > 0");
  bool has_full = false;
  for (const auto& t : p.tiers) {
    validate(t);
    if (t.name == "full") {
      has_full = true;
      if (t.cost_factor != 1.0 || !t.is_identity()) throw ConfigError("tier 'full' must have cost 1 and no degradation");
    }
  }
  if (!has_full) throw ConfigError("tier registry needs a 'full' tier");
}

inline void to_json(nlohmann::json& j, const ModelTier& t) {
  j = nlohmann::json{{"name", t.name},
                     {"cost_factor", t.cost_factor},
                     {"min_area_fraction", t.min_area_fraction},
                     {"confidence_scale", t.confidence_scale},
                     {"miss_noise", t.miss_noise},
                     {"seed", t.miss_noise_seed}};
}

inline void from_json(const nlohmann::json& j, ModelTier& t) {
  t.name = j.at("name").get<std::string>();
  t.cost_factor = j.at("cost_factor").get<double>();
  t.min_area_fraction = j.at("min_area_fraction").get<double>();
  t.confidence_scale = j.at("confidence_scale").get<double>();
  t.miss_noise = j.value("miss_noise", 0.0);
  t.miss_noise_seed = j.value("seed", std::uint64_t{0});
}

inline void to_json(nlohmann::json& j, const DegradationParams& p) {
  j = nlohmann::json{{"quality_ladder", p.quality_ladder}, {"A_min", p.a_min},   {"gamma", p.gamma},
                     {"rho", p.rho},                       {"bits_per_pixel", p.bits_per_pixel}, {"tiers", p.tiers}};
}

/// Missing keys keep their defaults so partial files layer over them.
inline void from_json(const nlohmann::json& j, DegradationParams& p) {
  if (j.contains("quality_ladder")) p.quality_ladder = j["quality_ladder"].get<std::vector<double>>();
  p.a_min = j.value("A_min", p.a_min);
  p.gamma = j.value("gamma", p.gamma);
  p.rho = j.value("rho", p.rho);
  p.bits_per_pixel = j.value("bits_per_pixel", p.bits_per_pixel);
  if (j.contains("tiers")) p.tiers = j["tiers"].get<std::vector<ModelTier>>();
}

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t combine(std::uint64_t h, std::uint64_t v) { return mix64(h ^ (v + 0x632be59bd9b4e019ULL + (h << 6))); }

}  // namespace detail

/// Uniform [0,1) draw keyed on the detection's class and geometry, so the
/// same physical box gets the same draw wherever it appears (including frames
/// carried over by temporal pruning).
inline double detection_noise(const Detection& d, std::uint64_t seed, std::uint64_t stream = 0) {
  std::uint64_t h = detail::mix64(seed ^ (stream * 0xd1b54a32d192ed03ULL));
  h = detail::combine(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(d.class_id)));
  h = detail::combine(h, std::bit_cast<std::uint64_t>(d.box.x));
  h = detail::combine(h, std::bit_cast<std::uint64_t>(d.box.y));
  h = detail::combine(h, std::bit_cast<std::uint64_t>(d.box.w));
  h = detail::combine(h, std::bit_cast<std::uint64_t>(d.box.h));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Applies a tier's degradation to one frame's detections.
inline std::vector<Detection> degrade_with_tier(const std::vector<Detection>& dets, const ModelTier& tier,
                                                double frame_area) {
  if (tier.is_identity()) return dets;
  std::vector<Detection> out;
  out.reserve(dets.size());
  for (const auto& d : dets) {
    if (d.box.area() / frame_area < tier.min_area_fraction) continue;
    if (tier.miss_noise > 0.0 && detection_noise(d, tier.miss_noise_seed) < tier.miss_noise) continue;
    Detection k = d;
    k.confidence = std::clamp(d.confidence * tier.confidence_scale, 0.0, 1.0);
    out.push_back(k);
  }
  return out;
}

}  // namespace vapbench
