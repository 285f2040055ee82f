#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vapbench/errors.hpp"
#include "vapbench/geometry.hpp"
#include "vapbench/params.hpp"
#include "vapbench/trace.hpp"

namespace vapbench {

enum class Primitive { temporal, spatial, model };

inline constexpr std::array<Primitive, 3> kPrimitives{Primitive::temporal, Primitive::spatial, Primitive::model};

enum class StrategyKind {
  oracle,
  uniform_sampling,
  trigger_diff,
  quality_downsize,
  region_crop,
  model_select,
  model_specialize,
};

inline std::string_view to_string(Primitive p) {
  switch (p) {
    case Primitive::temporal: return "temporal";
    case Primitive::spatial: return "spatial";
    case Primitive::model: return "model";
  }
  return "?";
}

inline Primitive primitive_from_string(std::string_view s) {
  for (auto p : kPrimitives)
    if (to_string(p) == s) return p;
  throw ConfigError("unknown primitive '" + std::string(s) + "'");
}

inline std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::oracle: return "oracle";
    case StrategyKind::uniform_sampling: return "uniform_sampling";
    case StrategyKind::trigger_diff: return "trigger_diff";
    case StrategyKind::quality_downsize: return "quality_downsize";
    case StrategyKind::region_crop: return "region_crop";
    case StrategyKind::model_select: return "model_select";
    case StrategyKind::model_specialize: return "model_specialize";
  }
  return "?";
}

inline StrategyKind strategy_kind_from_string(std::string_view s) {
  constexpr std::array kinds{StrategyKind::oracle,           StrategyKind::uniform_sampling, StrategyKind::trigger_diff,
                             StrategyKind::quality_downsize, StrategyKind::region_crop,      StrategyKind::model_select,
                             StrategyKind::model_specialize};
  for (auto k : kinds)
    if (to_string(k) == s) return k;
  // short aliases used on the command line
  if (s == "uniform") return StrategyKind::uniform_sampling;
  if (s == "trigger") return StrategyKind::trigger_diff;
  if (s == "downsize") return StrategyKind::quality_downsize;
  if (s == "crop") return StrategyKind::region_crop;
  if (s == "select") return StrategyKind::model_select;
  if (s == "specialize") return StrategyKind::model_specialize;
  throw ConfigError("unknown strategy '" + std::string(s) + "'");
}

inline Primitive primitive_of(StrategyKind k, Primitive oracle_primitive) {
  switch (k) {
    case StrategyKind::uniform_sampling:
    case StrategyKind::trigger_diff: return Primitive::temporal;
    case StrategyKind::quality_downsize:
    case StrategyKind::region_crop: return Primitive::spatial;
    case StrategyKind::model_select:
    case StrategyKind::model_specialize: return Primitive::model;
    case StrategyKind::oracle: return oracle_primitive;
  }
  return oracle_primitive;
}

/// One strategy with its knob. `knob` is the sampling rate, diff threshold,
/// quality level or crop margin depending on `kind`; model strategies use
/// `tier` (the selected tier, or the cheap tier for specialization) and the
/// ambiguity band.
struct StrategyConfig {
  Primitive primitive = Primitive::temporal;
  StrategyKind kind = StrategyKind::oracle;
  double knob = 0.0;
  std::string tier;
  double band_low = 0.0;
  double band_high = 0.0;

  bool is_oracle() const { return kind == StrategyKind::oracle; }
  friend bool operator==(const StrategyConfig&, const StrategyConfig&) = default;
};

inline StrategyConfig oracle(Primitive p) { return StrategyConfig{p, StrategyKind::oracle}; }

inline StrategyConfig uniform_sampling(double rate) {
  return {Primitive::temporal, StrategyKind::uniform_sampling, rate};
}
inline StrategyConfig trigger_diff(double threshold) {
  return {Primitive::temporal, StrategyKind::trigger_diff, threshold};
}
inline StrategyConfig quality_downsize(double q) { return {Primitive::spatial, StrategyKind::quality_downsize, q}; }
inline StrategyConfig region_crop(double margin) { return {Primitive::spatial, StrategyKind::region_crop, margin}; }
inline StrategyConfig model_select(std::string tier) {
  return {Primitive::model, StrategyKind::model_select, 0.0, std::move(tier)};
}
inline StrategyConfig model_specialize(std::string cheap_tier, double band_low, double band_high) {
  return {Primitive::model, StrategyKind::model_specialize, 0.0, std::move(cheap_tier), band_low, band_high};
}

/// Human-readable knob, e.g. "uniform_sampling(r=0.2)".
inline std::string knob_label(const StrategyConfig& c) {
  std::ostringstream os;
  os << to_string(c.kind);
  switch (c.kind) {
    case StrategyKind::oracle: break;
    case StrategyKind::uniform_sampling: os << "(r=" << c.knob << ")"; break;
    case StrategyKind::trigger_diff: os << "(theta=" << c.knob << ")"; break;
    case StrategyKind::quality_downsize: os << "(q=" << c.knob << ")"; break;
    case StrategyKind::region_crop: os << "(m=" << c.knob << ")"; break;
    case StrategyKind::model_select: os << "(" << c.tier << ")"; break;
    case StrategyKind::model_specialize: os << "(" << c.tier << ",[" << c.band_low << "," << c.band_high << "])"; break;
  }
  return os.str();
}

inline void validate(const StrategyConfig& c, const DegradationParams& params) {
  if (primitive_of(c.kind, c.primitive) != c.primitive)
    throw ConfigError("strategy " + std::string(to_string(c.kind)) + " does not belong to primitive " +
                      std::string(to_string(c.primitive)));
  switch (c.kind) {
    case StrategyKind::oracle: break;
    case StrategyKind::uniform_sampling:
      if (!(c.knob > 0.0 && c.knob <= 1.0)) throw ConfigError("sampling rate must lie in (0,1]");
      break;
    case StrategyKind::trigger_diff:
      if (!(c.knob >= 0.0)) throw ConfigError("diff threshold must be >= 0");
      break;
    case StrategyKind::quality_downsize:
      if (!params.in_ladder(c.knob)) throw ConfigError("quality level not in ladder");
      break;
    case StrategyKind::region_crop:
      if (!(c.knob >= 0.0)) throw ConfigError("crop margin must be >= 0");
      break;
    case StrategyKind::model_select: params.tier(c.tier); break;
    case StrategyKind::model_specialize:
      params.tier(c.tier);
      if (!(c.band_low <= c.band_high)) throw ConfigError("specialization band needs c_low <= c_high");
      break;
  }
}

inline void to_json(nlohmann::json& j, const StrategyConfig& c) {
  j = nlohmann::json{{"primitive", std::string(to_string(c.primitive))}, {"kind", std::string(to_string(c.kind))}};
  switch (c.kind) {
    case StrategyKind::oracle: break;
    case StrategyKind::uniform_sampling:
    case StrategyKind::trigger_diff:
    case StrategyKind::quality_downsize:
    case StrategyKind::region_crop:
      if (std::isfinite(c.knob))
        j["knob"] = c.knob;
      else
        j["knob"] = "inf";
      break;
    case StrategyKind::model_select: j["tier"] = c.tier; break;
    case StrategyKind::model_specialize:
      j["tier"] = c.tier;
      j["band"] = {c.band_low, c.band_high};
      break;
  }
}

inline void from_json(const nlohmann::json& j, StrategyConfig& c) {
  c = StrategyConfig{};
  c.kind = strategy_kind_from_string(j.at("kind").get<std::string>());
  c.primitive = j.contains("primitive") ? primitive_from_string(j["primitive"].get<std::string>())
                                        : primitive_of(c.kind, Primitive::temporal);
  if (j.contains("knob")) {
    const auto& k = j["knob"];
    c.knob = k.is_string() && k.get<std::string>() == "inf" ? std::numeric_limits<double>::infinity() : k.get<double>();
  }
  c.tier = j.value("tier", std::string{});
  if (j.contains("band")) {
    c.band_low = j["band"].at(0).get<double>();
    c.band_high = j["band"].at(1).get<double>();
  }
}

struct CostVector {
  double network = 1.0;
  double compute = 1.0;
  friend bool operator==(const CostVector&, const CostVector&) = default;
};

struct StrategyOutcome {
  DetectionTrace trace;
  /// Frames the temporal stage sent downstream; all true for other primitives.
  std::vector<bool> processed;
  CostVector cost;
};

namespace detail {

inline StrategyOutcome carry_over(const DetectionTrace& trace, const std::vector<bool>& processed, double bits_per_pixel) {
  StrategyOutcome out{trace, processed, {}};
  const auto bytes = effective_byte_sizes(trace, bits_per_pixel);
  double sent = 0.0, total = 0.0;
  std::size_t count = 0;
  const std::vector<Detection>* last = nullptr;
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    total += bytes[i];
    if (processed[i]) {
      sent += bytes[i];
      ++count;
      last = &trace.frames[i].detections;
    } else if (last) {
      out.trace.frames[i].detections = *last;
    } else {
      out.trace.frames[i].detections.clear();
    }
  }
  const double n = static_cast<double>(trace.frames.size());
  out.cost.compute = n > 0.0 ? static_cast<double>(count) / n : 1.0;
  out.cost.network = total > 0.0 ? sent / total : 1.0;
  return out;
}

inline StrategyOutcome passthrough(const DetectionTrace& trace) {
  return {trace, std::vector<bool>(trace.frames.size(), true), {1.0, 1.0}};
}

}  // namespace detail

/// Processes every round(1/r)-th frame and carries detections forward.
/// Network cost is the byte share of processed frames (the frame share when
/// byte sizes are uniform); compute cost is the frame share.
inline StrategyOutcome apply_temporal_uniform(const DetectionTrace& trace, double rate,
                                              double bits_per_pixel = kDefaultBitsPerPixel) {
  if (!(rate > 0.0 && rate <= 1.0)) throw ConfigError("sampling rate must lie in (0,1]");
  const auto stride = static_cast<std::size_t>(std::max(1.0, std::round(1.0 / rate)));
  std::vector<bool> processed(trace.frames.size());
  for (std::size_t i = 0; i < processed.size(); ++i) processed[i] = (i % stride) == 0;
  return detail::carry_over(trace, processed, bits_per_pixel);
}

/// Accumulates frame_diff since the last processed frame and fires when the
/// sum exceeds the threshold. The first frame always fires.
inline StrategyOutcome apply_temporal_trigger(const DetectionTrace& trace, double threshold,
                                              double bits_per_pixel = kDefaultBitsPerPixel) {
  if (!(threshold >= 0.0)) throw ConfigError("diff threshold must be >= 0");
  const auto diffs = effective_frame_diffs(trace);
  std::vector<bool> processed(trace.frames.size(), false);
  double acc = 0.0;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (i == 0) {
      processed[i] = true;
      continue;
    }
    acc += diffs[i];
    if (acc > threshold) {
      processed[i] = true;
      acc = 0.0;
    }
  }
  return detail::carry_over(trace, processed, bits_per_pixel);
}

/// Keeps a detection iff (area / frame area) * q^2 >= A_min and scales its
/// confidence by q^gamma. Network factor q^rho.
inline StrategyOutcome apply_spatial_downsize(const DetectionTrace& trace, double q, const DegradationParams& params) {
  if (!params.in_ladder(q)) throw ConfigError("quality level " + std::to_string(q) + " is not in the quality ladder");
  if (q == 1.0) return detail::passthrough(trace);
  StrategyOutcome out = detail::passthrough(trace);
  const double area = trace.frame_area();
  const double q2 = q * q;
  const double conf_scale = std::pow(q, params.gamma);
  for (auto& f : out.trace.frames) {
    std::vector<Detection> kept;
    kept.reserve(f.detections.size());
    for (const auto& d : f.detections) {
      if (d.box.area() / area * q2 < params.a_min) continue;
      Detection k = d;
      k.confidence = std::clamp(d.confidence * conf_scale, 0.0, 1.0);
      kept.push_back(k);
    }
    f.detections = std::move(kept);
  }
  out.cost.network = std::pow(q, params.rho);
  return out;
}

/// Encodes only the union of cheap-model boxes dilated by `margin` pixels.
/// Ground-truth detections survive iff their center lies in that region.
inline StrategyOutcome apply_spatial_crop(const DetectionTrace& trace, const DetectionTrace* cheap, double margin,
                                          double bits_per_pixel = kDefaultBitsPerPixel) {
  if (!cheap) throw InputError("region cropping needs a cheap-model trace");
  if (!(margin >= 0.0)) throw ConfigError("crop margin must be >= 0");
  if (cheap->frames.size() != trace.frames.size()) throw InputError("cheap trace is not frame-aligned");
  StrategyOutcome out = detail::passthrough(trace);
  const double area = trace.frame_area();
  const auto bytes = effective_byte_sizes(trace, bits_per_pixel);
  double weighted = 0.0, total = 0.0;
  std::vector<BoundingBox> region;
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    region.clear();
    for (const auto& d : cheap->frames[i].detections)
      if (auto c = clip_to_frame(d.box.dilated(margin), trace.width, trace.height)) region.push_back(*c);
    auto& dets = out.trace.frames[i].detections;
    std::erase_if(dets, [&](const Detection& d) {
      for (const auto& r : region)
        if (r.contains(d.box.center_x(), d.box.center_y())) return false;
      return true;
    });
    const double frac = std::clamp(union_area(region) / area, 0.0, 1.0);
    weighted += bytes[i] * frac;
    total += bytes[i];
  }
  out.cost.network = total > 0.0 ? weighted / total : 0.0;
  return out;
}

inline StrategyOutcome apply_model_select(const DetectionTrace& trace, const ModelTier& tier) {
  validate(tier);
  StrategyOutcome out = detail::passthrough(trace);
  const double area = trace.frame_area();
  for (auto& f : out.trace.frames) f.detections = degrade_with_tier(f.detections, tier, area);
  out.cost.compute = tier.cost_factor;
  return out;
}

/// Per frame: when no cheap-model confidence falls strictly inside
/// (band_low, band_high) the cheap tier's output is used at the cheap cost;
/// otherwise the full model runs as well (cheap + 1).
inline StrategyOutcome apply_model_specialize(const DetectionTrace& trace, const DetectionTrace* cheap, double band_low,
                                              double band_high, const ModelTier& cheap_tier) {
  if (!cheap) throw InputError("model specialization needs a cheap-model trace");
  if (!(band_low <= band_high)) throw ConfigError("specialization band needs c_low <= c_high");
  if (cheap->frames.size() != trace.frames.size()) throw InputError("cheap trace is not frame-aligned");
  validate(cheap_tier);
  StrategyOutcome out = detail::passthrough(trace);
  const double area = trace.frame_area();
  double total = 0.0;
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    bool ambiguous = false;
    for (const auto& d : cheap->frames[i].detections)
      if (d.confidence > band_low && d.confidence < band_high) {
        ambiguous = true;
        break;
      }
    if (ambiguous) {
      total += cheap_tier.cost_factor + 1.0;
    } else {
      auto& f = out.trace.frames[i];
      f.detections = degrade_with_tier(f.detections, cheap_tier, area);
      total += cheap_tier.cost_factor;
    }
  }
  out.cost.compute = trace.frames.empty() ? 1.0 : total / static_cast<double>(trace.frames.size());
  return out;
}

/// Dispatches one configured strategy.
inline StrategyOutcome apply_strategy(const StrategyConfig& c, const DetectionTrace& trace, const DetectionTrace* cheap,
                                      const DegradationParams& params) {
  validate(c, params);
  switch (c.kind) {
    case StrategyKind::oracle: return detail::passthrough(trace);
    case StrategyKind::uniform_sampling: return apply_temporal_uniform(trace, c.knob, params.bits_per_pixel);
    case StrategyKind::trigger_diff: return apply_temporal_trigger(trace, c.knob, params.bits_per_pixel);
    case StrategyKind::quality_downsize: return apply_spatial_downsize(trace, c.knob, params);
    case StrategyKind::region_crop: return apply_spatial_crop(trace, cheap, c.knob, params.bits_per_pixel);
    case StrategyKind::model_select: return apply_model_select(trace, params.tier(c.tier));
    case StrategyKind::model_specialize:
      return apply_model_specialize(trace, cheap, c.band_low, c.band_high, params.tier(c.tier));
  }
  throw ConfigError("unhandled strategy kind");
}

inline bool needs_cheap_trace(const StrategyConfig& c) {
  return c.kind == StrategyKind::region_crop || c.kind == StrategyKind::model_specialize;
}

}  // namespace vapbench
