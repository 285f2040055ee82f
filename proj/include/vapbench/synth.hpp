#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vapbench/errors.hpp"
#include "vapbench/geometry.hpp"
#include "vapbench/params.hpp"
#include "vapbench/trace.hpp"

namespace vapbench {

/// Parameters of one synthetic scene. Ranges are sampled uniformly except
/// object area, which is log-uniform.
struct ScenarioSpec {
  std::string video_id = "synth";
  std::uint64_t seed = 1;
  double duration = 60.0;  // seconds
  double fps = 10.0;
  int width = 1280;
  int height = 720;
  double arrival_rate = 0.5;  // objects per second
  double dwell_min = 4.0;     // seconds
  double dwell_max = 12.0;
  double area_min = 0.002;  // fraction of the frame
  double area_max = 0.02;
  /// Per-frame motion expressed as the reciprocal IoU between a box and its
  /// position one frame later (1 = static).
  double speed_min = 1.05;
  double speed_max = 1.5;
  double confidence_min = 0.6;
  double confidence_max = 0.95;
  double confidence_jitter = 0.02;
  int num_classes = 3;
  bool warm_start = true;
  ModelTier cheap_tier{"tiny", 0.1, 2e-3, 0.8, 0.15, 37};
  double cheap_confidence_noise = 0.0;
  double diff_noise_floor = 0.002;

  double mean_dwell() const { return 0.5 * (dwell_min + dwell_max); }
  double mean_area() const {
    return area_max > area_min ? (area_max - area_min) / std::log(area_max / area_min) : area_min;
  }
};

inline void validate(const ScenarioSpec& s) {
  if (s.width <= 0 || s.height <= 0) throw ConfigError("scenario frame size must be positive");
  if (!(s.fps > 0.0)) throw ConfigError("scenario fps must be positive");
  if (!(s.duration > 0.0)) throw ConfigError("scenario duration must be positive");
  if (!(s.arrival_rate >= 0.0)) throw ConfigError("arrival rate must be >= 0");
  if (!(s.dwell_min > 0.0 && s.dwell_max >= s.dwell_min)) throw ConfigError("dwell range must satisfy 0 < min <= max");
  if (!(s.area_min > 0.0 && s.area_max >= s.area_min && s.area_max <= 1.0))
    throw ConfigError("area range must satisfy 0 < min <= max <= 1");
  if (!(s.speed_min >= 1.0 && s.speed_max >= s.speed_min)) throw ConfigError("speed range must satisfy 1 <= min <= max");
  if (!(s.confidence_min >= 0.0 && s.confidence_max <= 1.0 && s.confidence_min <= s.confidence_max))
    throw ConfigError("confidence range must lie in [0,1]");
  if (!(s.confidence_jitter >= 0.0 && s.cheap_confidence_noise >= 0.0 && s.diff_noise_floor >= 0.0))
    throw ConfigError("noise levels must be >= 0");
  if (s.num_classes < 1) throw ConfigError("num_classes must be >= 1");
  validate(s.cheap_tier);
}

namespace detail {

inline double shifted_iou(double w, double h, double dx, double dy) {
  const double o = std::max(0.0, w - std::abs(dx)) * std::max(0.0, h - std::abs(dy));
  return o / (2.0 * w * h - o);
}

/// Displacement along direction (c, s) giving IoU 1/speed with the original box.
inline double displacement_for_speed(double w, double h, double c, double s, double speed) {
  const double target = 1.0 / speed;
  if (target >= 1.0) return 0.0;
  double hi = std::min(std::abs(c) > 1e-12 ? w / std::abs(c) : 1e300, std::abs(s) > 1e-12 ? h / std::abs(s) : 1e300);
  double lo = 0.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (shifted_iou(w, h, mid * c, mid * s) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline void reflect(double& pos, double& vel, double room) {
  if (room <= 0.0) {
    pos = 0.0;
    return;
  }
  pos += vel;
  for (int guard = 0; guard < 4 && (pos < 0.0 || pos > room); ++guard) {
    if (pos < 0.0) {
      pos = -pos;
      vel = -vel;
    } else if (pos > room) {
      pos = 2.0 * room - pos;
      vel = -vel;
    }
  }
  pos = std::clamp(pos, 0.0, room);
}

}  // namespace detail

struct SyntheticVideo {
  DetectionTrace ground_truth;
  DetectionTrace cheap;
  std::size_t track_count = 0;
  std::size_t arrivals = 0;  // tracks spawned after the warm start
};

inline SyntheticVideo generate(const ScenarioSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double W = spec.width, H = spec.height;
  const auto n_frames = static_cast<std::size_t>(std::llround(spec.duration * spec.fps));

  struct Track {
    std::int64_t id;
    int class_id;
    std::size_t begin, end;
    double w, h, x, y, vx, vy, confidence;
  };
  std::vector<Track> tracks;
  auto make_track = [&](std::size_t begin, double dwell_seconds) {
    Track t{};
    t.id = static_cast<std::int64_t>(tracks.size());
    t.class_id = static_cast<int>(std::min<double>(spec.num_classes - 1, std::floor(unit(rng) * spec.num_classes)));
    t.begin = begin;
    t.end = std::min(n_frames, begin + std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(dwell_seconds * spec.fps))));
    const double area = spec.area_min * std::pow(spec.area_max / spec.area_min, unit(rng)) * W * H;
    const double aspect = 0.5 + 1.5 * unit(rng);
    t.w = std::min(W, std::sqrt(area * aspect));
    t.h = std::min(H, area / t.w);
    t.x = unit(rng) * (W - t.w);
    t.y = unit(rng) * (H - t.h);
    const double speed = spec.speed_min + (spec.speed_max - spec.speed_min) * unit(rng);
    const double theta = 2.0 * std::acos(-1.0) * unit(rng);
    const double c = std::cos(theta), s = std::sin(theta);
    const double d = detail::displacement_for_speed(t.w, t.h, c, s, speed);
    t.vx = d * c;
    t.vy = d * s;
    t.confidence = spec.confidence_min + (spec.confidence_max - spec.confidence_min) * unit(rng);
    tracks.push_back(t);
  };
  auto dwell = [&] { return spec.dwell_min + (spec.dwell_max - spec.dwell_min) * unit(rng); };

  if (spec.warm_start && spec.arrival_rate > 0.0) {
    std::poisson_distribution<int> initial(spec.arrival_rate * spec.mean_dwell());
    const int k = initial(rng);
    for (int i = 0; i < k; ++i) make_track(0, dwell() * unit(rng));
  }
  const std::size_t warm = tracks.size();
  if (spec.arrival_rate > 0.0) {
    std::exponential_distribution<double> gap(spec.arrival_rate);
    for (double t = gap(rng); t < spec.duration; t += gap(rng)) {
      const auto f = static_cast<std::size_t>(std::floor(t * spec.fps));
      if (f >= n_frames) break;
      make_track(f, dwell());
    }
  }

  SyntheticVideo out;
  out.track_count = tracks.size();
  out.arrivals = tracks.size() - warm;
  auto& gt = out.ground_truth;
  gt.video_id = spec.video_id;
  gt.width = spec.width;
  gt.height = spec.height;
  gt.fps = spec.fps;
  gt.kind = TraceKind::ground_truth;
  gt.frames.resize(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) gt.frames[f].frame_index = static_cast<std::int64_t>(f);

  for (auto& t : tracks) {
    for (std::size_t f = t.begin; f < t.end; ++f) {
      Detection d;
      d.track_id = t.id;
      d.class_id = t.class_id;
      d.confidence = std::clamp(t.confidence + spec.confidence_jitter * normal(rng), 0.01, 1.0);
      d.box = {t.x, t.y, t.w, t.h};
      gt.frames[f].detections.push_back(d);
      detail::reflect(t.x, t.vx, W - t.w);
      detail::reflect(t.y, t.vy, H - t.h);
    }
  }

  const double area = gt.frame_area();
  std::vector<BoundingBox> prev, cur;
  for (std::size_t f = 0; f < n_frames; ++f) {
    cur = boxes_of(gt.frames[f]);
    if (f > 0)
      gt.frames[f].frame_diff = symmetric_difference_area(prev, cur) / area + spec.diff_noise_floor * unit(rng);
    prev.swap(cur);
  }

  std::mt19937_64 cheap_rng(spec.seed ^ 0x5bd1e995c0ffeeULL);
  out.cheap = gt;
  out.cheap.kind = TraceKind::cheap_model;
  for (auto& fr : out.cheap.frames) {
    fr.detections = degrade_with_tier(fr.detections, spec.cheap_tier, area);
    for (auto& d : fr.detections) {
      d.track_id.reset();
      if (spec.cheap_confidence_noise > 0.0)
        d.confidence = std::clamp(d.confidence + spec.cheap_confidence_noise * normal(cheap_rng), 0.0, 1.0);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenario grids

struct ScenarioLevels {
  std::vector<std::pair<double, double>> speed;  // (min, max) per level
  std::vector<std::pair<double, double>> area;
  std::vector<double> arrival;
};

struct ScenarioCell {
  ScenarioSpec spec;
  std::array<int, 3> level{};  // speed, area, arrival; 0 when the list is empty
  bool feasible = true;
};

/// Expected share of the frame covered by objects at any moment.
inline double expected_coverage(const ScenarioSpec& s) { return s.arrival_rate * s.mean_dwell() * s.mean_area(); }

/// Cross product of the given levels (speed-major). A combination whose
/// expected object coverage exceeds the frame is flagged infeasible.
inline std::vector<ScenarioCell> scenario_grid(const ScenarioSpec& base, const ScenarioLevels& levels) {
  const std::size_t ns = std::max<std::size_t>(1, levels.speed.size());
  const std::size_t na = std::max<std::size_t>(1, levels.area.size());
  const std::size_t nl = std::max<std::size_t>(1, levels.arrival.size());
  std::vector<ScenarioCell> out;
  for (std::size_t i = 0; i < ns; ++i)
    for (std::size_t j = 0; j < na; ++j)
      for (std::size_t k = 0; k < nl; ++k) {
        ScenarioCell c;
        c.spec = base;
        c.level = {static_cast<int>(i), static_cast<int>(j), static_cast<int>(k)};
        if (!levels.speed.empty()) std::tie(c.spec.speed_min, c.spec.speed_max) = levels.speed[i];
        if (!levels.area.empty()) std::tie(c.spec.area_min, c.spec.area_max) = levels.area[j];
        if (!levels.arrival.empty()) c.spec.arrival_rate = levels.arrival[k];
        c.spec.seed = detail::combine(base.seed, out.size());
        c.spec.video_id = base.video_id + "-s" + std::to_string(i) + "a" + std::to_string(j) + "l" + std::to_string(k);
        c.feasible = expected_coverage(c.spec) <= 1.0;
        out.push_back(std::move(c));
      }
  return out;
}

inline void to_json(nlohmann::json& j, const ScenarioSpec& s) {
  j = nlohmann::json{{"video_id", s.video_id},
                     {"seed", s.seed},
                     {"duration", s.duration},
                     {"fps", s.fps},
                     {"width", s.width},
                     {"height", s.height},
                     {"arrival_rate", s.arrival_rate},
                     {"dwell", {s.dwell_min, s.dwell_max}},
                     {"area", {s.area_min, s.area_max}},
                     {"speed", {s.speed_min, s.speed_max}},
                     {"confidence", {s.confidence_min, s.confidence_max}},
                     {"confidence_jitter", s.confidence_jitter},
                     {"num_classes", s.num_classes},
                     {"warm_start", s.warm_start},
                     {"cheap_tier", s.cheap_tier},
                     {"cheap_confidence_noise", s.cheap_confidence_noise},
                     {"diff_noise_floor", s.diff_noise_floor}};
}

/// Absent keys keep their defaults.
inline void from_json(const nlohmann::json& j, ScenarioSpec& s) {
  auto range = [&](const char* key, double& lo, double& hi) {
    if (!j.contains(key)) return;
    lo = j[key].at(0).get<double>();
    hi = j[key].at(1).get<double>();
  };
  s.video_id = j.value("video_id", s.video_id);
  s.seed = j.value("seed", s.seed);
  s.duration = j.value("duration", s.duration);
  s.fps = j.value("fps", s.fps);
  s.width = j.value("width", s.width);
  s.height = j.value("height", s.height);
  s.arrival_rate = j.value("arrival_rate", s.arrival_rate);
  range("dwell", s.dwell_min, s.dwell_max);
  range("area", s.area_min, s.area_max);
  range("speed", s.speed_min, s.speed_max);
  range("confidence", s.confidence_min, s.confidence_max);
  s.confidence_jitter = j.value("confidence_jitter", s.confidence_jitter);
  s.num_classes = j.value("num_classes", s.num_classes);
  s.warm_start = j.value("warm_start", s.warm_start);
  if (j.contains("cheap_tier")) s.cheap_tier = j["cheap_tier"].get<ModelTier>();
  s.cheap_confidence_noise = j.value("cheap_confidence_noise", s.cheap_confidence_noise);
  s.diff_noise_floor = j.value("diff_noise_floor", s.diff_noise_floor);
}

}  // namespace vapbench
