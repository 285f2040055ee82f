#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "vapbench/synth.hpp"
#include "vapbench/trace.hpp"

namespace testing_helpers {

inline vapbench::DetectionTrace make_trace(int w = 100, int h = 100, double fps = 10.0) {
  vapbench::DetectionTrace t;
  t.video_id = "v";
  t.width = w;
  t.height = h;
  t.fps = fps;
  return t;
}

inline vapbench::Detection det(std::int64_t id, double x, double y, double w, double h, double conf = 0.9,
                               int cls = 0) {
  vapbench::Detection d;
  d.track_id = id;
  d.class_id = cls;
  d.confidence = conf;
  d.box = {x, y, w, h};
  return d;
}

inline vapbench::Frame frame(std::int64_t idx, std::vector<vapbench::Detection> dets = {}) {
  vapbench::Frame f;
  f.frame_index = idx;
  f.detections = std::move(dets);
  return f;
}

/// Short random synthetic segment with its cheap trace.
inline vapbench::SyntheticVideo random_segment(std::uint64_t seed, double seconds = 6.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  vapbench::ScenarioSpec s;
  s.video_id = "r" + std::to_string(seed);
  s.seed = seed;
  s.duration = seconds;
  s.fps = 10.0;
  s.width = 320;
  s.height = 240;
  s.arrival_rate = 0.2 + 2.0 * u(rng);
  s.dwell_min = 1.0;
  s.dwell_max = 1.0 + 4.0 * u(rng);
  s.area_min = 0.002 + 0.01 * u(rng);
  s.area_max = s.area_min * (1.0 + 5.0 * u(rng));
  s.speed_min = 1.0 + 0.3 * u(rng);
  s.speed_max = s.speed_min + 1.0 * u(rng);
  return vapbench::generate(s);
}

}  // namespace testing_helpers
