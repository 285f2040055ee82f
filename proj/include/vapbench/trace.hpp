#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vapbench/errors.hpp"
#include "vapbench/geometry.hpp"

namespace vapbench {

struct Detection {
  std::optional<std::int64_t> track_id;
  int class_id = 0;
  double confidence = 1.0;
  BoundingBox box;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct Frame {
  std::int64_t frame_index = 0;
  std::vector<Detection> detections;
  // Fraction of pixels changed vs. the previous frame. The first frame of a
  // trace always acts as the trigger-firing sentinel regardless of this value.
  std::optional<double> frame_diff;
  std::optional<std::int64_t> byte_size;

  friend bool operator==(const Frame&, const Frame&) = default;
};

enum class TraceKind { ground_truth, cheap_model };

inline std::string_view to_string(TraceKind k) {
  return k == TraceKind::ground_truth ? "ground_truth" : "cheap_model";
}

inline TraceKind trace_kind_from_string(std::string_view s) {
  if (s == "ground_truth") return TraceKind::ground_truth;
  if (s == "cheap_model") return TraceKind::cheap_model;
  throw InputError("unknown trace kind '" + std::string(s) + "'");
}

struct DetectionTrace {
  std::string video_id;
  int width = 0;
  int height = 0;
  double fps = 30.0;
  std::vector<Frame> frames;
  TraceKind kind = TraceKind::ground_truth;

  double frame_area() const { return static_cast<double>(width) * static_cast<double>(height); }
  double duration_seconds() const { return fps > 0.0 ? static_cast<double>(frames.size()) / fps : 0.0; }

  std::size_t detection_count() const {
    std::size_t n = 0;
    for (const auto& f : frames) n += f.detections.size();
    return n;
  }

  friend bool operator==(const DetectionTrace&, const DetectionTrace&) = default;
};

/// Half-open range of frame positions [start_frame, end_frame) within a trace.
struct Segment {
  std::string video_id;
  std::size_t segment_index = 0;
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;
  double duration = 0.0;

  std::size_t frame_count() const { return end_frame - start_frame; }

  friend bool operator==(const Segment&, const Segment&) = default;
};

inline constexpr double kTriggerSentinel = std::numeric_limits<double>::infinity();
inline constexpr double kDefaultBitsPerPixel = 0.1;

/// Checks every trace invariant; throws InputError naming the offender.
inline void validate(const DetectionTrace& t) {
  if (t.width <= 0 || t.height <= 0) throw InputError("frame size must be positive");
  if (!(t.fps > 0.0)) throw InputError("fps must be positive");
  for (std::size_t i = 0; i < t.frames.size(); ++i) {
    const Frame& f = t.frames[i];
    if (f.frame_index < 0) throw InputError("negative frame_index " + std::to_string(f.frame_index));
    if (i > 0 && f.frame_index <= t.frames[i - 1].frame_index)
      throw InputError("frame_index not strictly increasing: frame " + std::to_string(t.frames[i - 1].frame_index) +
                       "->" + std::to_string(f.frame_index));
    if (f.frame_diff && *f.frame_diff < 0.0)
      throw InputError("negative frame_diff at frame " + std::to_string(f.frame_index));
    if (f.byte_size && *f.byte_size <= 0)
      throw InputError("byte_size must be positive at frame " + std::to_string(f.frame_index));
    for (const auto& d : f.detections) {
      if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
        throw InputError("confidence outside [0,1] at frame " + std::to_string(f.frame_index));
      if (!d.box.valid()) throw InputError("degenerate box at frame " + std::to_string(f.frame_index));
      if (t.kind == TraceKind::ground_truth && !d.track_id)
        throw InputError("ground-truth requires track ids (frame " + std::to_string(f.frame_index) + ")");
    }
  }
}

/// Consecutive non-overlapping segments; the trailing partial segment is kept
/// iff it spans at least half of the nominal length.
inline std::vector<Segment> segmentize(const DetectionTrace& trace, double segment_seconds) {
  if (!(segment_seconds > 0.0)) throw ConfigError("segment_seconds must be positive");
  std::vector<Segment> out;
  const std::size_t n = trace.frames.size();
  if (n == 0) return out;
  const auto nominal = static_cast<std::size_t>(std::max(1.0, std::round(segment_seconds * trace.fps)));
  std::size_t start = 0;
  while (start < n) {
    const std::size_t remaining = n - start;
    if (remaining < nominal && 2 * remaining < nominal) break;
    const std::size_t len = std::min(nominal, remaining);
    out.push_back({trace.video_id, out.size(), start, start + len, static_cast<double>(len) / trace.fps});
    start += len;
  }
  return out;
}

/// Sub-trace for a segment with frame indices re-based to 0.
inline DetectionTrace slice(const DetectionTrace& trace, const Segment& seg) {
  if (seg.end_frame <= seg.start_frame) throw InputError("empty segment");
  if (seg.end_frame > trace.frames.size()) throw InputError("segment exceeds trace bounds");
  DetectionTrace out;
  out.video_id = trace.video_id;
  out.width = trace.width;
  out.height = trace.height;
  out.fps = trace.fps;
  out.kind = trace.kind;
  out.frames.assign(trace.frames.begin() + static_cast<std::ptrdiff_t>(seg.start_frame),
                    trace.frames.begin() + static_cast<std::ptrdiff_t>(seg.end_frame));
  const std::int64_t base = out.frames.front().frame_index;
  for (auto& f : out.frames) f.frame_index -= base;
  out.frames.front().frame_diff = kTriggerSentinel;
  return out;
}

/// Frames [begin, end) by position, re-based; convenience over slice().
inline DetectionTrace slice_frames(const DetectionTrace& trace, std::size_t begin, std::size_t end) {
  return slice(trace, Segment{trace.video_id, 0, begin, end, 0.0});
}

inline std::vector<BoundingBox> boxes_of(const Frame& f) {
  std::vector<BoundingBox> out;
  out.reserve(f.detections.size());
  for (const auto& d : f.detections) out.push_back(d.box);
  return out;
}

/// Per-frame change signal: the stored value, or the area fraction of the
/// symmetric difference of consecutive box unions when absent. Position 0 is
/// always the sentinel.
inline std::vector<double> effective_frame_diffs(const DetectionTrace& trace) {
  std::vector<double> out(trace.frames.size(), 0.0);
  const double area = trace.frame_area();
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    if (i == 0) {
      out[i] = kTriggerSentinel;
    } else if (trace.frames[i].frame_diff) {
      out[i] = *trace.frames[i].frame_diff;
    } else {
      const auto prev = boxes_of(trace.frames[i - 1]);
      const auto cur = boxes_of(trace.frames[i]);
      out[i] = area > 0.0 ? symmetric_difference_area(prev, cur) / area : 0.0;
    }
  }
  return out;
}

/// Fills absent frame_diff values in place (derived rule above).
inline void materialize_frame_diffs(DetectionTrace& trace) {
  const auto diffs = effective_frame_diffs(trace);
  for (std::size_t i = 0; i < trace.frames.size(); ++i) trace.frames[i].frame_diff = diffs[i];
}

inline std::vector<double> effective_byte_sizes(const DetectionTrace& trace,
                                                double bits_per_pixel = kDefaultBitsPerPixel) {
  const double fallback = trace.frame_area() * bits_per_pixel / 8.0;
  std::vector<double> out;
  out.reserve(trace.frames.size());
  for (const auto& f : trace.frames)
    out.push_back(f.byte_size ? static_cast<double>(*f.byte_size) : fallback);
  return out;
}

}  // namespace vapbench
