#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vapbench/errors.hpp"
#include "vapbench/geometry.hpp"
#include "vapbench/stats.hpp"
#include "vapbench/trace.hpp"

namespace vapbench {

// Content features are six sampled base features, each summarized by seven
// statistics, followed by the share of frames that contain any object.

enum class BaseFeature { object_speed, object_area, confidence, total_area, object_count, arrival_rate };

inline constexpr std::array<std::string_view, 6> kBaseFeatureNames{
    "object_speed", "object_area", "confidence", "total_area", "object_count", "arrival_rate"};
inline constexpr std::array<std::string_view, 7> kStatisticNames{"mean", "std", "p10", "p25", "p50", "p75", "p90"};
inline constexpr std::array<double, 5> kPercentiles{10, 25, 50, 75, 90};
inline constexpr std::size_t kStatsPerFeature = kStatisticNames.size();
inline constexpr std::size_t kFeatureCount = kBaseFeatureNames.size() * kStatsPerFeature + 1;
inline constexpr std::size_t kFramesWithObjects = kFeatureCount - 1;
inline constexpr int kFeatureSchemaVersion = 1;

static_assert(kFeatureCount == 43);

inline constexpr std::size_t feature_id(BaseFeature f, std::size_t stat) {
  return static_cast<std::size_t>(f) * kStatsPerFeature + stat;
}

inline const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (auto base : kBaseFeatureNames)
      for (auto stat : kStatisticNames) out.push_back(std::string(base) + "_" + std::string(stat));
    out.emplace_back("frames_with_objects");
    return out;
  }();
  return names;
}

inline std::size_t feature_index(std::string_view name) {
  const auto& names = feature_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  throw ConfigError("unknown feature '" + std::string(name) + "'");
}

struct FeatureVector {
  std::array<double, kFeatureCount> values{};
  /// Set for entries whose sample set was empty (value holds the neutral value).
  std::array<bool, kFeatureCount> missing{};
  int schema_version = kFeatureSchemaVersion;

  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
};

struct FeatureOptions {
  double speed_cap = 100.0;
  double association_iou = 0.3;
  double neutral_value = 0.0;
  bool total_area_as_sum = false;
};

inline bool has_track_ids(const DetectionTrace& t) {
  bool any = false;
  for (const auto& f : t.frames)
    for (const auto& d : f.detections) {
      if (!d.track_id) return false;
      any = true;
    }
  return any || t.kind == TraceKind::ground_truth;
}

namespace detail {

inline double speed_from_iou(double v, double cap) { return v > 0.0 ? std::min(1.0 / v, cap) : cap; }

inline bool consecutive(const Frame& a, const Frame& b) { return b.frame_index == a.frame_index + 1; }

/// Greedy one-to-one association by descending IoU (same class, IoU >= thr).
/// Returns for each detection of `b` the index of its partner in `a`.
inline std::vector<std::optional<std::size_t>> associate(const std::vector<Detection>& a,
                                                         const std::vector<Detection>& b, double thr) {
  struct Cand {
    double iou;
    std::size_t ia, ib;
  };
  std::vector<Cand> cands;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (a[i].class_id != b[j].class_id) continue;
      const double v = iou(a[i].box, b[j].box);
      if (v >= thr) cands.push_back({v, i, j});
    }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.iou != y.iou) return x.iou > y.iou;
    if (x.ia != y.ia) return x.ia < y.ia;
    return x.ib < y.ib;
  });
  std::vector<bool> used_a(a.size(), false);
  std::vector<std::optional<std::size_t>> partner(b.size());
  for (const auto& c : cands) {
    if (used_a[c.ia] || partner[c.ib]) continue;
    used_a[c.ia] = true;
    partner[c.ib] = c.ia;
  }
  return partner;
}

inline std::size_t second_of(const DetectionTrace& t, std::size_t pos) {
  const auto base = t.frames.front().frame_index;
  return static_cast<std::size_t>(std::floor(static_cast<double>(t.frames[pos].frame_index - base) / t.fps));
}

}  // namespace detail

/// Per-object speed, 1/IoU of the same track in two consecutive frames
/// (frame_index differing by one), capped for disjoint boxes. Needs track ids.
inline std::vector<double> object_speed_samples(const DetectionTrace& t, const FeatureOptions& opt = {}) {
  if (!has_track_ids(t))
    throw InputError("object speed needs track ids; use object_speed_samples_associated for cheap traces");
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < t.frames.size(); ++i) {
    const auto& a = t.frames[i];
    const auto& b = t.frames[i + 1];
    if (!detail::consecutive(a, b)) continue;
    for (const auto& da : a.detections)
      for (const auto& db : b.detections)
        if (da.track_id == db.track_id) {
          out.push_back(detail::speed_from_iou(iou(da.box, db.box), opt.speed_cap));
          break;
        }
  }
  return out;
}

/// Speed samples for traces without identities: boxes are linked across
/// consecutive frames by greedy IoU association.
inline std::vector<double> object_speed_samples_associated(const DetectionTrace& t, const FeatureOptions& opt = {}) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < t.frames.size(); ++i) {
    const auto& a = t.frames[i];
    const auto& b = t.frames[i + 1];
    if (!detail::consecutive(a, b)) continue;
    const auto partner = detail::associate(a.detections, b.detections, opt.association_iou);
    for (std::size_t j = 0; j < partner.size(); ++j)
      if (partner[j]) out.push_back(detail::speed_from_iou(iou(a.detections[*partner[j]].box, b.detections[j].box), opt.speed_cap));
  }
  return out;
}

inline std::vector<double> object_area_samples(const DetectionTrace& t) {
  std::vector<double> out;
  const double area = t.frame_area();
  for (const auto& f : t.frames)
    for (const auto& d : f.detections) out.push_back(d.box.area() / area);
  return out;
}

inline std::vector<double> confidence_samples(const DetectionTrace& t) {
  std::vector<double> out;
  for (const auto& f : t.frames)
    for (const auto& d : f.detections) out.push_back(d.confidence);
  return out;
}

/// Fraction of the frame covered by the union of its boxes.
inline std::vector<double> total_area_samples(const DetectionTrace& t, const FeatureOptions& opt = {}) {
  std::vector<double> out;
  out.reserve(t.frames.size());
  const double area = t.frame_area();
  for (const auto& f : t.frames) {
    if (opt.total_area_as_sum) {
      double s = 0.0;
      for (const auto& d : f.detections) s += d.box.area();
      out.push_back(s / area);
    } else {
      const auto boxes = boxes_of(f);
      out.push_back(union_area(boxes) / area);
    }
  }
  return out;
}

inline std::vector<double> object_count_samples(const DetectionTrace& t) {
  std::vector<double> out;
  out.reserve(t.frames.size());
  for (const auto& f : t.frames) out.push_back(static_cast<double>(f.detections.size()));
  return out;
}

/// New tracks per second: a track arrives in the second holding its first
/// appearance within the trace.
inline std::vector<double> arrival_rate_samples(const DetectionTrace& t) {
  if (t.frames.empty()) return {};
  if (!has_track_ids(t)) throw InputError("arrival rate needs track ids; use arrival_rate_samples_associated");
  const std::size_t seconds = detail::second_of(t, t.frames.size() - 1) + 1;
  std::vector<double> out(seconds, 0.0);
  std::set<std::int64_t> seen;
  for (std::size_t i = 0; i < t.frames.size(); ++i)
    for (const auto& d : t.frames[i].detections)
      if (seen.insert(*d.track_id).second) out[detail::second_of(t, i)] += 1.0;
  return out;
}

/// Arrival rate without identities: per consecutive frame pair, boxes of the
/// later frame with no IoU partner in the earlier one count as arrivals; each
/// second's count is rescaled by fps / (pairs observed in that second).
inline std::vector<double> arrival_rate_samples_associated(const DetectionTrace& t, const FeatureOptions& opt = {}) {
  if (t.frames.empty()) return {};
  const std::size_t seconds = detail::second_of(t, t.frames.size() - 1) + 1;
  std::vector<double> arrivals(seconds, 0.0), pairs(seconds, 0.0);
  for (std::size_t i = 0; i + 1 < t.frames.size(); ++i) {
    const auto& a = t.frames[i];
    const auto& b = t.frames[i + 1];
    if (!detail::consecutive(a, b)) continue;
    const auto partner = detail::associate(a.detections, b.detections, opt.association_iou);
    const std::size_t s = detail::second_of(t, i + 1);
    pairs[s] += 1.0;
    for (const auto& p : partner)
      if (!p) arrivals[s] += 1.0;
  }
  std::vector<double> out;
  for (std::size_t s = 0; s < seconds; ++s)
    if (pairs[s] > 0.0) out.push_back(arrivals[s] * t.fps / pairs[s]);
  return out;
}

inline double frames_with_objects(const DetectionTrace& t) {
  if (t.frames.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& f : t.frames)
    if (!f.detections.empty()) ++n;
  return static_cast<double>(n) / static_cast<double>(t.frames.size());
}

/// mean, std, p10, p25, p50, p75, p90 (nearest rank).
inline std::array<double, kStatsPerFeature> summarize(std::vector<double> samples) {
  std::array<double, kStatsPerFeature> out{};
  std::sort(samples.begin(), samples.end());
  out[0] = stats::mean(samples);
  out[1] = stats::stddev(samples);
  for (std::size_t k = 0; k < kPercentiles.size(); ++k) out[2 + k] = stats::percentile_sorted(samples, kPercentiles[k]);
  return out;
}

/// The 43 content features of a segment. Traces without track ids fall back
/// to IoU association for speed and arrival rate.
inline FeatureVector featurize_segment(const DetectionTrace& t, const FeatureOptions& opt = {}) {
  FeatureVector fv;
  const bool tracks = has_track_ids(t);
  const std::array<std::vector<double>, 6> samples{
      tracks ? object_speed_samples(t, opt) : object_speed_samples_associated(t, opt),
      object_area_samples(t),
      confidence_samples(t),
      total_area_samples(t, opt),
      object_count_samples(t),
      tracks ? arrival_rate_samples(t) : arrival_rate_samples_associated(t, opt),
  };
  for (std::size_t b = 0; b < samples.size(); ++b) {
    const bool empty = samples[b].empty();
    const auto s = summarize(samples[b]);
    for (std::size_t k = 0; k < kStatsPerFeature; ++k) {
      fv.values[b * kStatsPerFeature + k] = empty ? opt.neutral_value : s[k];
      fv.missing[b * kStatsPerFeature + k] = empty;
    }
  }
  fv.values[kFramesWithObjects] = frames_with_objects(t);
  fv.missing[kFramesWithObjects] = t.frames.empty();
  return fv;
}

// ---------------------------------------------------------------------------
// Feature matrix (one row per segment) and its CSV form

struct FeatureRow {
  std::string video_id;
  std::size_t segment_index = 0;
  FeatureVector features;
};

struct FeatureMatrix {
  std::vector<FeatureRow> rows;

  std::vector<double> column(std::size_t feature) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.features.values[feature]);
    return out;
  }
};

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw InputError("not a number: '" + std::string(s) + "'");
  return v;
}

/// Header: 43 feature names, video_id, segment_index.
inline void write_feature_csv(std::ostream& out, const FeatureMatrix& m) {
  for (const auto& n : feature_names()) out << n << ',';
  out << "video_id,segment_index\n";
  for (const auto& r : m.rows) {
    for (double v : r.features.values) out << format_double(v) << ',';
    out << r.video_id << ',' << r.segment_index << '\n';
  }
}

inline FeatureMatrix read_feature_csv(std::istream& in) {
  FeatureMatrix m;
  std::string line;
  if (!std::getline(in, line)) throw InputError("feature CSV is empty");
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  if (header.size() != kFeatureCount + 2) throw InputError("feature CSV header must have 45 columns");
  std::vector<std::size_t> col_to_feature(kFeatureCount);
  for (std::size_t c = 0; c < kFeatureCount; ++c) col_to_feature[c] = feature_index(header[c]);
  if (header[kFeatureCount] != "video_id" || header[kFeatureCount + 1] != "segment_index")
    throw InputError("feature CSV must end with video_id,segment_index");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw InputError("feature CSV line " + std::to_string(line_no) + ": wrong column count");
    FeatureRow r;
    for (std::size_t c = 0; c < kFeatureCount; ++c) r.features.values[col_to_feature[c]] = parse_double(cells[c]);
    r.video_id = cells[kFeatureCount];
    r.segment_index = static_cast<std::size_t>(parse_double(cells[kFeatureCount + 1]));
    m.rows.push_back(std::move(r));
  }
  return m;
}

}  // namespace vapbench
