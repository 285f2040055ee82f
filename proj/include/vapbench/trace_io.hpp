#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vapbench/errors.hpp"
#include "vapbench/trace.hpp"

namespace vapbench {

// JSON Lines trace format. Line 1 is the header
//   {"video_id","width","height","fps","kind"}
// and every following line is one frame
//   {"frame_index","frame_diff","byte_size","detections":[{"track_id","class_id","conf","x","y","w","h"}]}

namespace detail {

template <class T>
T required(const nlohmann::json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw TraceFormatError(line, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw TraceFormatError(line, std::string("field '") + key + "' has the wrong type");
  }
}

template <class T>
std::optional<T> optional_field(const nlohmann::json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw TraceFormatError(line, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace detail

/// Parses and validates a trace. Boxes are clipped to the frame; clipping and
/// boxes lying fully outside the frame are reported through `warnings`.
inline DetectionTrace parse_trace(std::istream& in, std::vector<std::string>* warnings = nullptr) {
  DetectionTrace trace;
  std::string text;
  std::size_t line_no = 0;
  bool have_header = false;
  auto warn = [&](const std::string& w) {
    if (warnings) warnings->push_back(w);
  };

  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw TraceFormatError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw TraceFormatError(line_no, "expected a JSON object");

    if (!have_header) {
      trace.video_id = detail::required<std::string>(j, "video_id", line_no);
      trace.width = detail::required<int>(j, "width", line_no);
      trace.height = detail::required<int>(j, "height", line_no);
      trace.fps = detail::required<double>(j, "fps", line_no);
      try {
        trace.kind = trace_kind_from_string(detail::required<std::string>(j, "kind", line_no));
      } catch (const TraceFormatError&) {
        throw;
      } catch (const InputError& e) {
        throw TraceFormatError(line_no, e.what());
      }
      if (trace.width <= 0 || trace.height <= 0) throw TraceFormatError(line_no, "frame size must be positive");
      if (!(trace.fps > 0.0)) throw TraceFormatError(line_no, "fps must be positive");
      have_header = true;
      continue;
    }

    Frame f;
    f.frame_index = detail::required<std::int64_t>(j, "frame_index", line_no);
    f.frame_diff = detail::optional_field<double>(j, "frame_diff", line_no);
    f.byte_size = detail::optional_field<std::int64_t>(j, "byte_size", line_no);
    if (f.frame_index < 0) throw TraceFormatError(line_no, "negative frame_index");
    if (!trace.frames.empty() && f.frame_index <= trace.frames.back().frame_index)
      throw TraceFormatError(line_no, "frame_index not strictly increasing: frame " +
                                          std::to_string(trace.frames.back().frame_index) + "->" +
                                          std::to_string(f.frame_index));
    if (f.frame_diff && *f.frame_diff < 0.0) throw TraceFormatError(line_no, "negative frame_diff");
    if (f.byte_size && *f.byte_size <= 0) throw TraceFormatError(line_no, "byte_size must be positive");

    const auto dets = j.find("detections");
    if (dets == j.end() || !dets->is_array()) throw TraceFormatError(line_no, "missing field 'detections'");
    for (const auto& dj : *dets) {
      if (!dj.is_object()) throw TraceFormatError(line_no, "detection must be an object");
      Detection d;
      d.track_id = detail::optional_field<std::int64_t>(dj, "track_id", line_no);
      d.class_id = detail::required<int>(dj, "class_id", line_no);
      d.confidence = detail::required<double>(dj, "conf", line_no);
      d.box = {detail::required<double>(dj, "x", line_no), detail::required<double>(dj, "y", line_no),
               detail::required<double>(dj, "w", line_no), detail::required<double>(dj, "h", line_no)};
      if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
        throw TraceFormatError(line_no, "confidence outside [0,1]");
      if (!d.box.valid()) throw TraceFormatError(line_no, "box needs w > 0 and h > 0");
      if (trace.kind == TraceKind::ground_truth && !d.track_id)
        throw TraceFormatError(line_no, "ground-truth requires track ids");
      const auto clipped = clip_to_frame(d.box, trace.width, trace.height);
      if (!clipped) {
        warn("line " + std::to_string(line_no) + ": box outside frame dropped");
        continue;
      }
      if (!(*clipped == d.box)) {
        warn("line " + std::to_string(line_no) + ": box clipped to frame");
        d.box = *clipped;
      }
      f.detections.push_back(d);
    }
    trace.frames.push_back(std::move(f));
  }
  if (!have_header) throw TraceFormatError(line_no == 0 ? 1 : line_no, "missing header line");
  return trace;
}

inline DetectionTrace load_trace(const std::string& path, std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open trace file '" + path + "'");
  try {
    return parse_trace(in, warnings);
  } catch (const TraceFormatError& e) {
    throw TraceFormatError(e.line(), path + ": " + e.detail());
  }
}

inline void write_trace(std::ostream& out, const DetectionTrace& trace) {
  using ojson = nlohmann::ordered_json;
  ojson header;
  header["video_id"] = trace.video_id;
  header["width"] = trace.width;
  header["height"] = trace.height;
  header["fps"] = trace.fps;
  header["kind"] = std::string(to_string(trace.kind));
  out << header.dump() << '\n';
  for (const auto& f : trace.frames) {
    ojson jf;
    jf["frame_index"] = f.frame_index;
    if (f.frame_diff && std::isfinite(*f.frame_diff))
      jf["frame_diff"] = *f.frame_diff;
    else
      jf["frame_diff"] = nullptr;
    if (f.byte_size)
      jf["byte_size"] = *f.byte_size;
    else
      jf["byte_size"] = nullptr;
    ojson dets = ojson::array();
    for (const auto& d : f.detections) {
      ojson jd;
      if (d.track_id)
        jd["track_id"] = *d.track_id;
      else
        jd["track_id"] = nullptr;
      jd["class_id"] = d.class_id;
      jd["conf"] = d.confidence;
      jd["x"] = d.box.x;
      jd["y"] = d.box.y;
      jd["w"] = d.box.w;
      jd["h"] = d.box.h;
      dets.push_back(std::move(jd));
    }
    jf["detections"] = std::move(dets);
    out << jf.dump() << '\n';
  }
}

inline void save_trace(const std::string& path, const DetectionTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write trace file '" + path + "'");
  write_trace(out, trace);
}

inline std::string trace_to_string(const DetectionTrace& trace) {
  std::ostringstream os;
  write_trace(os, trace);
  return os.str();
}

}  // namespace vapbench
