#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "vapbench/errors.hpp"
#include "vapbench/geometry.hpp"
#include "vapbench/trace.hpp"

namespace vapbench {

struct MatchSpec {
  double iou_threshold = 0.5;
  bool class_sensitive = true;
};

inline void validate(const MatchSpec& spec) {
  if (!(spec.iou_threshold > 0.0 && spec.iou_threshold <= 1.0))
    throw ConfigError("iou_threshold must lie in (0,1]");
}

struct MatchCounts {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;

  MatchCounts& operator+=(const MatchCounts& o) {
    true_positives += o.true_positives;
    false_positives += o.false_positives;
    false_negatives += o.false_negatives;
    return *this;
  }
  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

struct F1Report {
  MatchCounts counts;
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
};

/// Micro-averaged precision/recall/F1. With nothing predicted and nothing to
/// find the result is perfect agreement (1,1,1); otherwise an empty
/// denominator yields 0.
inline F1Report f1_from_counts(const MatchCounts& c) {
  F1Report r;
  r.counts = c;
  if (c.true_positives + c.false_positives + c.false_negatives == 0) return r;
  const auto tp = static_cast<double>(c.true_positives);
  const auto pred = static_cast<double>(c.true_positives + c.false_positives);
  const auto truth = static_cast<double>(c.true_positives + c.false_negatives);
  r.precision = pred > 0.0 ? tp / pred : 0.0;
  r.recall = truth > 0.0 ? tp / truth : 0.0;
  r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

/// Canonical processing order for predictions: descending confidence, then
/// ascending x, then y (remaining fields only break exact duplicates).
inline std::vector<std::size_t> prediction_order(std::span<const Detection> pred) {
  std::vector<std::size_t> idx(pred.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto& p = pred[a];
    const auto& q = pred[b];
    return std::make_tuple(-p.confidence, p.box.x, p.box.y, p.box.w, p.box.h, p.class_id) <
           std::make_tuple(-q.confidence, q.box.x, q.box.y, q.box.w, q.box.h, q.class_id);
  });
  return idx;
}

/// Canonical ground-truth order; equal-IoU candidates go to the earliest.
inline std::vector<std::size_t> ground_truth_order(std::span<const Detection> gt) {
  std::vector<std::size_t> idx(gt.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto& p = gt[a];
    const auto& q = gt[b];
    return std::make_tuple(p.box.x, p.box.y, p.box.w, p.box.h, p.class_id, p.confidence) <
           std::make_tuple(q.box.x, q.box.y, q.box.w, q.box.h, q.class_id, q.confidence);
  });
  return idx;
}

struct FrameMatch {
  MatchCounts counts;
  /// assignment[i] = index into gt matched by pred[i] (original indices).
  std::vector<std::optional<std::size_t>> assignment;
};

/// One-to-one greedy matching by confidence. Each prediction takes the
/// unmatched ground-truth box (same class when class_sensitive) with the
/// highest IoU at or above the threshold.
inline FrameMatch match_frame_detailed(std::span<const Detection> pred, std::span<const Detection> gt,
                                       const MatchSpec& spec = {}) {
  FrameMatch m;
  m.assignment.assign(pred.size(), std::nullopt);
  const auto porder = prediction_order(pred);
  const auto gorder = ground_truth_order(gt);
  std::vector<bool> taken(gt.size(), false);
  for (std::size_t pi : porder) {
    double best = -1.0;
    std::optional<std::size_t> best_g;
    for (std::size_t gi : gorder) {
      if (taken[gi]) continue;
      if (spec.class_sensitive && gt[gi].class_id != pred[pi].class_id) continue;
      const double v = iou(pred[pi].box, gt[gi].box);
      if (v >= spec.iou_threshold && v > best) {
        best = v;
        best_g = gi;
      }
    }
    if (best_g) {
      taken[*best_g] = true;
      m.assignment[pi] = best_g;
      ++m.counts.true_positives;
    } else {
      ++m.counts.false_positives;
    }
  }
  m.counts.false_negatives = gt.size() - m.counts.true_positives;
  return m;
}

inline MatchCounts match_frame(std::span<const Detection> pred, std::span<const Detection> gt,
                               const MatchSpec& spec = {}) {
  return match_frame_detailed(pred, gt, spec).counts;
}

/// Sums per-frame counts over frame-aligned traces, then one F1.
inline F1Report f1_over_segment(const DetectionTrace& pred, const DetectionTrace& gt, const MatchSpec& spec = {}) {
  if (pred.frames.size() != gt.frames.size()) throw InputError("traces are not frame-aligned (length differs)");
  MatchCounts total;
  for (std::size_t i = 0; i < gt.frames.size(); ++i) {
    if (pred.frames[i].frame_index != gt.frames[i].frame_index)
      throw InputError("traces are not frame-aligned at position " + std::to_string(i));
    total += match_frame(pred.frames[i].detections, gt.frames[i].detections, spec);
  }
  return f1_from_counts(total);
}

}  // namespace vapbench
