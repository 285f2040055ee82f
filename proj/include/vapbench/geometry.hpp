#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace vapbench {

/// Axis-aligned box in pixel coordinates, (x, y) is the top-left corner.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double center_x() const { return x + 0.5 * w; }
  double center_y() const { return y + 0.5 * h; }
  bool valid() const { return w > 0.0 && h > 0.0 && std::isfinite(x) && std::isfinite(y); }

  bool contains(double px, double py) const {
    return px >= x && px <= right() && py >= y && py <= bottom();
  }

  BoundingBox dilated(double margin) const {
    return {x - margin, y - margin, w + 2.0 * margin, h + 2.0 * margin};
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline std::optional<BoundingBox> intersection(const BoundingBox& a, const BoundingBox& b) {
  const double x0 = std::max(a.x, b.x);
  const double y0 = std::max(a.y, b.y);
  const double x1 = std::min(a.right(), b.right());
  const double y1 = std::min(a.bottom(), b.bottom());
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  return BoundingBox{x0, y0, x1 - x0, y1 - y0};
}

/// Clip to [0,width]x[0,height]; nullopt when nothing is left.
inline std::optional<BoundingBox> clip_to_frame(const BoundingBox& b, double width, double height) {
  if (b.x >= 0.0 && b.y >= 0.0 && b.x + b.w <= width && b.y + b.h <= height) return b;
  return intersection(b, BoundingBox{0.0, 0.0, width, height});
}

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const auto inter = intersection(a, b);
  if (!inter) return 0.0;
  const double i = inter->area();
  const double u = a.area() + b.area() - i;
  return u > 0.0 ? i / u : 0.0;
}

/// Exact area of the union of boxes (coordinate compression over x, sweep of
/// merged y-intervals per strip).
inline double union_area(std::span<const BoundingBox> boxes) {
  std::vector<double> xs;
  xs.reserve(boxes.size() * 2);
  for (const auto& b : boxes) {
    if (b.w <= 0.0 || b.h <= 0.0) continue;
    xs.push_back(b.x);
    xs.push_back(b.right());
  }
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  double total = 0.0;
  std::vector<std::pair<double, double>> spans;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double x0 = xs[i];
    const double x1 = xs[i + 1];
    spans.clear();
    for (const auto& b : boxes) {
      if (b.w <= 0.0 || b.h <= 0.0) continue;
      if (b.x <= x0 && b.right() >= x1) spans.emplace_back(b.y, b.bottom());
    }
    if (spans.empty()) continue;
    std::sort(spans.begin(), spans.end());
    double covered = 0.0;
    double lo = spans.front().first;
    double hi = spans.front().second;
    for (std::size_t k = 1; k < spans.size(); ++k) {
      if (spans[k].first > hi) {
        covered += hi - lo;
        lo = spans[k].first;
        hi = spans[k].second;
      } else {
        hi = std::max(hi, spans[k].second);
      }
    }
    covered += hi - lo;
    total += covered * (x1 - x0);
  }
  return total;
}

/// Area of (union A) symmetric-difference (union B).
inline double symmetric_difference_area(std::span<const BoundingBox> a, std::span<const BoundingBox> b) {
  std::vector<BoundingBox> pairwise;
  for (const auto& p : a)
    for (const auto& q : b)
      if (auto i = intersection(p, q)) pairwise.push_back(*i);
  const double ua = union_area(a);
  const double ub = union_area(b);
  const double both = union_area(pairwise);
  return std::max(0.0, ua + ub - 2.0 * both);
}

}  // namespace vapbench
