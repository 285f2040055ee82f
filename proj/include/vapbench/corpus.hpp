#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "vapbench/accuracy.hpp"
#include "vapbench/benchmark.hpp"
#include "vapbench/errors.hpp"
#include "vapbench/features.hpp"
#include "vapbench/params.hpp"
#include "vapbench/trace.hpp"
#include "vapbench/vap.hpp"

namespace vapbench {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Callers write results
/// into pre-sized slots so output order never depends on scheduling.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t next = 0;
  std::mutex mu;
  std::exception_ptr error;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= n || error) return;
        i = next++;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct CorpusSegment {
  SegmentRef ref;
  DetectionTrace gt;
  std::optional<DetectionTrace> cheap;

  const DetectionTrace* cheap_ptr() const { return cheap ? &*cheap : nullptr; }
};

/// Segmented traces of one or more videos, addressable by SegmentRef.
class Corpus {
 public:
  void add_video(const DetectionTrace& gt, const DetectionTrace* cheap, double segment_seconds) {
    validate(gt);
    if (cheap) {
      validate(*cheap);
      if (cheap->frames.size() != gt.frames.size()) throw InputError("cheap trace of " + gt.video_id + " is not frame-aligned");
    }
    for (const auto& seg : segmentize(gt, segment_seconds)) {
      CorpusSegment cs{{gt.video_id, seg.segment_index}, slice(gt, seg), std::nullopt};
      if (cheap) cs.cheap = slice(*cheap, seg);
      add(std::move(cs));
    }
  }

  void add(CorpusSegment s) {
    if (index_.count(s.ref)) throw InputError("duplicate segment " + s.ref.video_id + "#" + std::to_string(s.ref.segment_index));
    index_.emplace(s.ref, segments_.size());
    segments_.push_back(std::move(s));
  }

  const CorpusSegment& at(const SegmentRef& ref) const {
    const auto it = index_.find(ref);
    if (it == index_.end()) throw InputError("segment " + ref.video_id + "#" + std::to_string(ref.segment_index) + " not in corpus");
    return segments_[it->second];
  }

  bool contains(const SegmentRef& ref) const { return index_.count(ref) > 0; }
  const std::vector<CorpusSegment>& segments() const { return segments_; }
  std::size_t size() const { return segments_.size(); }

  std::vector<std::string> video_ids() const {
    std::vector<std::string> out;
    for (const auto& s : segments_)
      if (out.empty() || out.back() != s.ref.video_id) out.push_back(s.ref.video_id);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Segments whose video id satisfies the predicate, in corpus order.
  template <class Pred>
  Corpus filter(Pred&& keep) const {
    Corpus out;
    for (const auto& s : segments_)
      if (keep(s.ref)) out.add(s);
    return out;
  }

 private:
  std::vector<CorpusSegment> segments_;
  std::map<SegmentRef, std::size_t> index_;
};

enum class FeatureSource { ground_truth, cheap };

inline FeatureMatrix featurize_corpus(const Corpus& c, FeatureSource source = FeatureSource::ground_truth,
                                      const FeatureOptions& opt = {}, std::size_t jobs = 1) {
  FeatureMatrix m;
  m.rows.resize(c.size());
  parallel_for(c.size(), jobs, [&](std::size_t i) {
    const auto& s = c.segments()[i];
    const DetectionTrace* t = &s.gt;
    if (source == FeatureSource::cheap) {
      if (!s.cheap) throw InputError("segment " + s.ref.video_id + " has no cheap trace");
      t = &*s.cheap;
    }
    m.rows[i] = {s.ref.video_id, s.ref.segment_index, featurize_segment(*t, opt)};
  });
  return m;
}

// ---------------------------------------------------------------------------
// Measured operating points

struct MeasuredPoint {
  VapConfig config;
  PerfPoint perf;
};

/// Runs every configuration of the grid on one segment.
inline std::vector<MeasuredPoint> measure_grid(const VapConfig& tmpl, const KnobGrid& grid, const CorpusSegment& seg,
                                               const DegradationParams& params = {}, const MatchSpec& match = {}) {
  std::vector<MeasuredPoint> out;
  for (const auto& c : expand_grid(tmpl, grid)) out.push_back({c, run_vap(c, seg.gt, seg.cheap_ptr(), params, match).perf});
  return out;
}

/// Cheapest point whose accuracy reaches the target.
inline std::optional<MeasuredPoint> min_cost_at(const std::vector<MeasuredPoint>& pts, double target, CostDimension dim) {
  std::optional<MeasuredPoint> best;
  for (const auto& p : pts) {
    if (p.perf.accuracy < target) continue;
    if (!best || p.perf.cost(dim) < best->perf.cost(dim) ||
        (p.perf.cost(dim) == best->perf.cost(dim) && p.perf.accuracy > best->perf.accuracy))
      best = p;
  }
  return best;
}

/// Cheapest point with accuracy inside [lo, hi].
inline std::optional<MeasuredPoint> min_cost_in_band(const std::vector<MeasuredPoint>& pts, double lo, double hi,
                                                     CostDimension dim) {
  std::optional<MeasuredPoint> best;
  for (const auto& p : pts) {
    if (p.perf.accuracy < lo || p.perf.accuracy > hi) continue;
    if (!best || p.perf.cost(dim) < best->perf.cost(dim)) best = p;
  }
  return best;
}

struct AccuracyBand {
  double lo = 0.9;
  double hi = 0.95;
};

/// Per-segment cost of one strategy (other primitives at oracle) for
/// feature selection. A segment with no knob landing inside the band is left
/// missing unless `allow_above_band` is set, in which case the cheapest knob
/// reaching the band's lower edge is used.
inline CostColumn strategy_cost_column(const StrategyConfig& tmpl, const std::vector<StrategyConfig>& knobs,
                                       const Corpus& c, CostDimension dim, AccuracyBand band = {},
                                       bool allow_above_band = false, const DegradationParams& params = {},
                                       const MatchSpec& match = {}, std::size_t jobs = 1) {
  CostColumn col{std::string(to_string(tmpl.kind)), tmpl.primitive, std::vector<std::optional<double>>(c.size())};
  VapConfig base = all_oracle(dim);
  KnobGrid grid;
  grid[tmpl.primitive] = knobs;
  parallel_for(c.size(), jobs, [&](std::size_t i) {
    const auto pts = measure_grid(base, grid, c.segments()[i], params, match);
    auto p = min_cost_in_band(pts, band.lo, band.hi, dim);
    if (!p && allow_above_band) p = min_cost_at(pts, band.lo, dim);
    if (p) col.cost[i] = p->perf.cost(dim);
  });
  return col;
}

}  // namespace vapbench
