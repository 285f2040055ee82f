#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "exhaustive_matcher.hpp"
#include "helpers.hpp"
#include "vapbench/accuracy.hpp"

using namespace vapbench;
using testing_helpers::det;
using testing_helpers::frame;
using testing_helpers::make_trace;

TEST(F1, IdenticalTracesScoreOne) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto v = testing_helpers::random_segment(seed);
    const auto r = f1_over_segment(v.ground_truth, v.ground_truth);
    EXPECT_DOUBLE_EQ(r.f1, 1.0);
    EXPECT_EQ(r.counts.false_positives, 0u);
  }
}

TEST(F1, EmptyPredictionsScoreZero) {
  auto gt = make_trace();
  gt.frames.push_back(frame(0, {det(1, 0, 0, 10, 10)}));
  auto pred = gt;
  pred.frames[0].detections.clear();
  EXPECT_DOUBLE_EQ(f1_over_segment(pred, gt).f1, 0.0);
}

TEST(F1, BothEmptyIsPerfect) {
  auto gt = make_trace();
  gt.frames.push_back(frame(0));
  EXPECT_DOUBLE_EQ(f1_over_segment(gt, gt).f1, 1.0);
}

TEST(F1, OneOfTwoMatched) {
  // one TP, one FP, one FN: precision 1/2, recall 1/2
  auto gt = make_trace();
  gt.frames.push_back(frame(0, {det(1, 0, 0, 10, 10), det(2, 50, 50, 10, 10)}));
  auto pred = make_trace();
  pred.frames.push_back(frame(0, {det(1, 0, 0, 10, 10), det(3, 80, 0, 10, 10)}));
  const auto r = f1_over_segment(pred, gt);
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.f1, 0.5);
}

TEST(F1, ClassMismatchIsNotAMatch) {
  std::vector<Detection> gt{det(1, 0, 0, 10, 10, 0.9, 0)};
  std::vector<Detection> pred{det(1, 0, 0, 10, 10, 0.9, 1)};
  EXPECT_EQ(match_frame(pred, gt).true_positives, 0u);
  EXPECT_EQ(match_frame(pred, gt, MatchSpec{0.5, false}).true_positives, 1u);
}

TEST(F1, ThresholdIsInclusive) {
  // IoU exactly 0.5: boxes 0..10 and 0..5 wide, same height
  std::vector<Detection> gt{det(1, 0, 0, 10, 10)};
  std::vector<Detection> pred{det(1, 0, 0, 5, 10)};
  EXPECT_EQ(match_frame(pred, gt).true_positives, 1u);
}

TEST(F1, MisalignedTracesRejected) {
  auto a = make_trace();
  a.frames.push_back(frame(0));
  auto b = a;
  b.frames.push_back(frame(1));
  EXPECT_THROW(f1_over_segment(a, b), InputError);
  b.frames.pop_back();
  b.frames[0].frame_index = 3;
  EXPECT_THROW(f1_over_segment(a, b), InputError);
}

TEST(F1, HigherConfidencePredictionClaimsContestedBox) {
  std::vector<Detection> gt{det(1, 0, 0, 10, 10)};
  std::vector<Detection> pred{det(1, 1, 0, 10, 10, 0.3), det(2, 2, 0, 10, 10, 0.8)};
  const auto m = match_frame_detailed(pred, gt);
  EXPECT_FALSE(m.assignment[0].has_value());
  EXPECT_EQ(m.assignment[1], std::optional<std::size_t>(0));
}

TEST(F1, EqualIouTieGoesToEarliestCanonicalGroundTruth) {
  // prediction centered between two ground-truth boxes with identical IoU
  std::vector<Detection> gt{det(2, 4, 0, 10, 10), det(1, 0, 0, 10, 10)};
  std::vector<Detection> pred{det(9, 2, 0, 10, 10)};
  const auto m = match_frame_detailed(pred, gt);
  EXPECT_EQ(m.assignment[0], std::optional<std::size_t>(1));
}

TEST(F1, GreedyMatchesExhaustiveReference) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> count(0, 5), pos(0, 12), size(3, 8), cls(0, 1);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<Detection> gt, pred;
    const int ng = count(rng), np = count(rng);
    for (int i = 0; i < ng; ++i) gt.push_back(det(i, pos(rng), pos(rng), size(rng), size(rng), 1.0, cls(rng)));
    for (int i = 0; i < np; ++i)
      pred.push_back(det(i, pos(rng), pos(rng), size(rng), size(rng), std::round(conf(rng) * 4) / 4, cls(rng)));
    const auto greedy = match_frame_detailed(pred, gt);
    const auto reference = exhaustive_reference::match(pred, gt, MatchSpec{});
    ASSERT_EQ(greedy.assignment, reference) << "trial " << trial;
  }
}
