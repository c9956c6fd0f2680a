#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "samus/motion_model.hpp"

namespace samus {

inline constexpr int kNumCriteria = 10;

struct ScoreVector {
  std::array<double, kNumCriteria> s{};
  std::array<bool, kNumCriteria> defined{};
  std::optional<double> s11;
};

struct HypothesisScore {
  std::array<double, kNumCriteria> raw{};
  std::array<double, kNumCriteria> normalized{};
  double total = 0.0;
  int rank = 0;
};

struct AmbiguityConstants {
  double C1 = 0.5;
  int C2 = 3;
  double c3_floor = 3.0;
  double c3_factor = 3.0;

  // C3 = max(floor, factor * best score).
  double C3(double s_best) const;
  void validate() const;
};

// One track (raw or differenced) scored at its newest epoch k.
struct EpochScoreInput {
  std::span<const Vec2> points;       // oldest first; points.back() is epoch k
  std::span<const ModelEpoch> epochs; // same length as points
  const ParametricModel* model_incl = nullptr;  // fitted through epoch k
  const ParametricModel* model_excl = nullptr;  // fitted up to epoch k-1
  Vec2 prediction = Vec2::Zero();     // predicted point at k
  // Statistics of the steps before k; < 0 when unavailable.
  double d_mean = -1.0;
  double psi_mean = -1.0;
};

ScoreVector score_track_epoch(const EpochScoreInput& in);

// Criterion sums per hypothesis -> min-max normalized totals with ranks.
std::vector<HypothesisScore> aggregate_hypotheses(
    const std::vector<std::array<double, kNumCriteria>>& raw_sums);

struct AmbiguityDecision {
  bool best_unambiguous = true;
  double C3 = 3.0;
  std::vector<bool> propagate;  // per input hypothesis
};

// totals need not be sorted; the minimum is the best hypothesis.
AmbiguityDecision flag_ambiguity(std::span<const double> totals, const AmbiguityConstants& c);

// Measurement flag given the best-hypothesis decision and the number of
// consecutive epochs the measurement's track has been its target's best.
bool measurement_unambiguous(bool best_unambiguous, int consecutive_best,
                             const AmbiguityConstants& c);

struct MahalanobisResult {
  double s11 = 0.0;
  bool exclusive = true;
};

// others: other kinematically valid measurements for the same prediction.
MahalanobisResult score_mahalanobis(const Vec2& measured, const Vec2& predicted,
                                    const Eigen::Matrix2d& cov,
                                    std::span<const Vec2> others = {});

}  // namespace samus
