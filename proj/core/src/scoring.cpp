#include "samus/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "samus/errors.hpp"

namespace samus {

double AmbiguityConstants::C3(double s_best) const { return std::max(c3_floor, c3_factor * s_best); }

void AmbiguityConstants::validate() const {
  if (!(C1 > 0.0 && C1 < 1.0)) throw ConfigError("C1 must lie in (0, 1)");
  if (C2 < 3) throw ConfigError("C2 must be at least 3");
  if (!(c3_floor > 0.0 && c3_factor > 0.0)) throw ConfigError("C3 parameters must be positive");
}

namespace {

double angle_diff(double a, double b) { return std::abs(wrap_pi(a - b)); }

void set(ScoreVector& sv, int j, double v) {
  sv.s[static_cast<std::size_t>(j)] = v;
  sv.defined[static_cast<std::size_t>(j)] = true;
}

}  // namespace

ScoreVector score_track_epoch(const EpochScoreInput& in) {
  ScoreVector sv;
  const std::size_t n = in.points.size();
  if (n == 0 || in.epochs.size() != n) throw InvalidInput("score input needs aligned points");
  const Vec2& meas = in.points[n - 1];

  if (in.model_incl) set(sv, 0, in.model_incl->residual_norm);
  set(sv, 1, (in.prediction - meas).norm());

  if (n < 2) return sv;
  const Vec2 vk = meas - in.points[n - 2];
  const double dk = vk.norm();
  const double zk = std::atan2(vk.y(), vk.x());

  // Predicted step quantities from differenced model points.
  Vec2 m_k = in.prediction, m_k1 = in.points[n - 2];
  bool have_mk2 = false;
  Vec2 m_k2 = Vec2::Zero();
  if (in.model_excl) {
    m_k = predict_plane(*in.model_excl, in.epochs[n - 1]);
    m_k1 = predict_plane(*in.model_excl, in.epochs[n - 2]);
    if (n >= 3) {
      m_k2 = predict_plane(*in.model_excl, in.epochs[n - 3]);
      have_mk2 = true;
    }
  }
  const Vec2 v_pred = m_k - m_k1;
  const double d_pred = v_pred.norm();
  set(sv, 2, std::abs(dk - d_pred));
  if (in.d_mean >= 0.0) set(sv, 3, std::abs(dk - in.d_mean));
  if (dk > 0.0 && d_pred > 0.0) set(sv, 4, angle_diff(zk, std::atan2(v_pred.y(), v_pred.x())));

  double psi_k = 0.0;
  bool psi_ok = false;
  if (n >= 3) psi_ok = step_angle(in.points[n - 2] - in.points[n - 3], vk, psi_k);
  if (psi_ok && have_mk2) {
    double psi_pred = 0.0;
    if (step_angle(m_k1 - m_k2, v_pred, psi_pred)) set(sv, 5, std::abs(psi_k - psi_pred));
  }
  if (psi_ok && in.psi_mean >= 0.0) set(sv, 6, std::abs(psi_k - in.psi_mean));

  if (in.model_excl) {
    const double fk = invert_model_for_f(*in.model_excl, from_plane(meas), in.epochs[n - 1]);
    set(sv, 7, angle_diff(fk, in.epochs[n - 1].f));
  }
  if (dk >= 1e-12) set(sv, 8, 1.0 / dk);
  if (psi_ok && psi_k > 0.0) set(sv, 9, 1.0 / psi_k);
  return sv;
}

std::vector<HypothesisScore> aggregate_hypotheses(
    const std::vector<std::array<double, kNumCriteria>>& raw) {
  std::vector<HypothesisScore> out(raw.size());
  if (raw.empty()) return out;
  for (int j = 0; j < kNumCriteria; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    double lo = raw[0][ju], hi = raw[0][ju];
    for (const auto& r : raw) {
      lo = std::min(lo, r[ju]);
      hi = std::max(hi, r[ju]);
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
      out[i].raw[ju] = raw[i][ju];
      out[i].normalized[ju] = hi > lo ? (raw[i][ju] - lo) / (hi - lo) : 0.0;
    }
  }
  for (auto& h : out) h.total = std::accumulate(h.normalized.begin(), h.normalized.end(), 0.0);
  std::vector<std::size_t> order(out.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return out[a].total < out[b].total; });
  for (std::size_t r = 0; r < order.size(); ++r) out[order[r]].rank = static_cast<int>(r);
  return out;
}

AmbiguityDecision flag_ambiguity(std::span<const double> totals, const AmbiguityConstants& c) {
  AmbiguityDecision d;
  d.propagate.assign(totals.size(), false);
  if (totals.empty()) return d;
  std::vector<std::size_t> order(totals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return totals[a] < totals[b]; });
  const double s1 = totals[order[0]];
  if (order.size() > 1) d.best_unambiguous = s1 < c.C1 * totals[order[1]];
  d.C3 = c.C3(s1);
  for (std::size_t i = 0; i < totals.size(); ++i) d.propagate[i] = totals[i] < d.C3;
  d.propagate[order[0]] = true;
  return d;
}

bool measurement_unambiguous(bool best_unambiguous, int consecutive_best,
                             const AmbiguityConstants& c) {
  return best_unambiguous && consecutive_best >= c.C2;
}

MahalanobisResult score_mahalanobis(const Vec2& measured, const Vec2& predicted,
                                    const Eigen::Matrix2d& cov, std::span<const Vec2> others) {
  if (!cov.allFinite() || std::abs(cov(0, 1) - cov(1, 0)) > 1e-12 * cov.cwiseAbs().maxCoeff())
    throw InvalidCovariance("covariance must be finite and symmetric");
  const Eigen::LLT<Eigen::Matrix2d> llt(cov);
  if (llt.info() != Eigen::Success || !(cov.determinant() > 0.0))
    throw InvalidCovariance("covariance must be positive definite");
  auto dist = [&](const Vec2& p) {
    const Vec2 z = llt.matrixL().solve(p - predicted);
    return z.norm();
  };
  MahalanobisResult r;
  r.s11 = dist(measured);
  for (const Vec2& o : others)
    if (dist(o) <= 3.0) r.exclusive = false;
  return r;
}

}  // namespace samus
