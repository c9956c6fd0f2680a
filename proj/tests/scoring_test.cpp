#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "oracles.hpp"
#include "samus/errors.hpp"
#include "samus/scoring.hpp"

using namespace samus;

namespace {

using Raw = std::array<double, kNumCriteria>;

Raw filled(double v) {
  Raw r;
  r.fill(v);
  return r;
}

struct TrackSample {
  std::vector<Vec2> pts;
  std::vector<ModelEpoch> eps;
};

// Scores the newest point of a track the way the tracker does: model through
// k and through k - 1, prediction from the latter.
ScoreVector score_newest(const std::vector<Vec2>& pts, const std::vector<ModelEpoch>& eps) {
  const std::size_t n = pts.size();
  EpochScoreInput in;
  in.points = pts;
  in.epochs = eps;
  std::optional<ParametricModel> incl, excl;
  if (n >= 3) incl = fit_parametric_model(std::span<const Vec2>(pts), std::span<const ModelEpoch>(eps));
  if (n >= 4)
    excl = fit_parametric_model(std::span<const Vec2>(pts.data(), n - 1),
                                std::span<const ModelEpoch>(eps.data(), n - 1));
  in.model_incl = incl ? &*incl : nullptr;
  in.model_excl = excl ? &*excl : nullptr;
  in.prediction = excl ? predict_plane(*excl, eps[n - 1]) : pts[n - 2];
  if (n >= 3) {
    const TrackGeometry g = track_geometry(std::span<const Vec2>(pts.data(), n - 1));
    in.d_mean = g.d_mean;
    in.psi_mean = g.psi_mean;
  }
  return score_track_epoch(in);
}

void accumulate(Raw& sum, const ScoreVector& sv) {
  for (int j = 0; j < kNumCriteria; ++j)
    if (sv.defined[static_cast<std::size_t>(j)]) sum[static_cast<std::size_t>(j)] += sv.s[static_cast<std::size_t>(j)];
}

}  // namespace

TEST(Score, NoiselessTrackHasZeroResiduals) {
  const ParametricModel m = ParametricModel::from_x({0.001, 0.003, 1.0, 0.002, 0.001, 2.0});
  std::vector<Vec2> pts;
  std::vector<ModelEpoch> eps;
  for (int k = 0; k < 8; ++k) {
    eps.push_back(ModelEpoch{0, 0.01, 0.4, 1}.at_anomaly(0.2 + 0.25 * k));
    pts.push_back(predict_plane(m, eps.back()));
  }
  const ScoreVector sv = score_newest(pts, eps);
  for (int j : {0, 1, 2, 4, 5, 7}) {
    ASSERT_TRUE(sv.defined[static_cast<std::size_t>(j)]) << j;
    EXPECT_NEAR(sv.s[static_cast<std::size_t>(j)], 0.0, 1e-12) << "s" << j + 1;
  }
  EXPECT_GT(sv.s[8], 0.0);
  EXPECT_GT(sv.s[9], 0.0);
}

TEST(Score, EqualStepsZeroStepTerms) {
  // Straight, evenly spaced track: d_k = d_mean = d_pred.
  std::vector<Vec2> pts;
  std::vector<ModelEpoch> eps;
  for (int k = 0; k < 4; ++k) {
    pts.emplace_back(0.001 * k, 0.0005 * k);
    eps.push_back(ModelEpoch{0, 0.0, 0.0, 1}.at_anomaly(0.1 * k));
  }
  EpochScoreInput in;
  in.points = pts;
  in.epochs = eps;
  in.prediction = pts.back();
  in.d_mean = (pts[1] - pts[0]).norm();
  const ScoreVector sv = score_track_epoch(in);
  EXPECT_NEAR(sv.s[2], 0.0, 1e-15);
  EXPECT_NEAR(sv.s[3], 0.0, 1e-15);
  EXPECT_NEAR(sv.s[1], 0.0, 1e-15);
  EXPECT_FALSE(sv.defined[0]);
  EXPECT_FALSE(sv.defined[7]);
}

TEST(Score, DegenerateStepsLeaveGuardedTermsUndefined) {
  const std::vector<Vec2> pts{Vec2(0.01, 0.01), Vec2(0.01, 0.01)};
  const std::vector<ModelEpoch> eps(2, ModelEpoch{0, 0, 0, 1});
  EpochScoreInput in;
  in.points = pts;
  in.epochs = eps;
  in.prediction = pts[1];
  const ScoreVector sv = score_track_epoch(in);
  EXPECT_FALSE(sv.defined[8]);
  EXPECT_FALSE(sv.defined[9]);
  for (int j = 0; j < kNumCriteria; ++j)
    if (sv.defined[static_cast<std::size_t>(j)]) EXPECT_TRUE(std::isfinite(sv.s[static_cast<std::size_t>(j)]));
  EXPECT_THROW(score_track_epoch(EpochScoreInput{}), InvalidInput);
}

TEST(Score, AngleTermsLieInZeroPi) {
  Rng rng(17);
  for (int n = 0; n < 500; ++n) {
    std::vector<Vec2> pts;
    std::vector<ModelEpoch> eps;
    for (int k = 0; k < 6; ++k) {
      pts.emplace_back(rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01));
      eps.push_back(ModelEpoch{0, 0.1, 0.3, 1}.at_anomaly(0.3 * k));
    }
    const ScoreVector sv = score_newest(pts, eps);
    for (int j : {4, 5, 6, 7})
      if (sv.defined[static_cast<std::size_t>(j)]) {
        ASSERT_GE(sv.s[static_cast<std::size_t>(j)], 0.0);
        ASSERT_LE(sv.s[static_cast<std::size_t>(j)], kPi);
      }
  }
}

TEST(Score, CorrectAssignmentBeatsSwap) {
  int wins = 0, trials = 0;
  for (int c = 0; trials < 500 && c < 200; ++c) {
    ScenarioConfig cfg;
    cfg.seed = 1000 + static_cast<std::uint64_t>(c);
    cfg.n_targets = 2;
    cfg.clutter_min = cfg.clutter_max = 0;
    const Scenario sc = generate_scenario(cfg);
    const SimOutput sim = simulate(sc);
    const ObserverEstimate obs = make_observer_estimate(sc);
    const Tracker frame(tracker_config_for(sc), obs);
    const int W = 8;

    std::vector<TrackSample> tr(2);
    for (const Scan& s : sim.scans) {
      if (!s.visible) continue;
      std::array<int, 2> idx{-1, -1};
      for (std::size_t m = 0; m < s.bearings.size(); ++m)
        if (s.truth_labels[m] >= 0) idx[static_cast<std::size_t>(s.truth_labels[m])] = static_cast<int>(m);
      if (idx[0] < 0 || idx[1] < 0) continue;
      const ModelEpoch ep = ModelEpoch::from(obs.at(s.epoch));
      std::array<Vec2, 2> meas;
      for (std::size_t j = 0; j < 2; ++j)
        meas[j] = frame.model_plane_point(s.bearings[static_cast<std::size_t>(idx[j])], s.epoch);

      if (tr[0].pts.size() >= 4 && trials < 500) {
        Raw good{}, swapped{};
        for (std::size_t j = 0; j < 2; ++j) {
          for (std::size_t a = 0; a < 2; ++a) {
            TrackSample t = tr[j];
            if (t.pts.size() > static_cast<std::size_t>(W)) {
              t.pts.erase(t.pts.begin());
              t.eps.erase(t.eps.begin());
            }
            t.pts.push_back(meas[a]);
            t.eps.push_back(ep);
            accumulate(a == j ? good : swapped, score_newest(t.pts, t.eps));
          }
        }
        const auto agg = aggregate_hypotheses({good, swapped});
        wins += agg[0].total < agg[1].total;
        ++trials;
      }
      for (std::size_t j = 0; j < 2; ++j) {
        tr[j].pts.push_back(meas[j]);
        tr[j].eps.push_back(ep);
      }
    }
  }
  ASSERT_EQ(trials, 500);
  EXPECT_GE(wins, 475) << wins << "/" << trials;
}

TEST(Aggregate, Examples) {
  const auto one = aggregate_hypotheses({filled(3.0)});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].total, 0.0);
  EXPECT_EQ(one[0].rank, 0);

  Raw a{}, b{};
  a[0] = 2.0;
  b[0] = 4.0;
  const auto two = aggregate_hypotheses({a, b});
  EXPECT_EQ(two[0].normalized[0], 0.0);
  EXPECT_EQ(two[1].normalized[0], 1.0);
  EXPECT_EQ(two[0].total, 0.0);
  EXPECT_EQ(two[1].total, 1.0);
  EXPECT_TRUE(aggregate_hypotheses({}).empty());
}

TEST(Aggregate, OrderPreservingAndScaleFree) {
  Rng rng(3);
  for (int n = 0; n < 200; ++n) {
    std::vector<Raw> raw(static_cast<std::size_t>(rng.uniform_int(2, 7)));
    for (auto& r : raw)
      for (auto& v : r) v = rng.uniform(0.0, 10.0);
    const auto base = aggregate_hypotheses(raw);
    for (std::size_t i = 0; i < raw.size(); ++i)
      for (std::size_t k = 0; k < raw.size(); ++k)
        if (raw[i][0] < raw[k][0]) ASSERT_LT(base[i].normalized[0], base[k].normalized[0]);

    auto scaled = raw;
    const int j = rng.uniform_int(0, kNumCriteria - 1);
    const double f = std::exp(rng.uniform(-5.0, 5.0));
    for (auto& r : scaled) r[static_cast<std::size_t>(j)] *= f;
    const auto s = aggregate_hypotheses(scaled);
    for (std::size_t i = 0; i < raw.size(); ++i) ASSERT_EQ(s[i].rank, base[i].rank);

    // Reversing the input reverses the ranks' positions.
    std::vector<Raw> rev(raw.rbegin(), raw.rend());
    const auto r = aggregate_hypotheses(rev);
    for (std::size_t i = 0; i < raw.size(); ++i)
      ASSERT_NEAR(r[raw.size() - 1 - i].total, base[i].total, 1e-12);
  }
}

TEST(Ambiguity, Examples) {
  const AmbiguityConstants c;
  EXPECT_TRUE(flag_ambiguity(std::vector{2.5, 1.0}, c).best_unambiguous);
  EXPECT_FALSE(flag_ambiguity(std::vector{2.0, 3.0}, c).best_unambiguous);

  const std::vector<double> t{0.5, 2.9, 3.1};
  const AmbiguityDecision d = flag_ambiguity(t, c);
  EXPECT_EQ(d.C3, 3.0);
  EXPECT_EQ(d.propagate, (std::vector<bool>{true, true, false}));
  EXPECT_EQ(c.C3(2.0), 6.0);

  // The best hypothesis always propagates, alone it is unambiguous.
  const AmbiguityDecision lone = flag_ambiguity(std::vector{7.0}, c);
  EXPECT_TRUE(lone.best_unambiguous);
  EXPECT_EQ(lone.propagate, std::vector<bool>{true});
  EXPECT_TRUE(flag_ambiguity(std::vector<double>{}, c).propagate.empty());
}

TEST(Ambiguity, MeasurementNeedsConsecutiveEpochs) {
  const AmbiguityConstants c;
  EXPECT_FALSE(measurement_unambiguous(true, 2, c));
  EXPECT_TRUE(measurement_unambiguous(true, 3, c));
  EXPECT_FALSE(measurement_unambiguous(false, 10, c));
}

TEST(Ambiguity, Validation) {
  AmbiguityConstants c;
  EXPECT_NO_THROW(c.validate());
  c.C1 = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = AmbiguityConstants{};
  c.C2 = 2;
  EXPECT_THROW(c.validate(), ConfigError);
  c = AmbiguityConstants{};
  c.c3_floor = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Mahalanobis, Examples) {
  const double s = 20 * kArcsec;
  const Vec2 p(0.01, 0.02);
  const Eigen::Matrix2d iso = s * s * Eigen::Matrix2d::Identity();
  EXPECT_EQ(score_mahalanobis(p, p, iso).s11, 0.0);
  EXPECT_NEAR(score_mahalanobis(p + Vec2(0.6 * s, 0.8 * s), p, iso).s11, 1.0, 1e-12);
  Eigen::Matrix2d diag = Eigen::Matrix2d::Zero();
  diag(0, 0) = s * s;
  diag(1, 1) = 4 * s * s;
  EXPECT_NEAR(score_mahalanobis(p + Vec2(0, 2 * s), p, diag).s11, 1.0, 1e-12);
}

TEST(Mahalanobis, ExclusivityAndErrors) {
  const Eigen::Matrix2d iso = Eigen::Matrix2d::Identity() * 1e-8;
  const Vec2 p = Vec2::Zero();
  const std::vector<Vec2> near{Vec2(2e-4, 0)}, far{Vec2(1e-3, 0)};
  EXPECT_FALSE(score_mahalanobis(p, p, iso, near).exclusive);
  EXPECT_TRUE(score_mahalanobis(p, p, iso, far).exclusive);

  Eigen::Matrix2d bad = Eigen::Matrix2d::Identity();
  bad(1, 1) = -1.0;
  EXPECT_THROW(score_mahalanobis(p, p, bad), InvalidCovariance);
  Eigen::Matrix2d asym = Eigen::Matrix2d::Identity();
  asym(0, 1) = 0.5;
  EXPECT_THROW(score_mahalanobis(p, p, asym), InvalidCovariance);
  EXPECT_THROW(score_mahalanobis(p, p, Eigen::Matrix2d::Zero()), InvalidCovariance);
}
