#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "samus/errors.hpp"
#include "samus/sim.hpp"

using namespace samus;

namespace {

ScenarioConfig quiet(const char* suite, std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.dataset = Dataset::parse(suite);
  cfg.seed = seed;
  cfg.sigma_vbs = cfg.sigma_offaxis = cfg.sigma_roll = 0.0;
  cfg.clutter_min = cfg.clutter_max = 0;
  return cfg;
}

// Kolmogorov-Smirnov statistic against the uniform distribution on [lo, hi].
double ks_uniform(std::vector<double> v, double lo, double hi) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double F = (v[i] - lo) / (hi - lo);
    d = std::max({d, F - i / n, (i + 1) / n - F});
  }
  return d;
}

}  // namespace

TEST(Dataset, ParseAndName) {
  for (const char* s : {"NC-EIS", "ECC-EIS", "NC-IT", "ECC-IT", "NC-EIS-MAN", "ECC-IT-MAN"})
    EXPECT_EQ(Dataset::parse(s).name(), s);
  EXPECT_TRUE(Dataset::parse("NC-EIS-MAN").maneuvers);
  EXPECT_EQ(Dataset::parse("ECC-IT").orbit, OrbitClass::Eccentric);
  EXPECT_THROW(Dataset::parse("LEO"), ConfigError);
}

TEST(ScenarioConfig, Validation) {
  ScenarioConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.interval = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = ScenarioConfig{};
  cfg.clutter_min = 5;
  cfg.clutter_max = 2;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = ScenarioConfig{};
  cfg.gap_fraction = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = ScenarioConfig{};
  cfg.sigma_vbs = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Generate, RatioAndRangeInvariants) {
  for (const char* suite : {"NC-EIS", "ECC-EIS", "NC-IT", "ECC-IT-MAN"}) {
    const bool it = std::string(suite).find("IT") != std::string::npos;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      ScenarioConfig cfg;
      cfg.dataset = Dataset::parse(suite);
      cfg.seed = seed;
      const Scenario sc = generate_scenario(cfg);
      const double a = sc.observer0.a;
      const bool nc = cfg.dataset.orbit == OrbitClass::NearCircular;
      EXPECT_GE(sc.observer0.e, nc ? 0.0001 : 0.01);
      EXPECT_LE(sc.observer0.e, nc ? 0.01 : 0.8);
      for (const RoeState& r : sc.target_roe) {
        const double ratio = it ? 200.0 : 20.0;
        EXPECT_GE(std::abs(r.dl), ratio * r.de() * (1 - 1e-12));
        EXPECT_GE(std::abs(r.dl), ratio * r.di() * (1 - 1e-12));
        EXPECT_GE(std::abs(r.dl) * a, 10.0 - 1e-9);
        EXPECT_LE(std::abs(r.dl) * a, 200.0 + 1e-9);
      }
      for (const ManeuverSpec& m : sc.maneuvers) {
        EXPECT_GE(m.dv.norm(), 0.1 - 1e-12);
        EXPECT_LE(m.dv.norm(), 2.0 + 1e-12);
      }
      EXPECT_EQ(sc.maneuvers.size(), cfg.dataset.maneuvers ? 2u : 0u);
    }
  }
}

TEST(Generate, SameSeedSameOutput) {
  ScenarioConfig cfg;
  cfg.dataset = Dataset::parse("NC-EIS-MAN");
  cfg.seed = 42;
  const SimOutput a = simulate(generate_scenario(cfg));
  const SimOutput b = simulate(generate_scenario(cfg));
  ASSERT_EQ(a.scans.size(), b.scans.size());
  for (std::size_t k = 0; k < a.scans.size(); ++k) {
    ASSERT_EQ(a.scans[k].truth_labels, b.scans[k].truth_labels);
    for (std::size_t j = 0; j < a.scans[k].bearings.size(); ++j) {
      ASSERT_EQ(a.scans[k].bearings[j].alpha, b.scans[k].bearings[j].alpha);
      ASSERT_EQ(a.scans[k].bearings[j].epsilon, b.scans[k].bearings[j].epsilon);
    }
    for (std::size_t j = 0; j < a.truth.epochs[k].bearings.size(); ++j)
      ASSERT_EQ(a.truth.epochs[k].bearings[j].alpha, b.truth.epochs[k].bearings[j].alpha);
  }
  cfg.seed = 43;
  const SimOutput c = simulate(generate_scenario(cfg));
  bool differs = false;
  for (std::size_t k = 0; k < std::min(a.scans.size(), c.scans.size()) && !differs; ++k)
    differs = a.scans[k].bearings.size() != c.scans[k].bearings.size() ||
              (!a.scans[k].bearings.empty() && a.scans[k].bearings[0].alpha != c.scans[k].bearings[0].alpha);
  EXPECT_TRUE(differs);
}

TEST(Generate, AlongTrackSeparationIsUniform) {
  // Wide field so that visibility rejection does not shape the draw.
  std::vector<double> dl;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    ScenarioConfig cfg;
    cfg.seed = seed;
    cfg.fov_half_x = cfg.fov_half_y = 40.0 * kDeg;
    const Scenario sc = generate_scenario(cfg);
    for (const RoeState& r : sc.target_roe) dl.push_back(std::abs(r.dl) * sc.observer0.a);
  }
  // 1% critical value, large-sample form.
  EXPECT_LT(ks_uniform(dl, 10.0, 200.0), 1.628 / std::sqrt(static_cast<double>(dl.size())));
}

TEST(Generate, ExplicitGeometryAndErrors) {
  ScenarioConfig cfg;
  cfg.observer = KeplerianElements{6878.0, 0.001, 1.5, 0, 0, 0};
  cfg.targets_km = {RoeState{0, -30, 0.2, 0, 0.1, 0}};
  cfg.maneuvers = std::vector<ManeuverSpec>{};
  const Scenario sc = generate_scenario(cfg);
  EXPECT_EQ(sc.boresight_sign, -1);
  EXPECT_NEAR(sc.target_roe[0].dl * 6878.0, -30.0, 1e-9);
  EXPECT_TRUE(sc.maneuvers.empty());

  cfg.targets_km = {RoeState{0, -3000, 0, 0, 0, 0}};
  EXPECT_THROW(generate_scenario(cfg), ConfigError);
  cfg.targets_km = {RoeState{0, -30, 0, 0, 0, 0}};
  cfg.observer->i = 0.0;
  EXPECT_THROW(generate_scenario(cfg), ConfigError);
}

TEST(Propagate, TwoBodyEnergyAndIdenticalOrbit) {
  ScenarioConfig cfg;
  cfg.j2 = false;
  cfg.observer = KeplerianElements{6878.0, 0.001, 1.2, 0, 0, 0};
  cfg.targets_km = {RoeState{0, 0, 0, 0, 0, 0}};
  cfg.maneuvers = std::vector<ManeuverSpec>{};
  const Scenario sc = generate_scenario(cfg);
  auto energy = [](const InertialState& s) { return 0.5 * s.v.squaredNorm() - kMuEarth / s.r.norm(); };
  const double e0 = energy(sc.initial[0]);
  const auto st = propagate_truth(sc, 2 * sc.period);
  EXPECT_LT(std::abs(energy(st[0]) - e0) / std::abs(e0), 1e-10);
  EXPECT_LT((st[1].r - st[0].r).norm(), 1e-6 * sc.observer0.a);
}

TEST(Propagate, NodalDriftMatchesFirstOrderRate) {
  ScenarioConfig cfg;
  cfg.observer = KeplerianElements{6878.0, 0.001, 50.0 * kDeg, 0.3, 0, 0};
  cfg.targets_km = {RoeState{0, -30, 0, 0, 0, 0}};
  cfg.maneuvers = std::vector<ManeuverSpec>{};
  const Scenario sc = generate_scenario(cfg);
  const double t = 2 * sc.period;
  const auto st = propagate_truth(sc, t);
  // Osculating node wobbles; compare at the same orbital phase.
  const KeplerianElements e0 = elements_from_cartesian(sc.initial[0]);
  const KeplerianElements e1 = elements_from_cartesian(st[0]);
  const double drift = wrap_pi(e1.raan - e0.raan);
  const double expect = j2_secular_rates(sc.observer0).raan_dot * t;
  EXPECT_NEAR(drift, expect, 0.02 * std::abs(expect));
}

TEST(Synthesize, NoiselessEqualsTruth) {
  ScenarioConfig cfg = quiet("NC-EIS", 5);
  const Scenario sc = generate_scenario(cfg);
  const SimOutput out = simulate(sc);
  ASSERT_EQ(out.scans.size(), out.truth.epochs.size());
  for (std::size_t k = 0; k < out.scans.size(); ++k) {
    const Scan& s = out.scans[k];
    const TruthEpoch& te = out.truth.epochs[k];
    EXPECT_EQ(s.epoch, te.t);
    int visible = 0;
    for (bool v : te.in_fov) visible += v;
    ASSERT_EQ(static_cast<int>(s.bearings.size()), visible);
    for (std::size_t j = 0; j < s.bearings.size(); ++j) {
      const int t = s.truth_labels[j];
      ASSERT_GE(t, 0);
      EXPECT_NEAR(s.bearings[j].alpha, te.bearings[t].alpha, 1e-15);
      EXPECT_NEAR(s.bearings[j].epsilon, te.bearings[t].epsilon, 1e-15);
    }
  }
}

TEST(Synthesize, WhiteNoiseLevel) {
  ScenarioConfig cfg;
  cfg.sigma_offaxis = cfg.sigma_roll = 0.0;
  cfg.clutter_min = cfg.clutter_max = 0;
  TruthEpoch te;
  te.bearings = {Bearing{0.01, -0.02}};
  te.in_fov = {true};
  Rng rng(99);
  double s2a = 0.0, s2e = 0.0;
  const int n = 10000;
  for (int k = 0; k < n; ++k) {
    const Scan s = synthesize_scan(te, cfg, rng);
    s2a += std::pow(s.bearings[0].alpha - 0.01, 2);
    s2e += std::pow(s.bearings[0].epsilon + 0.02, 2);
  }
  EXPECT_NEAR(std::sqrt(s2a / n), cfg.sigma_vbs, 0.03 * cfg.sigma_vbs);
  EXPECT_NEAR(std::sqrt(s2e / n), cfg.sigma_vbs, 0.03 * cfg.sigma_vbs);
}

TEST(Synthesize, ClutterCountsAndLabels) {
  ScenarioConfig cfg;
  cfg.seed = 3;
  const Scenario sc = generate_scenario(cfg);
  const SimOutput out = simulate(sc);
  for (std::size_t k = 0; k < out.scans.size(); ++k) {
    const Scan& s = out.scans[k];
    int targets = 0, clutter = 0;
    std::vector<int> seen(sc.target_roe.size(), 0);
    for (std::size_t j = 0; j < s.bearings.size(); ++j) {
      if (s.truth_labels[j] < 0) {
        ++clutter;
        EXPECT_LE(std::abs(s.bearings[j].epsilon), cfg.fov_half_x);
        EXPECT_LE(std::abs(s.bearings[j].alpha), cfg.fov_half_y);
      } else {
        ++targets;
        ++seen[s.truth_labels[j]];
      }
    }
    EXPECT_GE(clutter, cfg.clutter_min);
    EXPECT_LE(clutter, cfg.clutter_max);
    for (std::size_t j = 0; j < seen.size(); ++j) EXPECT_EQ(seen[j], out.truth.epochs[k].in_fov[j] ? 1 : 0);
  }
}

TEST(Synthesize, GapIsContiguousFractionOfOrbit) {
  ScenarioConfig cfg = quiet("NC-EIS", 11);
  cfg.gap_fraction = 0.3;
  cfg.interval = 30.0;
  cfg.duration_orbits = 1.0;
  const Scenario sc = generate_scenario(cfg);
  const SimOutput out = simulate(sc);
  int gaps = 0, runs = 0;
  bool prev = false;
  for (const Scan& s : out.scans) {
    if (!s.visible) {
      EXPECT_TRUE(s.bearings.empty());
      ++gaps;
    }
    runs += !s.visible && !prev;
    prev = !s.visible;
  }
  // One gap per orbit; it may wrap around the end of the span.
  const bool wraps = !out.scans.front().visible && !out.scans.back().visible;
  EXPECT_EQ(runs, wraps ? 2 : 1);
  EXPECT_NEAR(static_cast<double>(gaps) / out.scans.size(), 0.3, 2.0 / out.scans.size());
}

TEST(Observer, EstimateTracksTruth) {
  ScenarioConfig cfg;
  cfg.seed = 8;
  const Scenario sc = generate_scenario(cfg);
  const ObserverEstimate est = make_observer_estimate(sc);
  const auto truth = propagate_truth(sc, sc.period);
  // 10 m / 2 cm/s initial error grows to a few km over an orbit at most.
  EXPECT_LT((est.at(sc.period).state.r - truth[0].r).norm(), 5.0);
}

TEST(Maneuvers, KnownListCarriesActor) {
  ScenarioConfig cfg;
  cfg.dataset = Dataset::parse("NC-EIS-MAN");
  cfg.observer = KeplerianElements{6878.0, 0.001, 1.5, 0, 0, 0};
  cfg.targets_km = {RoeState{0, -30, 0.2, 0, 0.1, 0}};
  cfg.maneuvers = std::vector<ManeuverSpec>{{600.0, Vec3(0, 1, 0), -1}, {1800.0, Vec3(0, 0, 1), 0}};
  const Scenario sc = generate_scenario(cfg);
  const auto list = known_maneuvers(sc);
  ASSERT_EQ(list.size(), 2u);
  EXPECT_EQ(list[0].actor, Actor::Observer);
  EXPECT_EQ(list[1].actor, Actor::UnknownTarget);
  // Executed burns differ from nominal by the execution error only.
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(sc.executed_dv[i].norm(), 1.0, 0.3);
    EXPECT_LT(std::acos(std::clamp(sc.executed_dv[i].normalized().dot(sc.maneuvers[i].dv.normalized()), -1.0, 1.0)),
              20 * 60 * kArcsec);
  }
}
