#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "samus/errors.hpp"
#include "samus/gating.hpp"

using namespace samus;

namespace {

// Vertices of a circle sampled every step_deg degrees.
std::vector<Vec2> polygon(double radius, double step_deg, int n) {
  std::vector<Vec2> out;
  for (int k = 0; k < n; ++k) {
    const double a = k * step_deg * kDeg;
    out.emplace_back(radius * std::cos(a), radius * std::sin(a));
  }
  return out;
}

ErrorRegion wide_region(const Vec2& c) {
  ErrorRegion r;
  r.center = c;
  r.radius = 1.0;
  return r;
}

}  // namespace

TEST(GateConfig, Validation) {
  GateConfig c;
  EXPECT_NO_THROW(c.validate());
  c.d_max = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = GateConfig{};
  c.wedge_arc = kPi;
  EXPECT_THROW(c.validate(), ConfigError);
  c.wedge_arc = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_NEAR(GateConfig{}.wedge_radius(), 0.2 * 5.0 * kDeg, 1e-15);
}

TEST(Rule1, FastStepFails) {
  const GateConfig cfg;
  const std::vector<Vec2> hist{Vec2(0, 0)};
  const GateHistory h{hist, 2.0};
  const Vec2 cand(0.012, 0.0);
  const GateVerdict v = gate_candidate(h, cand, wide_region(cand), cfg);
  EXPECT_FALSE(v.rule[0]);
  EXPECT_FALSE(v.pass);
  const Vec2 slow(0.009, 0.0);
  EXPECT_TRUE(gate_candidate(h, slow, wide_region(slow), cfg).pass);
}

TEST(Rule2and3, CircularTrackBounds) {
  const double sigma = 20 * kArcsec;
  // 10 sigma much smaller than the step: r_max tends to 1.5 from above.
  EXPECT_NEAR(r_max_bound(1.0, sigma, 1e3, 0.0), 1.5, 1e-6);
  EXPECT_GT(r_max_bound(1.0, sigma, 1e3, 0.0), 1.5);
  EXPECT_DOUBLE_EQ(psi_min_bound(0.01, 0.01, sigma, 0.0), 5 * kPi / 6);

  // Regular 12-gon: interior angle 150 deg at every vertex.
  const std::vector<Vec2> pts = polygon(0.01, 30.0, 8);
  const GateConfig cfg;
  for (std::size_t n = 1; n < pts.size(); ++n) {
    const GateHistory h{std::span(pts.data(), n), 2.0, 0.0, 1.0};
    const GateVerdict v = gate_candidate(h, pts[n], wide_region(pts[n]), cfg);
    EXPECT_TRUE(v.pass) << n << " " << v.rule[0] << v.rule[1] << v.rule[2] << v.rule[3] << v.rule[4];
  }
}

TEST(Rule2, VelocityJumpFails) {
  const std::vector<Vec2> hist{Vec2(0, 0), Vec2(0.001, 0), Vec2(0.002, 0), Vec2(0.003, 0)};
  const GateHistory h{hist, 2.0};
  const Vec2 cand(0.003 + 0.004, 0);
  const GateVerdict v = gate_candidate(h, cand, wide_region(cand), GateConfig{});
  EXPECT_FALSE(v.rule[1]);
  EXPECT_TRUE(v.rule[0]);
}

TEST(Rule3, ReversalFails) {
  const std::vector<Vec2> hist{Vec2(0, 0), Vec2(0.002, 0), Vec2(0.004, 0)};
  const GateHistory h{hist, 2.0};
  const Vec2 cand(0.004 - 0.0005, 0.0019);  // sharp turn back
  const GateVerdict v = gate_candidate(h, cand, wide_region(cand), GateConfig{});
  EXPECT_FALSE(v.rule[2]);
}

TEST(Rule4, TurnDirectionFlipFails) {
  // Counter-clockwise polygon, then a clockwise 30 deg turn.
  const std::vector<Vec2> pts = polygon(0.01, 30.0, 5);
  const Vec2 last_step = pts[4] - pts[3];
  const double a = std::atan2(last_step.y(), last_step.x()) - 30 * kDeg;
  const Vec2 cand = pts[4] + last_step.norm() * Vec2(std::cos(a), std::sin(a));
  const GateHistory h{pts, 2.0};
  const GateVerdict v = gate_candidate(h, cand, wide_region(cand), GateConfig{});
  EXPECT_TRUE(v.rule[2]);
  EXPECT_FALSE(v.rule[3]);
  // The same flip on a straighter continuation is not tested.
  const double b = std::atan2(last_step.y(), last_step.x()) - 10 * kDeg;
  const Vec2 gentle = pts[4] + last_step.norm() * Vec2(std::cos(b), std::sin(b));
  EXPECT_TRUE(gate_candidate(h, gentle, wide_region(gentle), GateConfig{}).rule[3]);
}

TEST(Rules, CandidateAtPredictionPasses) {
  const std::vector<Vec2> hist{Vec2(0, 0), Vec2(0.001, 0.0001), Vec2(0.002, 0.0003)};
  const Vec2 pred(0.003, 0.0006);
  const ErrorRegion r = build_error_region(pred, 0.001, 0.0, GateConfig{});
  EXPECT_TRUE(gate_candidate(GateHistory{hist, 2.0}, pred, r, GateConfig{}).pass);
}

TEST(Rules, ShortHistoryIsVacuous) {
  const GateConfig cfg;
  const std::vector<Vec2> one{Vec2(0, 0)};
  // Any slow step passes with one prior point, even with an odd direction.
  const Vec2 cand(-0.003, 0.002);
  const GateVerdict v = gate_candidate(GateHistory{one, 2.0}, cand, wide_region(cand), cfg);
  EXPECT_TRUE(v.pass);
  // Two prior points: rules 2 and 3 are active, rule 4 is not.
  const std::vector<Vec2> two{Vec2(0, 0), Vec2(0.001, 0)};
  const Vec2 turn(0.001 + 0.001 * std::cos(2.0), 0.001 * std::sin(2.0));
  const GateVerdict w = gate_candidate(GateHistory{two, 2.0}, turn, wide_region(turn), cfg);
  EXPECT_TRUE(w.rule[3]);
  EXPECT_FALSE(w.rule[2]);
  EXPECT_THROW(gate_candidate(GateHistory{}, cand, wide_region(cand), cfg), InvalidInput);
}

TEST(Region, RadiusExamples) {
  const GateConfig cfg;
  const Vec2 p(0.01, -0.02);
  const ErrorRegion n = build_error_region(p, 300 * kArcsec, 0.0, cfg);
  EXPECT_EQ(n.kind, RegionKind::Circle);
  EXPECT_NEAR(n.radius / kArcsec, 600.0, 1e-9);
  const ErrorRegion g = build_error_region(p, 300 * kArcsec, 0.0, cfg, RegionContext::PostGap);
  EXPECT_NEAR(g.radius / kArcsec, 1200.0, 1e-9);
  // Noise floor and eccentricity scaling.
  EXPECT_NEAR(build_error_region(p, 1 * kArcsec, 0.0, cfg).radius / kArcsec, 200.0, 1e-9);
  EXPECT_NEAR(build_error_region(p, 300 * kArcsec, 0.1, cfg).radius / kArcsec, 660.0, 1e-9);
  EXPECT_THROW(build_error_region(Vec2(std::nan(""), 0), 0.0, 0.0, cfg), InvalidInput);
}

TEST(Region, WedgeExample) {
  const GateConfig cfg;
  const Vec2 p(0.02, 0.01);
  const ErrorRegion r =
      build_error_region(p, 30 * kArcsec, 0.0, cfg, RegionContext::PostManeuver, Vec2(1.0, 0.0));
  EXPECT_EQ(r.kind, RegionKind::CircleUnionWedge);
  EXPECT_EQ(r.wedge_phase, 0.0);
  EXPECT_EQ(r.wedge_arc, kPi / 4);
  EXPECT_TRUE(point_in_region(p + Vec2(0.01, 0.0), r));
  EXPECT_FALSE(point_in_region(p + Vec2(0.0, 0.01), r));
  EXPECT_FALSE(point_in_region(p + Vec2(-0.01, 0.0), r));
  EXPECT_THROW(build_error_region(p, 0.0, 0.0, cfg, RegionContext::PostManeuver), DegenerateWedge);
}

TEST(Region, ClosedBoundary) {
  const ErrorRegion c = build_error_region(Vec2(0.1, 0.2), 300 * kArcsec, 0.0, GateConfig{});
  EXPECT_TRUE(point_in_region(c.center, c));
  EXPECT_TRUE(point_in_region(c.center + Vec2(0.0, c.radius), c));
  EXPECT_FALSE(point_in_region(c.center + Vec2(c.radius * 1.001, 0.0), c));

  const ErrorRegion w = build_error_region(Vec2::Zero(), 1 * kArcsec, 0.0, GateConfig{},
                                           RegionContext::PostManeuver, Vec2(0.0, 2.0));
  const double edge = w.wedge_phase + 0.5 * w.wedge_arc;
  const double h = 0.5 * w.wedge_radius;
  EXPECT_TRUE(point_in_region(Vec2(h * std::cos(edge), h * std::sin(edge)), w));
  const double out = edge + 1e-6;
  EXPECT_FALSE(point_in_region(Vec2(h * std::cos(out), h * std::sin(out)), w));
  EXPECT_FALSE(point_in_region(Vec2(0.0, 1.01 * w.wedge_radius), w));
}

TEST(Invariants, RandomizedProperties) {
  const oracle::GateInvariants g = oracle::gate_invariants(20000, 5);
  EXPECT_EQ(g.samples, 20000);
  EXPECT_EQ(g.r_max_floor, 0);
  EXPECT_EQ(g.psi_min_cap, 0);
  EXPECT_EQ(g.rotation, 0);
  EXPECT_EQ(g.monotonic, 0);
}

TEST(Invariants, NoiselessTruthPasses) {
  const oracle::GatePass p = oracle::noiseless_gate_pass(40, 3);
  EXPECT_GE(p.total, 10000);
  EXPECT_GE(p.rate(), 0.999) << p.pass << "/" << p.total;
}
