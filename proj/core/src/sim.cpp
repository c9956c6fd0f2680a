#include "samus/sim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "samus/errors.hpp"

namespace samus {

std::string Dataset::name() const {
  std::string s = orbit == OrbitClass::NearCircular ? "NC" : "ECC";
  s += formation == FormationClass::Eis ? "-EIS" : "-IT";
  if (maneuvers) s += "-MAN";
  return s;
}

Dataset Dataset::parse(const std::string& raw) {
  std::string s;
  for (char c : raw) s += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  Dataset d;
  std::string rest;
  if (s.rfind("NC-", 0) == 0) {
    d.orbit = OrbitClass::NearCircular;
    rest = s.substr(3);
  } else if (s.rfind("ECC-", 0) == 0) {
    d.orbit = OrbitClass::Eccentric;
    rest = s.substr(4);
  } else {
    throw ConfigError("unknown suite '" + raw + "'");
  }
  if (rest.size() >= 4 && rest.compare(rest.size() - 4, 4, "-MAN") == 0) {
    d.maneuvers = true;
    rest.resize(rest.size() - 4);
  }
  if (rest == "EIS")
    d.formation = FormationClass::Eis;
  else if (rest == "IT")
    d.formation = FormationClass::InTrain;
  else
    throw ConfigError("unknown formation in suite '" + raw + "'");
  return d;
}

double ScenarioConfig::e_lo() const {
  if (e_min >= 0.0) return e_min;
  return dataset.orbit == OrbitClass::NearCircular ? 1e-4 : 0.01;
}

double ScenarioConfig::e_hi() const {
  if (e_max >= 0.0) return e_max;
  return dataset.orbit == OrbitClass::NearCircular ? 0.01 : 0.8;
}

double ScenarioConfig::ratio() const {
  if (min_ratio > 0.0) return min_ratio;
  return dataset.formation == FormationClass::Eis ? 20.0 : 200.0;
}

void ScenarioConfig::validate() const {
  if (n_targets < 0) throw ConfigError("n_targets must be non-negative");
  if (!(duration_orbits > 0.0)) throw ConfigError("duration must be positive");
  if (!(interval > 0.0)) throw ConfigError("interval must be positive");
  if (sigma_vbs < 0.0 || sigma_offaxis < 0.0 || sigma_roll < 0.0)
    throw ConfigError("noise levels must be non-negative");
  if (clutter_min < 0 || clutter_max < clutter_min) throw ConfigError("bad clutter range");
  if (!(gap_fraction >= 0.0 && gap_fraction < 1.0)) throw ConfigError("gap fraction must lie in [0, 1)");
  if (!(e_lo() >= 0.0 && e_hi() < 1.0 && e_lo() <= e_hi())) throw ConfigError("bad eccentricity range");
  if (!(rp_min > 0.0 && rp_max >= rp_min)) throw ConfigError("bad periapsis range");
  if (!(dl_min > 0.0 && dl_max >= dl_min)) throw ConfigError("bad along-track range");
  if (!(dv_min >= 0.0 && dv_max >= dv_min)) throw ConfigError("bad maneuver magnitude range");
  if (!(integration_step > 0.0)) throw ConfigError("integration step must be positive");
  if (n_maneuvers < 0) throw ConfigError("n_maneuvers must be non-negative");
  if (observer) {
    try {
      observer->validate();
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("observer: ") + e.what());
    }
  }
  if (maneuvers) {
    for (const auto& m : *maneuvers)
      if (m.spacecraft < -1 || m.spacecraft >= n_targets)
        throw ConfigError("maneuver spacecraft index out of range");
  }
}

bool Scenario::in_gap(double t) const {
  if (cfg.gap_fraction <= 0.0) return false;
  double ph = std::fmod(t / period + gap_phase, 1.0);
  if (ph < 0.0) ph += 1.0;
  return ph < cfg.gap_fraction;
}

namespace {

Mat3 small_rotation(const Vec3& w) {
  const double th = w.norm();
  if (th == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(th, w / th).toRotationMatrix();
}

KeplerianElements draw_observer(const ScenarioConfig& cfg, Rng& rng) {
  KeplerianElements el;
  for (int tries = 0; tries < 10000; ++tries) {
    el.e = rng.uniform(cfg.e_lo(), cfg.e_hi());
    const double rp = rng.uniform(cfg.rp_min, cfg.rp_max);
    el.a = rp / (1.0 - el.e);
    el.i = rng.uniform(cfg.i_min, cfg.i_max);
    el.raan = rng.uniform(0.0, kTwoPi);
    el.argp = rng.uniform(0.0, kTwoPi);
    el.M = rng.uniform(0.0, kTwoPi);
    if (std::abs(std::sin(el.i)) >= cfg.min_abs_sin_i) return el;
  }
  throw ConfigError("inclination range admits no non-equatorial orbit");
}

// Uniform in the square [-m, m]^2 restricted to the disk of radius m.
Vec2 draw_in_disk(double m, Rng& rng) {
  for (;;) {
    const Vec2 p(rng.uniform(-m, m), rng.uniform(-m, m));
    if (p.norm() <= m) return p;
  }
}

RoeState draw_target_km(const ScenarioConfig& cfg, int sign, Rng& rng) {
  RoeState r;
  const double dl = rng.uniform(cfg.dl_min, cfg.dl_max);
  r.dl = sign * dl;
  r.da = rng.uniform(-cfg.da_max, cfg.da_max);
  const Vec2 de = draw_in_disk(std::min(cfg.de_max, dl / cfg.ratio()), rng);
  const Vec2 di = draw_in_disk(std::min(cfg.di_max, dl / cfg.ratio()), rng);
  r.dex = de.x();
  r.dey = de.y();
  r.dix = di.x();
  r.diy = di.y();
  return r;
}

InertialState state_from_mean(const KeplerianElements& mean, const ScenarioConfig& cfg) {
  KeplerianElements osc = mean;
  if (cfg.j2) osc.a += j2_short_period_sma(mean, cfg.gravity);
  return cartesian_from_elements(osc, cfg.gravity.mu);
}

Vec3 random_direction(Rng& rng) {
  for (;;) {
    Vec3 v(rng.normal(), rng.normal(), rng.normal());
    const double n = v.norm();
    if (n > 1e-9) return v / n;
  }
}

std::vector<ManeuverSpec> draw_maneuvers(const ScenarioConfig& cfg, double span, Rng& rng) {
  std::vector<ManeuverSpec> out;
  if (!cfg.dataset.maneuvers || cfg.n_maneuvers == 0) return out;
  const double spacing = cfg.maneuver_spacing_scans * cfg.interval;
  for (int tries = 0; tries < 10000; ++tries) {
    out.clear();
    for (int i = 0; i < cfg.n_maneuvers; ++i) {
      ManeuverSpec m;
      m.spacecraft = rng.uniform_int(0, cfg.n_targets) - 1;
      m.epoch = rng.uniform(0.1 * span, 0.9 * span);
      m.dv = random_direction(rng) * rng.uniform(cfg.dv_min, cfg.dv_max);
      out.push_back(m);
    }
    std::sort(out.begin(), out.end(),
              [](const ManeuverSpec& a, const ManeuverSpec& b) { return a.epoch < b.epoch; });
    bool ok = true;
    for (std::size_t i = 1; i < out.size(); ++i)
      if (out[i].epoch - out[i - 1].epoch < spacing) ok = false;
    if (ok) return out;
  }
  throw ConfigError("maneuver spacing cannot be satisfied within the span");
}

Vec3 execute(const Vec3& dv, const ScenarioConfig& cfg, Rng& rng) {
  const double n = dv.norm();
  if (n == 0.0) return dv;
  const double mag = n * (1.0 + cfg.dv_mag_sigma * rng.normal());
  Vec3 w(rng.normal(), rng.normal(), rng.normal());
  w *= cfg.dv_dir_sigma;
  const Vec3 u = dv / n;
  w -= u * u.dot(w);  // rotation about dv itself changes nothing
  return small_rotation(w) * u * mag;
}

bool targets_stay_visible(const Scenario& sc) {
  TruthPropagator prop(sc, false);
  for (int k = 0; k < sc.n_scans; ++k) {
    prop.advance(sc.epoch(k));
    const TruthEpoch te = truth_epoch(sc, prop.states(), k);
    for (bool v : te.in_fov)
      if (!v) return false;
  }
  return true;
}

}  // namespace

Scenario generate_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Scenario sc;
  sc.cfg = cfg;
  const bool explicit_geometry = cfg.observer.has_value() || !cfg.targets_km.empty();

  for (int attempt = 0; attempt < 10000; ++attempt) {
    sc.observer0 = cfg.observer ? cfg.observer->wrapped() : draw_observer(cfg, rng);
    sc.period = sc.observer0.period(cfg.gravity.mu);
    const double span = cfg.duration_orbits * sc.period;
    sc.n_scans = static_cast<int>(std::floor(span / cfg.interval + 1e-9)) + 1;

    std::vector<RoeState> km;
    if (!cfg.targets_km.empty()) {
      km = cfg.targets_km;
      sc.boresight_sign = cfg.boresight_sign != 0 ? (cfg.boresight_sign > 0 ? 1 : -1)
                                                  : (km.front().dl >= 0.0 ? 1 : -1);
    } else {
      sc.boresight_sign =
          cfg.boresight_sign != 0 ? (cfg.boresight_sign > 0 ? 1 : -1) : (rng.uniform() < 0.5 ? -1 : 1);
      for (int j = 0; j < cfg.n_targets; ++j) km.push_back(draw_target_km(cfg, sc.boresight_sign, rng));
    }
    sc.target_roe.clear();
    for (const RoeState& r : km) {
      const Vec6 v = r.vec() / sc.observer0.a;
      if (v.cwiseAbs().maxCoeff() >= 0.1) throw ConfigError("relative elements must be small");
      sc.target_roe.push_back(RoeState::from_vec(v));
    }

    sc.maneuvers = cfg.maneuvers ? *cfg.maneuvers : draw_maneuvers(cfg, span, rng);
    std::sort(sc.maneuvers.begin(), sc.maneuvers.end(),
              [](const ManeuverSpec& a, const ManeuverSpec& b) { return a.epoch < b.epoch; });

    sc.initial.clear();
    try {
      sc.initial.push_back(state_from_mean(sc.observer0, cfg));
      for (const RoeState& r : sc.target_roe)
        sc.initial.push_back(state_from_mean(oe_from_roe(sc.observer0, r), cfg));
    } catch (const SingularRepresentation& e) {
      throw ConfigError(e.what());
    }
    sc.gap_phase = 0.0;
    if (explicit_geometry || targets_stay_visible(sc)) break;
    if (attempt == 9999) throw ConfigError("no scenario keeps every target in view");
  }

  sc.gap_phase = rng.uniform();
  sc.executed_dv.clear();
  for (const ManeuverSpec& m : sc.maneuvers) sc.executed_dv.push_back(execute(m.dv, cfg, rng));
  sc.observer_estimate0 = sc.initial.front();
  for (int a = 0; a < 3; ++a) {
    sc.observer_estimate0.r[a] += rng.normal(0.0, cfg.sigma_pos);
    sc.observer_estimate0.v[a] += rng.normal(0.0, cfg.sigma_vel);
  }
  return sc;
}

TruthPropagator::TruthPropagator(const Scenario& sc, bool with_maneuvers)
    : sc_(&sc), with_maneuvers_(with_maneuvers), states_(sc.initial) {
  for (auto& s : states_) s.epoch = 0.0;
}

void TruthPropagator::advance(double t) {
  const ScenarioConfig& cfg = sc_->cfg;
  while (t_ < t) {
    double t_next = std::min(t, t_ + cfg.integration_step);
    if (with_maneuvers_ && next_man_ < sc_->maneuvers.size())
      t_next = std::min(t_next, std::max(t_, sc_->maneuvers[next_man_].epoch));
    if (t_next > t_) {
      for (auto& s : states_) s = rk4_step(s, t_next - t_, cfg.j2, cfg.gravity);
      t_ = t_next;
    }
    while (with_maneuvers_ && next_man_ < sc_->maneuvers.size() &&
           sc_->maneuvers[next_man_].epoch <= t_) {
      const ManeuverSpec& m = sc_->maneuvers[next_man_];
      InertialState& s = states_[static_cast<std::size_t>(m.spacecraft + 1)];
      s.v += rtn_axes(s) * (sc_->executed_dv[next_man_] * 1e-3);
      ++next_man_;
    }
  }
}

std::vector<InertialState> propagate_truth(const Scenario& sc, double t) {
  TruthPropagator p(sc);
  p.advance(t);
  return p.states();
}

TruthEpoch truth_epoch(const Scenario& sc, const std::vector<InertialState>& states, int k) {
  TruthEpoch te;
  te.k = k;
  te.t = sc.epoch(k);
  te.gap = sc.in_gap(te.t);
  const InertialState& o = states.front();
  te.observer = elements_from_cartesian(o, sc.cfg.gravity.mu);
  const RotationChain rc = rotation_chain(o, sc.boresight_sign);
  const Mat3 tp = rc.rotation(Frame::T, Frame::P);
  for (std::size_t j = 1; j < states.size(); ++j) {
    const Vec3 los = tp * (states[j].r - o.r);
    Bearing b{0.0, 0.0};
    bool vis = false;
    try {
      b = bearing_from_los(los);
      vis = std::abs(b.epsilon) <= sc.cfg.fov_half_x && std::abs(b.alpha) <= sc.cfg.fov_half_y;
    } catch (const NotVisible&) {
    } catch (const InvalidInput&) {
    }
    te.bearings.push_back(b);
    te.in_fov.push_back(vis);
  }
  return te;
}

Scan synthesize_scan(const TruthEpoch& truth, const ScenarioConfig& cfg, Rng& rng) {
  Scan scan;
  scan.k = truth.k;
  scan.epoch = truth.t;
  if (truth.gap) {
    scan.visible = false;
    return scan;
  }
  const Mat3 att = small_rotation(Vec3(cfg.sigma_offaxis * rng.normal(), cfg.sigma_offaxis * rng.normal(),
                                       cfg.sigma_roll * rng.normal()));
  for (std::size_t j = 0; j < truth.bearings.size(); ++j) {
    if (!truth.in_fov[j]) continue;
    Bearing b = bearing_from_los(att * los_from_bearing(truth.bearings[j]));
    b.alpha += cfg.sigma_vbs * rng.normal();
    b.epsilon += cfg.sigma_vbs * rng.normal();
    scan.bearings.push_back(b);
    scan.truth_labels.push_back(static_cast<int>(j));
  }
  const int n_clutter = rng.uniform_int(cfg.clutter_min, cfg.clutter_max);
  for (int c = 0; c < n_clutter; ++c) {
    Bearing b;
    b.epsilon = rng.uniform(-cfg.fov_half_x, cfg.fov_half_x);
    b.alpha = rng.uniform(-cfg.fov_half_y, cfg.fov_half_y);
    scan.bearings.push_back(b);
    scan.truth_labels.push_back(-1);
  }
  for (std::size_t i = scan.bearings.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
    std::swap(scan.bearings[i - 1], scan.bearings[j]);
    std::swap(scan.truth_labels[i - 1], scan.truth_labels[j]);
  }
  return scan;
}

SimOutput simulate(const Scenario& sc) {
  SimOutput out;
  out.truth.n_targets = static_cast<int>(sc.target_roe.size());
  out.truth.boresight_sign = sc.boresight_sign;
  out.truth.maneuvers = sc.maneuvers;
  Rng rng(substream_seed(sc.cfg.seed, 1));
  TruthPropagator prop(sc);
  for (int k = 0; k < sc.n_scans; ++k) {
    prop.advance(sc.epoch(k));
    out.truth.epochs.push_back(truth_epoch(sc, prop.states(), k));
    out.scans.push_back(synthesize_scan(out.truth.epochs.back(), sc.cfg, rng));
  }
  return out;
}

ObserverEstimate make_observer_estimate(const Scenario& sc) {
  ObserverEstimate est(sc.observer_estimate0, sc.cfg.j2, sc.cfg.gravity);
  for (const ManeuverSpec& m : sc.maneuvers)
    if (m.spacecraft < 0) est.add_burn(m.epoch, m.dv);
  return est;
}

std::vector<ManeuverImpulse> known_maneuvers(const Scenario& sc) {
  std::vector<ManeuverImpulse> out;
  for (const ManeuverSpec& m : sc.maneuvers)
    out.push_back({m.epoch, m.dv, m.spacecraft < 0 ? Actor::Observer : Actor::UnknownTarget});
  return out;
}

}  // namespace samus
