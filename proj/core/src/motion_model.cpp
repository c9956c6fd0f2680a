#include "samus/motion_model.hpp"

#include <cmath>

#include "samus/errors.hpp"

namespace samus {

ModelEpoch ModelEpoch::at_anomaly(double f_new) const {
  ModelEpoch out = *this;
  out.f = f_new;
  out.r_over_a = (1.0 - e * e) / (1.0 + e * std::cos(f_new));
  return out;
}

ParametricModel ParametricModel::from_y(const std::array<double, 6>& y) {
  ParametricModel m;
  m.y = y;
  m.x[0] = y[2];
  m.x[1] = std::hypot(y[0], y[1]);
  m.x[2] = m.x[1] > 0.0 ? wrap_2pi(std::atan2(-y[1], -y[0])) : 0.0;
  m.x[3] = y[5];
  m.x[4] = std::hypot(y[3], y[4]);
  m.x[5] = m.x[4] > 0.0 ? wrap_2pi(std::atan2(-y[3], y[4])) : 0.0;
  return m;
}

ParametricModel ParametricModel::from_x(const std::array<double, 6>& x) {
  std::array<double, 6> y{};
  y[0] = -x[1] * std::cos(x[2]);
  y[1] = -x[1] * std::sin(x[2]);
  y[2] = x[0];
  y[3] = -x[4] * std::sin(x[5]);
  y[4] = x[4] * std::cos(x[5]);
  y[5] = x[3];
  ParametricModel m = from_y(y);
  return m;
}

namespace {

void design_rows(const ModelEpoch& ep, double* a1, double* a2) {
  const double k = ep.r_over_a;
  const double he = 0.5 * ep.e;
  a1[0] = k * (std::cos(ep.f) + he * std::cos(2.0 * ep.f));
  a1[1] = k * (std::sin(ep.f) + he * std::sin(2.0 * ep.f));
  a1[2] = k;
  const double u = ep.f + ep.argp;
  a2[0] = k * std::cos(u);
  a2[1] = k * std::sin(u);
  a2[2] = k;
}

constexpr double kMaxCondition = 1e10;

// Least squares on the data rows, optionally stacked with sqrt(weight) * I
// rows pulling y toward the prior's y.
ParametricModel fit_rows(std::span<const Vec2> pts, std::span<const ModelEpoch> eps,
                         const ParametricModel* prior, double weight) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  if (pts.size() != eps.size()) throw InvalidInput("points and epochs differ in length");
  const Eigen::Index rows = n + (prior ? 3 : 0);
  Eigen::MatrixXd A1 = Eigen::MatrixXd::Zero(rows, 3), A2 = Eigen::MatrixXd::Zero(rows, 3);
  Eigen::VectorXd be(rows), ba(rows);
  for (Eigen::Index r = 0; r < n; ++r) {
    double a1[3], a2[3];
    design_rows(eps[static_cast<std::size_t>(r)], a1, a2);
    for (int c = 0; c < 3; ++c) {
      A1(r, c) = a1[c];
      A2(r, c) = a2[c];
    }
    be[r] = pts[static_cast<std::size_t>(r)].x();
    ba[r] = pts[static_cast<std::size_t>(r)].y();
  }
  if (prior) {
    const double w = std::sqrt(weight);
    for (int c = 0; c < 3; ++c) {
      A1(n + c, c) = w;
      A2(n + c, c) = w;
      be[n + c] = w * prior->y[static_cast<std::size_t>(c)];
      ba[n + c] = w * prior->y[static_cast<std::size_t>(3 + c)];
    }
  }
  std::array<double, 6> y{};
  double res2 = 0.0, rnorm = 0.0;
  const Eigen::MatrixXd* As[2] = {&A1, &A2};
  const Eigen::VectorXd* bs[2] = {&be, &ba};
  for (int s = 0; s < 2; ++s) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(*As[s]);
    const auto& R = qr.matrixQR();
    const double r0 = std::abs(R(0, 0));
    const double r2 = std::abs(R(2, 2));
    if (!(r0 > 0.0) || !(r2 * kMaxCondition > r0))
      throw IllConditionedFit("bearing-space design matrix is rank deficient");
    const Eigen::Vector3d sol = qr.solve(*bs[s]);
    for (int c = 0; c < 3; ++c) y[static_cast<std::size_t>(3 * s + c)] = sol[c];
    const Eigen::VectorXd r = (*As[s] * sol - *bs[s]).head(n);
    res2 += r.squaredNorm();
    rnorm += r.norm();
  }
  ParametricModel m = ParametricModel::from_y(y);
  m.n_points = static_cast<int>(n);
  m.fit_residual = std::sqrt(res2 / (2.0 * static_cast<double>(n)));
  m.residual_norm = rnorm;
  return m;
}

}  // namespace

ParametricModel fit_parametric_model(std::span<const Vec2> pts, std::span<const ModelEpoch> eps) {
  if (pts.size() < 3) throw InvalidInput("at least three points are needed for a fit");
  return fit_rows(pts, eps, nullptr, 0.0);
}

ParametricModel fit_parametric_model_toward(std::span<const Vec2> pts, std::span<const ModelEpoch> eps,
                                            const ParametricModel& prior, double weight) {
  if (pts.empty()) throw InvalidInput("at least one point is needed for a fit");
  if (!(weight > 0.0) || !std::isfinite(weight)) throw InvalidInput("prior weight must be positive");
  return fit_rows(pts, eps, &prior, weight);
}

ParametricModel fit_parametric_model(std::span<const Bearing> bearings,
                                     std::span<const ModelEpoch> eps) {
  std::vector<Vec2> pts;
  pts.reserve(bearings.size());
  for (const Bearing& b : bearings) pts.push_back(to_plane(b));
  return fit_parametric_model(std::span<const Vec2>(pts), eps);
}

Vec2 predict_plane(const ParametricModel& m, const ModelEpoch& ep) {
  double a1[3], a2[3];
  design_rows(ep, a1, a2);
  return {a1[0] * m.y[0] + a1[1] * m.y[1] + a1[2] * m.y[2],
          a2[0] * m.y[3] + a2[1] * m.y[4] + a2[2] * m.y[5]};
}

Bearing predict_bearing(const ParametricModel& m, const ModelEpoch& ep) {
  return from_plane(predict_plane(m, ep));
}

Vec2 fallback_predict(std::span<const Vec2> h) {
  if (h.empty()) throw InvalidInput("fallback prediction needs at least one point");
  if (h.size() == 1) return h.back();
  const Vec2& a = h[h.size() - 2];
  const Vec2& b = h.back();
  return b + (b - a);
}

Bearing fallback_predict(std::span<const Bearing> h) {
  if (h.empty()) throw InvalidInput("fallback prediction needs at least one point");
  std::vector<Vec2> pts;
  const std::size_t start = h.size() >= 2 ? h.size() - 2 : 0;
  for (std::size_t i = start; i < h.size(); ++i) pts.push_back(to_plane(h[i]));
  return from_plane(fallback_predict(std::span<const Vec2>(pts)));
}

double invert_model_for_f(const ParametricModel& m, const Bearing& meas, const ModelEpoch& seed) {
  const Vec2 target = to_plane(meas);
  auto cost = [&](double f) { return (predict_plane(m, seed.at_anomaly(f)) - target).squaredNorm(); };
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = seed.f - kPi / 4.0, hi = seed.f + kPi / 4.0;
  double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
  double fc = cost(c), fd = cost(d);
  while (hi - lo > 1e-8) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - gr * (hi - lo);
      fc = cost(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + gr * (hi - lo);
      fd = cost(d);
    }
  }
  const double best = 0.5 * (lo + hi);
  // Flat or seed-optimal objective: keep the seed.
  if (cost(seed.f) <= cost(best)) return seed.f;
  return best;
}

bool step_angle(const Vec2& a, const Vec2& b, double& psi) {
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) return false;
  // Interior angle at the shared vertex: between -a and b.
  const double cross = a.x() * b.y() - a.y() * b.x();
  const double dot = -(a.x() * b.x() + a.y() * b.y());
  psi = std::atan2(std::abs(cross), dot);
  return true;
}

TrackGeometry track_geometry(std::span<const Vec2> pts) {
  TrackGeometry g;
  if (pts.size() < 2) return g;
  double zeta_prev = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const Vec2 v = pts[i] - pts[i - 1];
    const double d = v.norm();
    const double z = d > 0.0 ? std::atan2(v.y(), v.x()) : zeta_prev;
    g.v.push_back(v);
    g.d.push_back(d);
    g.zeta.push_back(z);
    zeta_prev = z;
  }
  double dsum = 0.0;
  for (double d : g.d) dsum += d;
  g.d_mean = dsum / static_cast<double>(g.d.size());
  double psum = 0.0;
  int pn = 0;
  for (std::size_t i = 0; i + 1 < g.v.size(); ++i) {
    double psi = 0.0;
    const bool ok = step_angle(g.v[i], g.v[i + 1], psi);
    g.psi.push_back(ok ? psi : 0.0);
    g.psi_defined.push_back(ok);
    if (ok) {
      psum += psi;
      ++pn;
    }
  }
  g.psi_mean = pn > 0 ? psum / pn : kPi;
  return g;
}

TrackGeometry track_geometry(std::span<const Bearing> bearings) {
  std::vector<Vec2> pts;
  for (const Bearing& b : bearings) pts.push_back(to_plane(b));
  return track_geometry(std::span<const Vec2>(pts));
}

double model_aspect(const ParametricModel& m, double argp, double cap) {
  // Track = C (cos f, sin f)^T to first order in e.
  Eigen::Matrix2d C;
  C << m.y[0], m.y[1], m.y[3] * std::cos(argp) + m.y[4] * std::sin(argp),
      m.y[4] * std::cos(argp) - m.y[3] * std::sin(argp);
  const Eigen::Vector2d sv = Eigen::JacobiSVD<Eigen::Matrix2d>(C).singularValues();
  if (!(sv[0] > 0.0)) return 1.0;
  if (sv[1] * cap <= sv[0]) return cap;
  return sv[0] / sv[1];
}

std::vector<TrackPoint> difference_tracks(std::span<const TrackPoint> a,
                                          std::span<const TrackPoint> b) {
  if (a.size() != b.size()) throw AlignmentError("tracks have different lengths");
  std::vector<TrackPoint> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i].t - b[i].t) > 1e-6) throw AlignmentError("track epochs do not match");
    out.push_back({a[i].t, a[i].p - b[i].p});
  }
  return out;
}

}  // namespace samus
