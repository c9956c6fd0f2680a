#pragma once

#include <vector>

#include "samus/astro.hpp"

namespace samus {

// Observer absolute orbit at one epoch, as seen by the tracker.
struct ObserverEpoch {
  double t = 0.0;
  KeplerianElements el;
  double f = 0.0;          // true anomaly
  double r_over_a = 1.0;
  double flight_path_angle = 0.0;
  InertialState state;
};

// RTN unit vectors (columns R, T, N) in PCI.
Mat3 rtn_axes(const InertialState& s);

// Coarse observer estimate: Kepler plus first-order J2 secular drift, with the
// nominal observer burns applied at their epochs.
class ObserverEstimate {
 public:
  ObserverEstimate() = default;
  ObserverEstimate(const InertialState& initial, bool j2, const GravityModel& g = {});
  ObserverEstimate(const KeplerianElements& initial, double epoch, bool j2,
                   const GravityModel& g = {});

  // Burns must be added in ascending epoch order. dv is RTN in m/s.
  void add_burn(double epoch, const Vec3& dv_rtn);

  ObserverEpoch at(double t) const;
  const GravityModel& gravity() const { return g_; }

 private:
  struct Segment {
    double t0;
    KeplerianElements el;
  };
  std::vector<Segment> segs_;
  bool j2_ = true;
  GravityModel g_;
};

}  // namespace samus
