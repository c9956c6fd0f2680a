#pragma once

#include <span>
#include <vector>

#include "samus/astro.hpp"

namespace samus {

struct DbscanResult {
  std::vector<int> labels;  // cluster id per point, -1 for noise
  int n_clusters = 0;
};

// Density clustering of plane points. A point is a core point when at least
// min_pts points (itself included) lie within eps.
DbscanResult dbscan(std::span<const Vec2> points, double eps, int min_pts);

}  // namespace samus
