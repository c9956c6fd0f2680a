#include "samus/dbscan.hpp"

#include "samus/errors.hpp"

namespace samus {

DbscanResult dbscan(std::span<const Vec2> pts, double eps, int min_pts) {
  if (!(eps > 0.0) || min_pts < 1) throw InvalidInput("dbscan needs eps > 0 and min_pts >= 1");
  const std::size_t n = pts.size();
  DbscanResult r;
  r.labels.assign(n, -1);
  std::vector<std::vector<std::size_t>> nbr(n);
  const double e2 = eps * eps;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if ((pts[i] - pts[j]).squaredNorm() <= e2) nbr[i].push_back(j);
  std::vector<bool> visited(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (visited[i]) continue;
    visited[i] = true;
    if (static_cast<int>(nbr[i].size()) < min_pts) continue;
    const int c = r.n_clusters++;
    r.labels[i] = c;
    std::vector<std::size_t> queue(nbr[i]);
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const std::size_t p = queue[q];
      if (r.labels[p] < 0) r.labels[p] = c;
      if (visited[p]) continue;
      visited[p] = true;
      if (static_cast<int>(nbr[p].size()) >= min_pts)
        queue.insert(queue.end(), nbr[p].begin(), nbr[p].end());
    }
  }
  return r;
}

}  // namespace samus
