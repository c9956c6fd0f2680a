#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace samus {

// One way of extending one target tree. A global hypothesis picks exactly one
// option per group (tree); options in a hypothesis must not share resources
// (measurement ids), and at most one option per exclusive tag (>= 0) may be
// chosen.
struct HypothesisOption {
  int group = 0;
  double cost = 0.0;  // surrogate, lower is better
  std::vector<std::int64_t> resources;
  int exclusive_tag = -1;
};

struct HypothesisSet {
  // Option indices per hypothesis, ordered by group id.
  std::vector<std::vector<int>> hypotheses;
  std::vector<double> costs;  // ascending
  // Groups that interact through shared resources or tags.
  std::vector<std::vector<int>> clusters;
};

// Groups connected by shared resources or exclusive tags.
std::vector<std::vector<int>> cluster_groups(std::span<const HypothesisOption> options);

// Cheapest feasible hypotheses, at most `cap`. Each cluster is enumerated
// best-first and the per-cluster lists are combined as a cross product.
// Groups with no feasible option make the set empty.
HypothesisSet form_hypotheses(std::span<const HypothesisOption> options, std::size_t cap);

}  // namespace samus
