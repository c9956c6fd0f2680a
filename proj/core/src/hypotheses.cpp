#include "samus/hypotheses.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <queue>

namespace samus {

namespace {

struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(std::size_t n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) {
    while (p[static_cast<std::size_t>(x)] != x) x = p[static_cast<std::size_t>(x)] = p[static_cast<std::size_t>(p[static_cast<std::size_t>(x)])];
    return x;
  }
  void join(int a, int b) { p[static_cast<std::size_t>(find(a))] = find(b); }
};

struct Partial {
  std::vector<int> picks;
  double cost;
};

// k-best DFS with a lower bound from the cheapest option of each remaining group.
class ClusterSearch {
 public:
  ClusterSearch(std::span<const HypothesisOption> opts, std::vector<std::vector<int>> per_group,
                std::size_t cap)
      : opts_(opts), groups_(std::move(per_group)), cap_(cap) {
    tail_min_.assign(groups_.size() + 1, 0.0);
    for (std::size_t g = groups_.size(); g-- > 0;) {
      double m = std::numeric_limits<double>::infinity();
      for (int o : groups_[g]) m = std::min(m, opts_[static_cast<std::size_t>(o)].cost);
      tail_min_[g] = tail_min_[g + 1] + m;
    }
  }

  std::vector<Partial> run() {
    picks_.clear();
    dfs(0, 0.0);
    std::vector<Partial> out;
    while (!heap_.empty()) {
      out.push_back(heap_.top());
      heap_.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  struct Worse {
    bool operator()(const Partial& a, const Partial& b) const { return a.cost < b.cost; }
  };

  bool compatible(int o) const {
    const auto& cand = opts_[static_cast<std::size_t>(o)];
    for (int q : picks_) {
      const auto& other = opts_[static_cast<std::size_t>(q)];
      if (cand.exclusive_tag >= 0 && cand.exclusive_tag == other.exclusive_tag) return false;
      for (auto r : cand.resources)
        if (std::find(other.resources.begin(), other.resources.end(), r) != other.resources.end())
          return false;
    }
    return true;
  }

  void dfs(std::size_t g, double cost) {
    if (heap_.size() >= cap_ && cost + tail_min_[g] >= heap_.top().cost) return;
    if (g == groups_.size()) {
      heap_.push({picks_, cost});
      if (heap_.size() > cap_) heap_.pop();
      return;
    }
    for (int o : groups_[g]) {
      if (!compatible(o)) continue;
      picks_.push_back(o);
      dfs(g + 1, cost + opts_[static_cast<std::size_t>(o)].cost);
      picks_.pop_back();
    }
  }

  std::span<const HypothesisOption> opts_;
  std::vector<std::vector<int>> groups_;
  std::size_t cap_;
  std::vector<double> tail_min_;
  std::vector<int> picks_;
  std::priority_queue<Partial, std::vector<Partial>, Worse> heap_;
};

}  // namespace

std::vector<std::vector<int>> cluster_groups(std::span<const HypothesisOption> options) {
  std::map<int, int> gidx;
  for (const auto& o : options) gidx.emplace(o.group, 0);
  int n = 0;
  for (auto& [g, i] : gidx) i = n++;
  UnionFind uf(static_cast<std::size_t>(n));
  std::map<std::int64_t, int> owner;
  std::map<int, int> tag_owner;
  for (const auto& o : options) {
    const int gi = gidx[o.group];
    for (auto r : o.resources) {
      auto [it, fresh] = owner.emplace(r, gi);
      if (!fresh) uf.join(it->second, gi);
    }
    if (o.exclusive_tag >= 0) {
      auto [it, fresh] = tag_owner.emplace(o.exclusive_tag, gi);
      if (!fresh) uf.join(it->second, gi);
    }
  }
  std::map<int, std::vector<int>> by_root;
  for (auto& [g, i] : gidx) by_root[uf.find(i)].push_back(g);
  std::vector<std::vector<int>> out;
  for (auto& [r, gs] : by_root) out.push_back(std::move(gs));
  return out;
}

HypothesisSet form_hypotheses(std::span<const HypothesisOption> options, std::size_t cap) {
  HypothesisSet set;
  if (options.empty() || cap == 0) return set;
  set.clusters = cluster_groups(options);

  std::map<int, std::vector<int>> by_group;
  for (std::size_t i = 0; i < options.size(); ++i)
    by_group[options[i].group].push_back(static_cast<int>(i));
  for (auto& [g, v] : by_group)
    std::stable_sort(v.begin(), v.end(), [&](int a, int b) {
      return options[static_cast<std::size_t>(a)].cost < options[static_cast<std::size_t>(b)].cost;
    });

  std::vector<Partial> combined{{{}, 0.0}};
  for (const auto& cl : set.clusters) {
    std::vector<std::vector<int>> groups;
    for (int g : cl) groups.push_back(by_group[g]);
    std::vector<Partial> local = ClusterSearch(options, std::move(groups), cap).run();
    if (local.empty()) return {};
    std::vector<Partial> next;
    next.reserve(combined.size() * local.size());
    for (const auto& a : combined)
      for (const auto& b : local) {
        Partial p{a.picks, a.cost + b.cost};
        p.picks.insert(p.picks.end(), b.picks.begin(), b.picks.end());
        next.push_back(std::move(p));
      }
    std::stable_sort(next.begin(), next.end(),
                     [](const Partial& a, const Partial& b) { return a.cost < b.cost; });
    if (next.size() > cap) next.resize(cap);
    combined = std::move(next);
  }
  for (auto& p : combined) {
    std::sort(p.picks.begin(), p.picks.end(), [&](int a, int b) {
      return options[static_cast<std::size_t>(a)].group < options[static_cast<std::size_t>(b)].group;
    });
    set.hypotheses.push_back(std::move(p.picks));
    set.costs.push_back(p.cost);
  }
  return set;
}

}  // namespace samus
