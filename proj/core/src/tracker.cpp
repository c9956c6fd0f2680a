#include "samus/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>

#include "samus/dbscan.hpp"
#include "samus/errors.hpp"
#include "samus/hypotheses.hpp"
#include "samus/maneuver.hpp"
#include "samus/motion_model.hpp"

namespace samus {

void TrackerConfig::validate() const {
  gate.validate();
  ambiguity.validate();
  if (boresight_sign != 1 && boresight_sign != -1) throw ConfigError("boresight sign must be +1 or -1");
  if (fit_window < 3) throw ConfigError("fit window must hold at least three points");
  if (score_window < 1 || root_depth < 1) throw ConfigError("score window and root depth must be positive");
  if (max_targets < 1 || max_tracks_per_target < 1 || max_hypotheses < 1 || candidate_hypotheses < 1)
    throw ConfigError("tracker capacities must be positive");
  if (dbscan_min_pts < 1 || init_scans < 3) throw ConfigError("initiation needs min_pts >= 1 and >= 3 scans");
  if (!(miss_period_frac > 0.0) || !(unobserved_frac > 0.0) || !(ambiguous_frac > 0.0))
    throw ConfigError("deletion fractions must be positive");
  if (!(maneuver_dmax_factor >= 1.0)) throw ConfigError("maneuver_dmax_factor must be at least 1");
  if (maneuver_scans < 3) throw ConfigError("maneuver association needs at least three scans");
  if (!(maneuver_post_prior >= 0.0) || !std::isfinite(maneuver_post_prior))
    throw ConfigError("maneuver_post_prior must be a non-negative number");
}

namespace {

enum class Cause : std::uint8_t { Initial, Maneuver, Gap };

struct Node {
  std::shared_ptr<Node> parent;
  std::uint64_t id = 0;
  int scan = 0;   // internal scan index
  int meas = -1;  // -1 for a placeholder
  Vec2 p = Vec2::Zero();
  bool seg_start = false;
  Cause cause = Cause::Initial;
  int burn = -1;   // maneuver that opened this segment, when cause is Maneuver
  int claim = -1;  // unknown-target maneuver this branch attributes to its tree
  bool gap_pending = false;
  int n_visible = 0;
  int n_missed = 0;
  int n_ambiguous = 0;
  int miss_run = 0;
  double cost = 0.0;
  // Best-track bookkeeping for confirmation.
  int streak = 0;
  int last_best = -1;
  bool emitted = false;
};
using NodePtr = std::shared_ptr<Node>;

struct Track {
  int tree = 0;
  NodePtr leaf;
};

struct Hyp {
  std::vector<int> tracks;  // one per tree, ordered by tree id
  double total = 0.0;
};

struct ScanRec {
  int k = 0;
  double t = 0.0;
  ObserverEpoch obs;
  ModelEpoch me;
  std::vector<Vec2> pts;
  std::vector<Bearing> raw;
  bool visible = true;
};

struct ManeuverState {
  ManeuverImpulse imp;
  int start = -1;
  bool resolved = false;
};

struct Prediction {
  Vec2 point = Vec2::Zero();
  double d_mean = -1.0;
  double aspect = 1.0;
  bool post_gap = false;
  bool post_maneuver = false;    // current segment opened at a known burn
  std::vector<Vec2> seg_points;  // oldest first
  std::optional<ParametricModel> model;
};

struct PairKey {
  std::uint64_t a, b;
  bool operator==(const PairKey&) const = default;
};
struct PairKeyHash {
  std::size_t operator()(const PairKey& k) const {
    return std::hash<std::uint64_t>()(k.a * 0x9e3779b97f4a7c15ULL ^ k.b);
  }
};
struct CachedScore {
  ScoreVector sv;
  int scan = 0;
};

std::int64_t meas_id(int scan, int meas) { return (static_cast<std::int64_t>(scan) << 20) | meas; }

std::optional<ParametricModel> try_fit(const std::vector<Vec2>& pts, const std::vector<ModelEpoch>& eps) {
  if (pts.size() < 3) return std::nullopt;
  try {
    return fit_parametric_model(std::span<const Vec2>(pts), std::span<const ModelEpoch>(eps));
  } catch (const IllConditionedFit&) {
    return std::nullopt;
  } catch (const InvalidInput&) {
    return std::nullopt;
  }
}

}  // namespace

struct Tracker::Impl {
  TrackerConfig cfg;
  ObserverEstimate observer;
  std::vector<ManeuverState> maneuvers;

  std::vector<ScanRec> scans;
  std::vector<Track> tracks;
  std::vector<Hyp> kept;
  std::set<int> trees;
  std::map<int, int> tree_created;
  int next_tree = 0;
  std::uint64_t next_node = 1;
  std::unordered_map<PairKey, CachedScore, PairKeyHash> cache;
  std::map<int, ExternalPrediction> external;
  std::vector<ManeuverOutcome> outcomes_now;

  Impl(const TrackerConfig& c, ObserverEstimate o, std::vector<ManeuverImpulse> m)
      : cfg(c), observer(std::move(o)) {
    cfg.validate();
    std::sort(m.begin(), m.end(), [](const auto& a, const auto& b) { return a.epoch < b.epoch; });
    for (const auto& imp : m) maneuvers.push_back({imp, -1, false});
  }

  // ---- frames ----

  Mat3 model_rotation(const ObserverEpoch& obs) const {
    const RotationChain rc = rotation_chain(obs.state, cfg.boresight_sign);
    const Mat3 wt = rc.rotation(Frame::W, Frame::T);
    const Mat3 wr = rc.rotation(Frame::W, Frame::R);
    return wt.transpose() * wr.transpose() * wt;
  }

  Vec2 to_model_plane(const Bearing& b, const Mat3& m) const {
    return to_plane(bearing_from_los(m * los_from_bearing(b)));
  }

  const ScanRec& rec(int i) const { return scans[static_cast<std::size_t>(i)]; }
  double dt_minutes(int from, int to) const { return (rec(to).t - rec(from).t) / 60.0; }

  NodePtr make_node(const NodePtr& parent, int scan) {
    auto n = std::make_shared<Node>();
    n->parent = parent;
    n->id = next_node++;
    n->scan = scan;
    if (parent) {
      n->claim = parent->claim;
      n->gap_pending = parent->gap_pending;
      n->n_visible = parent->n_visible;
      n->n_missed = parent->n_missed;
      n->n_ambiguous = parent->n_ambiguous;
      n->miss_run = parent->miss_run;
    }
    return n;
  }

  // ---- prediction ----

  Prediction predict(const Node* leaf, int i) const {
    Prediction pr;
    const int W = cfg.fit_window;
    std::vector<const Node*> seg;
    bool reached_start = false;
    for (const Node* n = leaf; n; n = n->parent.get()) {
      seg.push_back(n);
      if (n->seg_start) {
        reached_start = true;
        break;
      }
      if (static_cast<int>(seg.size()) >= 3 * W) break;
    }
    std::vector<const Node*> prev;
    if (reached_start && seg.back()->parent) {
      for (const Node* n = seg.back()->parent.get(); n; n = n->parent.get()) {
        prev.push_back(n);
        if (n->seg_start || static_cast<int>(prev.size()) >= 2 * W) break;
      }
    }
    int seg_meas = 0;
    for (const Node* n : seg) seg_meas += n->meas >= 0;
    pr.post_maneuver = reached_start && seg.back()->cause == Cause::Maneuver;
    pr.post_gap = leaf->gap_pending ||
                  (reached_start && seg.back()->cause == Cause::Gap && seg_meas < 3);

    std::vector<const Node*> fit_nodes;
    for (const Node* n : seg)
      if (n->meas >= 0 && static_cast<int>(fit_nodes.size()) < W) fit_nodes.push_back(n);
    if (pr.post_gap)
      for (const Node* n : prev)
        if (n->meas >= 0 && static_cast<int>(fit_nodes.size()) < W) fit_nodes.push_back(n);
    std::vector<Vec2> fp;
    std::vector<ModelEpoch> fe;
    for (auto it = fit_nodes.rbegin(); it != fit_nodes.rend(); ++it) {
      fp.push_back((*it)->p);
      fe.push_back(rec((*it)->scan).me);
    }
    // The first step of a maneuver segment already moves at the post-burn
    // rate; borrow it while the segment has a single point.
    const bool boundary_step = seg.size() == 1 && reached_start && seg[0]->cause == Cause::Maneuver &&
                               seg[0]->burn >= 0 && seg[0]->parent && seg[0]->parent->meas >= 0;
    double boundary_d = -1.0;
    pr.model = try_fit(fp, fe);
    // A young maneuver segment pins its poorly observed coefficient
    // directions to the pre-maneuver model.
    if (reached_start && seg.back()->cause == Cause::Maneuver && fp.size() >= 2 &&
        static_cast<int>(fp.size()) < W && cfg.maneuver_post_prior > 0.0) {
      std::vector<Vec2> qp;
      std::vector<ModelEpoch> qe;
      for (const Node* n : prev)
        if (n->meas >= 0 && static_cast<int>(qp.size()) < W) {
          qp.push_back(n->p);
          qe.push_back(rec(n->scan).me);
        }
      std::reverse(qp.begin(), qp.end());
      std::reverse(qe.begin(), qe.end());
      if (const auto prior = try_fit(qp, qe))
        pr.model = fit_parametric_model_toward(fp, fe, *prior, cfg.maneuver_post_prior);
    }
    if (pr.model) {
      pr.point = predict_plane(*pr.model, rec(i).me);
      pr.aspect = model_aspect(*pr.model, rec(i).me.argp);
    } else {
      std::vector<Vec2> h;
      if (seg.size() >= 2) h.push_back(seg[1]->p);
      h.push_back(seg[0]->p);
      pr.point = fallback_predict(std::span<const Vec2>(h));
      if (boundary_step) {
        const Vec2 v = post_burn_rate(seg[0]);
        pr.point = seg[0]->p + v * (rec(i).t - rec(seg[0]->scan).t);
        boundary_d = v.norm() * (rec(i).t - rec(seg[0]->scan).t);
      }
    }

    auto mean_step = [&](const std::vector<const Node*>& v) {
      double s = 0.0;
      int n = 0;
      for (std::size_t j = 0; j + 1 < v.size() && n < W; ++j, ++n) s += (v[j]->p - v[j + 1]->p).norm();
      return n > 0 ? s / n : -1.0;
    };
    pr.d_mean = mean_step(seg);
    if (pr.d_mean < 0.0) pr.d_mean = boundary_d;
    if (pr.d_mean < 0.0) pr.d_mean = mean_step(prev);

    const std::size_t keep = std::min<std::size_t>(seg.size(), static_cast<std::size_t>(W) + 1);
    for (std::size_t j = keep; j-- > 0;) pr.seg_points.push_back(seg[j]->p);
    return pr;
  }

  // Plane rate after the burn that opened n's segment. The step into n mixes
  // the old rate up to the burn with the new one after it; the old rate comes
  // from the step before.
  Vec2 post_burn_rate(const Node* n) const {
    const Node* a = n->parent.get();
    const double t_a = rec(a->scan).t, t_n = rec(n->scan).t;
    const double t_b = std::clamp(maneuvers[static_cast<std::size_t>(n->burn)].imp.epoch, t_a, t_n);
    const Vec2 step = n->p - a->p;
    Vec2 v_old = step / (t_n - t_a);
    if (const Node* g = a->parent.get(); g && g->meas >= 0 && g->scan < a->scan)
      v_old = (a->p - g->p) / (t_a - rec(g->scan).t);
    // Short post-burn spans amplify noise; a quarter interval is the floor.
    const double post = std::max(t_n - t_b, 0.25 * (t_n - t_a));
    return (step - v_old * (t_b - t_a)) / post;
  }

  // ---- pair scoring ----

  const ScoreVector& pair_score(const Node* a, const Node* b) {
    const PairKey key{a->id, b ? b->id : 0};
    if (auto it = cache.find(key); it != cache.end()) return it->second.sv;
    CachedScore cs;
    cs.scan = a->scan;
    if (a->meas >= 0 && (!b || b->meas >= 0)) cs.sv = compute_pair(a, b);
    return cache.emplace(key, std::move(cs)).first->second.sv;
  }

  ScoreVector compute_pair(const Node* a, const Node* b) const {
    const int W = cfg.fit_window;
    std::vector<const Node*> A, B;
    const Node* x = a;
    const Node* y = b;
    while (x && (!b || y) && static_cast<int>(A.size()) < W + 2) {
      if (b && x->scan != y->scan) break;
      A.push_back(x);
      B.push_back(y);
      if (x->seg_start || (y && y->seg_start)) break;
      x = x->parent.get();
      if (y) y = y->parent.get();
    }
    std::reverse(A.begin(), A.end());
    std::reverse(B.begin(), B.end());
    const std::size_t n = A.size();
    std::vector<Vec2> pts(n);
    std::vector<ModelEpoch> eps(n);
    std::vector<bool> ok(n);
    for (std::size_t j = 0; j < n; ++j) {
      pts[j] = B[j] ? Vec2(A[j]->p - B[j]->p) : A[j]->p;
      eps[j] = rec(A[j]->scan).me;
      ok[j] = A[j]->meas >= 0 && (!B[j] || B[j]->meas >= 0);
    }
    auto fit_upto = [&](std::size_t end) {
      std::vector<Vec2> fp;
      std::vector<ModelEpoch> fe;
      for (std::size_t j = end; j-- > 0 && static_cast<int>(fp.size()) < W;)
        if (ok[j]) {
          fp.push_back(pts[j]);
          fe.push_back(eps[j]);
        }
      std::reverse(fp.begin(), fp.end());
      std::reverse(fe.begin(), fe.end());
      auto m = try_fit(fp, fe);
      if (m && b) m->frame = FrameTag::Differential;
      return m;
    };
    const auto incl = fit_upto(n);
    const auto excl = n >= 2 ? fit_upto(n - 1) : std::nullopt;

    EpochScoreInput in;
    in.points = pts;
    in.epochs = eps;
    in.model_incl = incl ? &*incl : nullptr;
    in.model_excl = excl ? &*excl : nullptr;
    if (excl) {
      in.prediction = predict_plane(*excl, eps[n - 1]);
    } else if (n >= 2) {
      in.prediction = fallback_predict(std::span<const Vec2>(pts.data() + (n >= 3 ? n - 3 : 0),
                                                             n >= 3 ? 2 : 1));
    } else {
      in.prediction = pts[0];
    }
    if (n >= 3) {
      const TrackGeometry g = track_geometry(std::span<const Vec2>(pts.data(), n - 1));
      in.d_mean = g.d_mean;
      if (std::find(g.psi_defined.begin(), g.psi_defined.end(), true) != g.psi_defined.end())
        in.psi_mean = g.psi_mean;
    }
    return score_track_epoch(in);
  }

  // ---- helpers over tracks and hypotheses ----

  std::vector<std::int64_t> path_resources(const Node* leaf, int min_scan) const {
    std::vector<std::int64_t> r;
    for (const Node* n = leaf; n && n->scan >= min_scan; n = n->parent.get())
      if (n->meas >= 0) r.push_back(meas_id(n->scan, n->meas));
    return r;
  }

  double window_cost(const Node* leaf, int depth) const {
    double c = 0.0;
    int d = 0;
    for (const Node* n = leaf; n && d < depth; n = n->parent.get(), ++d) c += n->cost;
    return c;
  }

  static const Node* node_at(const Node* leaf, int scan) {
    for (const Node* n = leaf; n; n = n->parent.get()) {
      if (n->scan == scan) return n;
      if (n->scan < scan) return nullptr;
    }
    return nullptr;
  }

  int tree_of_hyp(const Hyp& h, int tree) const {
    for (int t : h.tracks)
      if (tracks[static_cast<std::size_t>(t)].tree == tree) return t;
    return -1;
  }

  bool compatible(const Node* a, const Node* b, int min_scan) const {
    const auto ra = path_resources(a, min_scan);
    const auto rb = path_resources(b, min_scan);
    for (auto x : ra)
      if (std::find(rb.begin(), rb.end(), x) != rb.end()) return false;
    return true;
  }

  int window_floor(int i) const { return i - cfg.root_depth - 1; }

  // Remove deleted tracks (marked by null leaves) and repair the hypothesis set.
  void compact_tracks() {
    std::vector<int> remap(tracks.size(), -1);
    std::vector<Track> alive;
    for (std::size_t t = 0; t < tracks.size(); ++t)
      if (tracks[t].leaf) {
        remap[t] = static_cast<int>(alive.size());
        alive.push_back(tracks[t]);
      }
    std::map<int, std::vector<int>> by_tree;
    for (std::size_t t = 0; t < alive.size(); ++t) by_tree[alive[t].tree].push_back(static_cast<int>(t));
    for (auto it = trees.begin(); it != trees.end();)
      it = by_tree.count(*it) ? std::next(it) : trees.erase(it);

    const int floor = scans.empty() ? 0 : window_floor(static_cast<int>(scans.size()) - 1);
    std::vector<Hyp> repaired;
    std::set<std::vector<int>> seen;
    for (const Hyp& h : kept) {
      Hyp nh;
      nh.total = h.total;
      std::set<int> covered;
      bool ok = true;
      for (int t : h.tracks) {
        const int m = remap[static_cast<std::size_t>(t)];
        if (m >= 0) {
          nh.tracks.push_back(m);
          covered.insert(alive[static_cast<std::size_t>(m)].tree);
        }
      }
      // Trees whose branch in this hypothesis was removed take their first
      // compatible surviving branch.
      for (int tree : trees) {
        if (covered.count(tree)) continue;
        int pick = -1;
        for (int c : by_tree[tree]) {
          bool fits = true;
          for (int u : nh.tracks)
            if (!compatible(alive[static_cast<std::size_t>(c)].leaf.get(),
                            alive[static_cast<std::size_t>(u)].leaf.get(), floor)) {
              fits = false;
              break;
            }
          if (fits) {
            pick = c;
            break;
          }
        }
        if (pick < 0) {
          ok = false;
          break;
        }
        nh.tracks.push_back(pick);
      }
      if (!ok) continue;
      std::sort(nh.tracks.begin(), nh.tracks.end(), [&](int x, int y) {
        return alive[static_cast<std::size_t>(x)].tree < alive[static_cast<std::size_t>(y)].tree;
      });
      if (seen.insert(nh.tracks).second) repaired.push_back(std::move(nh));
    }
    tracks = std::move(alive);
    kept = std::move(repaired);
    if (kept.empty() && !tracks.empty()) reform_from_costs();
  }

  void reform_from_costs() {
    const int floor = scans.empty() ? 0 : window_floor(static_cast<int>(scans.size()) - 1);
    std::vector<HypothesisOption> opts;
    for (const Track& t : tracks)
      opts.push_back({t.tree, window_cost(t.leaf.get(), cfg.score_window),
                      path_resources(t.leaf.get(), floor), -1});
    const HypothesisSet hs = form_hypotheses(opts, static_cast<std::size_t>(cfg.max_hypotheses));
    kept.clear();
    for (std::size_t h = 0; h < hs.hypotheses.size(); ++h) kept.push_back({hs.hypotheses[h], 1e9 + hs.costs[h]});
    if (kept.empty()) {
      // No disjoint combination exists; keep only the cheapest branch per tree
      // and drop trees that conflict with an earlier pick.
      std::map<int, int> best;
      for (std::size_t t = 0; t < tracks.size(); ++t) {
        auto [it, fresh] = best.emplace(tracks[t].tree, static_cast<int>(t));
        if (!fresh && opts[t].cost < opts[static_cast<std::size_t>(it->second)].cost) it->second = static_cast<int>(t);
      }
      Hyp h;
      for (auto& [tree, t] : best) {
        bool fits = true;
        for (int u : h.tracks)
          if (!compatible(tracks[static_cast<std::size_t>(t)].leaf.get(), tracks[static_cast<std::size_t>(u)].leaf.get(), floor))
            fits = false;
        if (fits) h.tracks.push_back(t);
      }
      std::set<int> keep_t(h.tracks.begin(), h.tracks.end());
      for (std::size_t t = 0; t < tracks.size(); ++t)
        if (!keep_t.count(static_cast<int>(t)) && !best.count(tracks[t].tree)) tracks[t].leaf.reset();
      for (auto& [tree, t] : best)
        if (!keep_t.count(t))
          for (auto& tr : tracks)
            if (tr.tree == tree) tr.leaf.reset();
      h.total = 1e9;
      kept = {h};
      std::vector<Track> alive;
      std::vector<int> remap(tracks.size(), -1);
      for (std::size_t t = 0; t < tracks.size(); ++t)
        if (tracks[t].leaf) {
          remap[t] = static_cast<int>(alive.size());
          alive.push_back(tracks[t]);
        }
      for (int& t : kept[0].tracks) t = remap[static_cast<std::size_t>(t)];
      tracks = std::move(alive);
      trees.clear();
      for (const Track& t : tracks) trees.insert(t.tree);
    }
  }

  // ---- scan processing ----

  ScanReport process(const Scan& scan, std::span<const ExternalPrediction> ext) {
    if (!scans.empty() && !(scan.epoch > scans.back().t))
      throw SequencingError("scans must arrive in increasing epoch order");
    ScanRec r;
    r.k = scan.k;
    r.t = scan.epoch;
    r.obs = observer.at(scan.epoch);
    r.me = ModelEpoch::from(r.obs);
    r.visible = scan.visible;
    r.raw = scan.bearings;
    const Mat3 rot = model_rotation(r.obs);
    for (const Bearing& b : scan.bearings) r.pts.push_back(to_model_plane(b, rot));
    scans.push_back(std::move(r));
    const int i = static_cast<int>(scans.size()) - 1;

    external.clear();
    for (const auto& e : ext) external[e.tree] = e;
    outcomes_now.clear();

    // Maneuvers take effect at the first visible scan at or after their epoch.
    std::vector<int> starting;
    if (rec(i).visible)
      for (std::size_t m = 0; m < maneuvers.size(); ++m)
        if (maneuvers[m].start < 0 && maneuvers[m].imp.epoch <= rec(i).t && i > 0) {
          maneuvers[m].start = i;
          starting.push_back(static_cast<int>(m));
        }
    for (auto& m : maneuvers)
      if (m.start < 0 && m.imp.epoch <= rec(i).t && i == 0) m.resolved = true;

    std::vector<Emission> emissions;
    if (!rec(i).visible) {
      extend_through_gap(i);
      update_best(i, emissions, false);
      maintain_at(i);
    } else {
      if (!tracks.empty()) extend_visible(i, starting);
      for (auto& m : maneuvers)
        if (!m.resolved && m.start >= 0 && i - m.start + 1 >= cfg.maneuver_scans &&
            m.imp.actor == Actor::UnknownTarget)
          resolve_maneuver(static_cast<int>(&m - maneuvers.data()), i);
      for (auto& m : maneuvers)
        if (m.imp.actor == Actor::Observer && m.start >= 0) m.resolved = true;
      update_best(i, emissions, true);
      initiate(i);
      maintain_at(i);
    }
    evict_cache(i);

    ScanReport rep;
    rep.k = scan.k;
    rep.epoch = scan.epoch;
    rep.visible = scan.visible;
    if (!kept.empty())
      for (int t : kept[0].tracks) {
        const Track& tr = tracks[static_cast<std::size_t>(t)];
        rep.best.push_back({tr.tree, tr.leaf->scan == i ? tr.leaf->meas : -1});
      }
    rep.emissions = std::move(emissions);
    rep.maneuvers = outcomes_now;
    rep.n_trees = static_cast<int>(trees.size());
    rep.n_tracks = static_cast<int>(tracks.size());
    rep.n_hypotheses = static_cast<int>(kept.size());
    return rep;
  }

  void extend_through_gap(int i) {
    for (Track& t : tracks) {
      const Prediction pr = predict(t.leaf.get(), i);
      NodePtr n = make_node(t.leaf, i);
      n->p = pr.point;
      n->gap_pending = true;
      n->cost = 1.0;
      t.leaf = std::move(n);
    }
  }

  struct OptionInfo {
    int track = 0;
    int meas = -1;
    Vec2 p = Vec2::Zero();
    double cost = 1.0;
    bool seg_start = false;
    Cause cause = Cause::Initial;
    int burn = -1;
    int claim = -1;
  };

  void extend_visible(int i, const std::vector<int>& starting) {
    const ScanRec& r = rec(i);
    const double e_o = r.obs.el.e;
    const int floor = window_floor(i);
    const int s = cfg.boresight_sign;

    int observer_burn = -1, target_burn = -1;
    for (int m : starting) {
      if (maneuvers[static_cast<std::size_t>(m)].imp.actor == Actor::Observer)
        observer_burn = m;
      else
        target_burn = m;
    }

    std::vector<OptionInfo> info;
    std::vector<HypothesisOption> opts;
    for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
      const Track& tr = tracks[ti];
      const Node* leaf = tr.leaf.get();
      const Prediction pr = predict(leaf, i);
      const double dt_min = dt_minutes(leaf->scan, i);
      const std::vector<std::int64_t> res = path_resources(leaf, floor);
      const double base_cost = window_cost(leaf, cfg.score_window - 1);
      const auto ext_it = external.find(tr.tree);

      struct Ctx {
        bool maneuver;
        int burn;
      };
      std::vector<Ctx> ctxs;
      if (observer_burn >= 0) {
        ctxs.push_back({true, observer_burn});
      } else {
        ctxs.push_back({false, -1});
        if (target_burn >= 0) ctxs.push_back({true, target_burn});
      }

      for (const Ctx& c : ctxs) {
        const double dm = pr.d_mean >= 0.0 ? pr.d_mean : 0.5 * cfg.gate.d_max * dt_min;
        ErrorRegion region;
        RegionContext rc = pr.post_gap ? RegionContext::PostGap : RegionContext::Normal;
        Vec2 dv_t = Vec2::Zero();
        if (c.maneuver) {
          const ManeuverImpulse& imp = maneuvers[static_cast<std::size_t>(c.burn)].imp;
          // Tracking-frame axes: x = -s R, y = N, z = s T.
          const double sign = imp.actor == Actor::Observer ? -1.0 : 1.0;
          dv_t = sign * Vec2(-s * imp.dv.x(), imp.dv.z());
          rc = RegionContext::PostManeuver;
        }
        try {
          region = build_error_region(pr.point, dm, e_o, cfg.gate, rc, dv_t);
        } catch (const DegenerateWedge&) {
          region = build_error_region(pr.point, dm, e_o, cfg.gate, RegionContext::Normal);
        }
        const bool new_seg_if_measured = c.maneuver || leaf->gap_pending;
        std::vector<Vec2> hist_one{leaf->p};
        GateConfig gate_man = cfg.gate;
        gate_man.d_max *= cfg.maneuver_dmax_factor;
        GateHistory gh;
        gh.points = new_seg_if_measured ? std::span<const Vec2>(hist_one) : std::span<const Vec2>(pr.seg_points);
        gh.dt_min = dt_min;
        gh.e_o = e_o;
        gh.aspect = pr.aspect;

        const int claim = c.maneuver && maneuvers[static_cast<std::size_t>(c.burn)].imp.actor == Actor::UnknownTarget
                              ? c.burn
                              : leaf->claim;
        const bool claim_active = claim >= 0 && !maneuvers[static_cast<std::size_t>(claim)].resolved;
        auto push = [&](int meas, const Vec2& p, double cost) {
          OptionInfo oi;
          oi.track = static_cast<int>(ti);
          oi.meas = meas;
          oi.p = p;
          oi.cost = cost;
          oi.claim = claim;
          if (c.maneuver) {
            oi.seg_start = true;
            oi.cause = Cause::Maneuver;
            oi.burn = c.burn;
          } else if (meas >= 0 && leaf->gap_pending) {
            oi.seg_start = true;
            oi.cause = Cause::Gap;
          }
          HypothesisOption ho;
          ho.group = tr.tree;
          ho.cost = base_cost + cost;
          ho.resources = res;
          if (meas >= 0) ho.resources.push_back(meas_id(i, meas));
          ho.exclusive_tag = claim_active ? claim : -1;
          info.push_back(oi);
          opts.push_back(std::move(ho));
        };
        push(-1, pr.point, 1.0);
        for (std::size_t j = 0; j < r.pts.size(); ++j) {
          const Vec2& z = r.pts[j];
          GateVerdict v = gate_candidate(gh, z, region, c.maneuver || pr.post_maneuver ? gate_man : cfg.gate);
          if (ext_it != external.end()) {
            const Vec2 ep = to_model_plane(ext_it->second.predicted, model_rotation(r.obs));
            try {
              v.rule[4] = score_mahalanobis(z, ep, ext_it->second.cov).s11 <= 3.0;
            } catch (const InvalidCovariance&) {
            }
            v.pass = v.rule[0] && v.rule[1] && v.rule[2] && v.rule[3] && v.rule[4];
          }
          if (!v.pass) continue;
          push(static_cast<int>(j), z, std::min(1.0, (z - pr.point).norm() / std::max(region.radius, 1e-12)));
        }
      }
    }

    const HypothesisSet hs = form_hypotheses(opts, static_cast<std::size_t>(cfg.candidate_hypotheses));
    if (hs.hypotheses.empty()) {
      // Nothing feasible: extend every branch with a placeholder.
      for (Track& t : tracks) t.leaf = materialize(t.leaf, i, OptionInfo{0, -1, predict(t.leaf.get(), i).point, 1.0});
      return;
    }

    // Build nodes for every option that appears in a candidate hypothesis.
    std::map<int, NodePtr> nodes;
    for (const auto& h : hs.hypotheses)
      for (int o : h)
        if (!nodes.count(o)) {
          const OptionInfo& oi = info[static_cast<std::size_t>(o)];
          nodes[o] = materialize(tracks[static_cast<std::size_t>(oi.track)].leaf, i, oi);
        }

    // Full scores.
    const int q = cfg.score_window;
    const std::size_t nh = hs.hypotheses.size();
    std::vector<std::vector<std::pair<int, const ScoreVector*>>> entries(nh);
    std::vector<std::array<double, kNumCriteria>> pen(static_cast<std::size_t>(q));
    for (auto& p : pen) p.fill(0.0);
    for (std::size_t h = 0; h < nh; ++h) {
      const auto& picks = hs.hypotheses[h];
      std::vector<const Node*> leaves;
      for (int o : picks) leaves.push_back(nodes[o].get());
      auto walk = [&](const Node* a, const Node* b) {
        for (int d = 0; d < q && a && (!b || b); ++d) {
          if (b && a->scan != b->scan) break;
          const ScoreVector& sv = pair_score(a, b);
          entries[h].push_back({d, &sv});
          for (int j = 0; j < kNumCriteria; ++j)
            if (sv.defined[static_cast<std::size_t>(j)])
              pen[static_cast<std::size_t>(d)][static_cast<std::size_t>(j)] =
                  std::max(pen[static_cast<std::size_t>(d)][static_cast<std::size_t>(j)], sv.s[static_cast<std::size_t>(j)]);
          a = a->parent.get();
          if (b) b = b->parent.get();
        }
      };
      if (leaves.size() == 1) {
        walk(leaves[0], nullptr);
      } else {
        for (std::size_t l = 0; l < leaves.size(); ++l)
          for (std::size_t m = l + 1; m < leaves.size(); ++m) walk(leaves[l], leaves[m]);
      }
    }
    std::vector<std::array<double, kNumCriteria>> raw(nh);
    for (std::size_t h = 0; h < nh; ++h) {
      raw[h].fill(0.0);
      for (const auto& [d, sv] : entries[h])
        for (std::size_t j = 0; j < static_cast<std::size_t>(kNumCriteria); ++j)
          raw[h][j] += sv->defined[j] ? sv->s[j] : pen[static_cast<std::size_t>(d)][j];
    }
    std::vector<HypothesisScore> scored = aggregate_hypotheses(raw);
    std::vector<double> totals(nh);
    for (std::size_t h = 0; h < nh; ++h) totals[h] = scored[h].total;

    if (!external.empty()) add_external_term(hs, info, nodes, totals, i);

    const AmbiguityDecision ad = flag_ambiguity(totals, cfg.ambiguity);
    std::vector<std::size_t> order;
    for (std::size_t h = 0; h < nh; ++h)
      if (ad.propagate[h]) order.push_back(h);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return totals[a] < totals[b]; });
    if (order.size() > static_cast<std::size_t>(cfg.max_hypotheses)) order.resize(static_cast<std::size_t>(cfg.max_hypotheses));

    std::vector<Track> next;
    std::map<int, int> opt_track;
    kept.clear();
    for (std::size_t h : order) {
      Hyp hy;
      hy.total = totals[h];
      for (int o : hs.hypotheses[h]) {
        auto [it, fresh] = opt_track.emplace(o, static_cast<int>(next.size()));
        if (fresh) next.push_back({tracks[static_cast<std::size_t>(info[static_cast<std::size_t>(o)].track)].tree, nodes[o]});
        hy.tracks.push_back(it->second);
      }
      kept.push_back(std::move(hy));
    }
    // Unresolved maneuver branches outlive the hypothesis cut until their
    // association is decided; later hypotheses are formed over all tracks.
    std::set<std::pair<int, int>> held;
    for (const Track& t : next)
      if (claim_open(t.leaf->claim)) held.insert({t.tree, t.leaf->claim});
    std::vector<std::size_t> by_total(nh);
    std::iota(by_total.begin(), by_total.end(), std::size_t{0});
    std::stable_sort(by_total.begin(), by_total.end(), [&](std::size_t a, std::size_t b) { return totals[a] < totals[b]; });
    for (std::size_t h : by_total)
      for (int o : hs.hypotheses[h]) {
        const OptionInfo& oi = info[static_cast<std::size_t>(o)];
        if (!claim_open(oi.claim) || opt_track.count(o)) continue;
        const int tree = tracks[static_cast<std::size_t>(oi.track)].tree;
        if (!held.insert({tree, oi.claim}).second) continue;
        opt_track.emplace(o, static_cast<int>(next.size()));
        next.push_back({tree, nodes[o]});
      }
    tracks = std::move(next);

    // Contention with other trees counts toward a branch's ambiguous period.
    std::map<int, std::set<int>> users;
    for (const Track& t : tracks)
      if (t.leaf->meas >= 0) users[t.leaf->meas].insert(t.tree);
    for (Track& t : tracks)
      if (t.leaf->meas >= 0 && users[t.leaf->meas].size() > 1) ++t.leaf->n_ambiguous;

    // Converged outside filters collapse their tree to the best branch.
    bool pruned = false;
    for (const auto& [tree, e] : external) {
      if (!e.converged || kept.empty()) continue;
      const int best = tree_of_hyp(kept[0], tree);
      if (best < 0) continue;
      for (std::size_t t = 0; t < tracks.size(); ++t)
        if (tracks[t].tree == tree && static_cast<int>(t) != best) {
          tracks[t].leaf.reset();
          pruned = true;
        }
    }
    if (pruned) compact_tracks();
  }

  void add_external_term(const HypothesisSet& hs, const std::vector<OptionInfo>& info,
                         std::map<int, NodePtr>& nodes, std::vector<double>& totals, int i) {
    const Mat3 rot = model_rotation(rec(i).obs);
    const std::size_t nh = hs.hypotheses.size();
    std::vector<std::vector<std::optional<double>>> vals(nh);
    double worst = 0.0;
    for (std::size_t h = 0; h < nh; ++h)
      for (int o : hs.hypotheses[h]) {
        const int tree = tracks[static_cast<std::size_t>(info[static_cast<std::size_t>(o)].track)].tree;
        auto it = external.find(tree);
        if (it == external.end()) continue;
        const Node* n = nodes[o].get();
        std::optional<double> v;
        if (n->meas >= 0) {
          try {
            v = score_mahalanobis(n->p, to_model_plane(it->second.predicted, rot), it->second.cov).s11;
            worst = std::max(worst, *v);
          } catch (const InvalidCovariance&) {
          }
        }
        vals[h].push_back(v);
      }
    std::vector<double> s11(nh, 0.0);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t h = 0; h < nh; ++h) {
      for (const auto& v : vals[h]) s11[h] += v ? *v : worst;
      lo = std::min(lo, s11[h]);
      hi = std::max(hi, s11[h]);
    }
    if (hi > lo)
      for (std::size_t h = 0; h < nh; ++h) totals[h] += (s11[h] - lo) / (hi - lo);
  }

  NodePtr materialize(const NodePtr& parent, int i, const OptionInfo& oi) {
    NodePtr n = make_node(parent, i);
    n->meas = oi.meas;
    n->p = oi.p;
    n->cost = oi.cost;
    n->seg_start = oi.seg_start;
    n->cause = oi.cause;
    n->burn = oi.burn;
    n->claim = oi.claim;
    n->n_visible += 1;
    if (oi.meas < 0) {
      n->n_missed += 1;
      n->miss_run += 1;
    } else {
      n->miss_run = 0;
      n->gap_pending = false;
    }
    return n;
  }

  // ---- maneuver association ----

  bool claim_open(int claim) const {
    return claim >= 0 && !maneuvers[static_cast<std::size_t>(claim)].resolved;
  }

  void resolve_maneuver(int m, int i) {
    ManeuverState& ms = maneuvers[static_cast<std::size_t>(m)];
    ms.resolved = true;
    ManeuverOutcome out;
    out.maneuver = m;
    out.epoch = ms.imp.epoch;
    out.decided_k = rec(i).k;
    if (kept.empty()) {
      outcomes_now.push_back(out);
      return;
    }
    const ObserverEpoch obs_m = observer.at(ms.imp.epoch);
    const int s = cfg.boresight_sign;
    const Vec2 dv_t(-s * ms.imp.dv.x(), ms.imp.dv.z());
    const double theta = std::atan2(dv_t.y(), dv_t.x());

    std::vector<int> cand_trees;
    std::vector<std::array<double, 6>> scores;
    std::vector<double> norms, thresholds;
    // One branch per tree: its maneuver branch when alive, else the branch
    // of the best hypothesis.
    std::map<int, int> pick;
    for (std::size_t t = 0; t < tracks.size(); ++t) {
      const Track& tr = tracks[t];
      if (tr.leaf->claim != m) continue;
      auto [it, fresh] = pick.emplace(tr.tree, static_cast<int>(t));
      if (!fresh && window_cost(tr.leaf.get(), cfg.score_window) <
                        window_cost(tracks[static_cast<std::size_t>(it->second)].leaf.get(), cfg.score_window))
        it->second = static_cast<int>(t);
    }
    for (int t : kept[0].tracks) pick.emplace(tracks[static_cast<std::size_t>(t)].tree, t);
    for (const auto& [tree_id, t] : pick) {
      const Track& tr = tracks[static_cast<std::size_t>(t)];
      if (tree_created[tr.tree] >= ms.start) continue;
      std::vector<const Node*> post, pre;
      for (const Node* n = tr.leaf.get(); n; n = n->parent.get()) {
        if (n->scan >= ms.start)
          post.push_back(n);
        else if (static_cast<int>(pre.size()) < cfg.fit_window) {
          if (n->meas >= 0) pre.push_back(n);
          if (n->seg_start) break;
        } else {
          break;
        }
      }
      std::reverse(post.begin(), post.end());
      std::reverse(pre.begin(), pre.end());
      std::vector<Vec2> pp, mp;
      std::vector<ModelEpoch> pe, me;
      for (const Node* n : pre) {
        pp.push_back(n->p);
        pe.push_back(rec(n->scan).me);
      }
      for (const Node* n : post)
        if (n->meas >= 0) {
          mp.push_back(n->p);
          me.push_back(rec(n->scan).me);
        }
      const auto model_pre = try_fit(pp, pe);
      if (!model_pre || post.size() < 4) continue;
      std::optional<ParametricModel> model_post;
      if (cfg.maneuver_post_prior > 0.0) {
        if (!mp.empty())
          model_post = fit_parametric_model_toward(mp, me, *model_pre, cfg.maneuver_post_prior);
      } else {
        model_post = try_fit(mp, me);
      }
      if (!model_post) continue;
      ManeuverHypothesis mh;
      mh.maneuver = m;
      mh.candidate = tr.tree;
      mh.x_pre = model_pre->x;
      mh.x_post = model_post->x;
      mh.fit_rms_pre = model_pre->fit_residual;
      mh.theta_man = theta;
      mh.dx_pred = predict_model_change(mh.x_pre, ms.imp, obs_m, s, observer.gravity().mu);
      if (cfg.maneuver_linear_change) {
        mh.linear = true;
        mh.dx_pred = linearize_change(mh.x_pre, mh.dx_pred);
      }
      for (const Node* n : post) {
        mh.meas.push_back(n->p);
        mh.pred_pre.push_back(predict_plane(*model_pre, rec(n->scan).me));
      }
      scores.push_back(score_maneuver_assignment(mh));
      const Coeffs dx = mh.dx_meas();
      double nn = 0.0;
      for (double v : dx) nn += v * v;
      norms.push_back(std::sqrt(nn));
      thresholds.push_back(cfg.maneuver_threshold_factor * mh.fit_rms_pre);
      cand_trees.push_back(tr.tree);
    }
    const ManeuverDecision dec = assign_or_reject(scores, norms, thresholds);
    if (dec.winner) out.tree = cand_trees[*dec.winner];
    out.candidates = cand_trees;
    out.totals = dec.totals;
    out.scores = scores;

    // Keep maneuver branches only for the winner.
    std::map<int, std::pair<bool, bool>> has;  // tree -> (has claim branch, has plain branch)
    for (const Track& t : tracks) {
      auto& h = has[t.tree];
      (t.leaf->claim == m ? h.first : h.second) = true;
    }
    bool changed = false;
    for (Track& t : tracks) {
      const bool on_claim = t.leaf->claim == m;
      const auto& h = has[t.tree];
      const bool winner = t.tree == out.tree;
      if (winner && !on_claim && h.first) {
        t.leaf.reset();
        changed = true;
      } else if (!winner && on_claim && h.second) {
        t.leaf.reset();
        changed = true;
      }
    }
    if (changed) compact_tracks();
    outcomes_now.push_back(out);
  }

  // ---- confirmation and emission ----

  void update_best(int i, std::vector<Emission>& out, bool visible) {
    if (kept.empty()) return;
    const auto& C = cfg.ambiguity;
    const double s_best = kept[0].total;
    for (int t : kept[0].tracks) {
      const Track& tr = tracks[static_cast<std::size_t>(t)];
      const bool measured_now = visible && tr.leaf->scan == i && tr.leaf->meas >= 0;
      int depth = 0;
      for (Node* n = tr.leaf.get(); n && depth < cfg.root_depth; n = n->parent.get(), ++depth) {
        const bool continuing = n->last_best >= 0 && n->last_best == i - 1;
        if (continuing)
          n->streak += measured_now ? 1 : 0;
        else
          n->streak = measured_now ? 1 : 0;
        n->last_best = i;
        if (!visible || n->emitted || n->meas < 0 || n->streak < C.C2) continue;
        // Best hypothesis must clearly beat every kept alternative that does
        // not give this measurement to this tree.
        double s_dis = std::numeric_limits<double>::infinity();
        for (std::size_t h = 1; h < kept.size(); ++h) {
          const int u = tree_of_hyp(kept[h], tr.tree);
          const Node* other = u >= 0 ? node_at(tracks[static_cast<std::size_t>(u)].leaf.get(), n->scan) : nullptr;
          if (!other || other->meas != n->meas) s_dis = std::min(s_dis, kept[h].total);
        }
        const bool clear = !std::isfinite(s_dis) || s_best < C.C1 * s_dis;
        if (!measurement_unambiguous(clear, n->streak, C)) continue;
        n->emitted = true;
        const ScanRec& sr = rec(n->scan);
        out.push_back({sr.k, sr.t, tr.tree, n->meas, sr.raw[static_cast<std::size_t>(n->meas)]});
      }
    }
  }

  // ---- initiation ----

  void initiate(int i) {
    const int L = cfg.init_scans;
    if (i + 1 < L) return;
    for (int j = i - L + 1; j <= i; ++j)
      if (!rec(j).visible) return;
    if (static_cast<int>(trees.size()) >= cfg.max_targets) return;

    std::set<std::int64_t> used;
    for (const Track& t : tracks)
      for (auto id : path_resources(t.leaf.get(), i - L + 1)) used.insert(id);
    struct Pt {
      int scan, meas;
    };
    std::vector<Pt> pts;
    std::vector<Vec2> xy;
    for (int j = i - L + 1; j <= i; ++j)
      for (std::size_t m = 0; m < rec(j).pts.size(); ++m)
        if (!used.count(meas_id(j, static_cast<int>(m)))) {
          pts.push_back({j, static_cast<int>(m)});
          xy.push_back(rec(j).pts[m]);
        }
    if (xy.empty()) return;
    const double dt = dt_minutes(i - 1, i);
    const double eps = cfg.dbscan_eps > 0.0 ? cfg.dbscan_eps : 2.0 * cfg.gate.d_max * dt;
    const DbscanResult db = dbscan(xy, eps, cfg.dbscan_min_pts);

    const double e_o = rec(i).obs.el.e;
    for (int c = 0; c < db.n_clusters; ++c) {
      std::vector<std::vector<int>> by_scan(static_cast<std::size_t>(L));
      int size = 0;
      for (std::size_t p = 0; p < pts.size(); ++p)
        if (db.labels[p] == c) {
          by_scan[static_cast<std::size_t>(pts[p].scan - (i - L + 1))].push_back(static_cast<int>(p));
          ++size;
        }
      bool all = true;
      for (const auto& v : by_scan) all = all && !v.empty();
      if (!all) continue;

      // Gated sequences with one point per scan, cheapest first.
      struct Seq {
        std::vector<int> idx;
        double cost;
      };
      std::vector<Seq> seqs;
      std::vector<int> cur;
      std::vector<Vec2> hist;
      std::function<void(int, double)> dfs = [&](int level, double cost) {
        if (seqs.size() > 4096) return;
        if (level == L) {
          seqs.push_back({cur, cost});
          return;
        }
        for (int p : by_scan[static_cast<std::size_t>(level)]) {
          const Vec2& z = xy[static_cast<std::size_t>(p)];
          double add = 0.0;
          if (level > 0) {
            const double dt_l = dt_minutes(pts[static_cast<std::size_t>(cur.back())].scan, pts[static_cast<std::size_t>(p)].scan);
            const Vec2 pred = fallback_predict(std::span<const Vec2>(hist.data() + (hist.size() >= 2 ? hist.size() - 2 : 0),
                                                                     hist.size() >= 2 ? 2 : 1));
            double dm = 0.5 * cfg.gate.d_max * dt_l;
            if (hist.size() >= 2) dm = track_geometry(std::span<const Vec2>(hist)).d_mean;
            const ErrorRegion reg = build_error_region(pred, dm, e_o, cfg.gate);
            GateHistory gh;
            gh.points = hist;
            gh.dt_min = dt_l;
            gh.e_o = e_o;
            if (!gate_candidate(gh, z, reg, cfg.gate).pass) continue;
            if (hist.size() >= 2) add = (z - pred).norm();
          }
          cur.push_back(p);
          hist.push_back(z);
          dfs(level + 1, cost + add);
          cur.pop_back();
          hist.pop_back();
        }
      };
      dfs(0, 0.0);
      std::stable_sort(seqs.begin(), seqs.end(), [](const Seq& a, const Seq& b) { return a.cost < b.cost; });
      std::set<int> taken;
      int made = 0;
      for (const Seq& sq : seqs) {
        if (made >= size / L || static_cast<int>(trees.size()) >= cfg.max_targets) break;
        bool free = true;
        for (int p : sq.idx) free = free && !taken.count(p);
        if (!free) continue;
        for (int p : sq.idx) taken.insert(p);
        ++made;
        const int tree = next_tree++;
        NodePtr leaf;
        for (std::size_t l = 0; l < sq.idx.size(); ++l) {
          const Pt& pt = pts[static_cast<std::size_t>(sq.idx[l])];
          OptionInfo oi;
          oi.meas = pt.meas;
          oi.p = xy[static_cast<std::size_t>(sq.idx[l])];
          oi.cost = 0.0;
          oi.seg_start = l == 0;
          oi.cause = Cause::Initial;
          leaf = materialize(leaf, pt.scan, oi);
          leaf->last_best = i;
          leaf->streak = 1;
        }
        trees.insert(tree);
        tree_created[tree] = i;
        const int ti = static_cast<int>(tracks.size());
        tracks.push_back({tree, leaf});
        if (kept.empty()) kept.push_back({});
        for (Hyp& h : kept) h.tracks.push_back(ti);
      }
    }
  }

  // ---- maintenance ----

  int miss_limit(int i) const {
    const double a = rec(i).obs.el.a;
    const double period = 2.0 * kPi * std::sqrt(a * a * a / observer.gravity().mu);
    const double dt = i > 0 ? rec(i).t - rec(i - 1).t : 60.0;
    return std::max(1, static_cast<int>(std::ceil(cfg.miss_period_frac * period / dt)));
  }

  // Passes repeat until nothing changes: repairing hypotheses after a
  // deletion can change which branch of a tree ranks best.
  void maintain_at(int i) {
    while (maintain_pass(i)) {
    }
  }

  bool maintain_pass(int i) {
    if (tracks.empty()) return false;
    std::vector<int> rank(tracks.size(), std::numeric_limits<int>::max());
    for (std::size_t h = 0; h < kept.size(); ++h)
      for (int t : kept[h].tracks) rank[static_cast<std::size_t>(t)] = std::min(rank[static_cast<std::size_t>(t)], static_cast<int>(h));
    auto better = [&](int a, int b) {
      if (rank[static_cast<std::size_t>(a)] != rank[static_cast<std::size_t>(b)])
        return rank[static_cast<std::size_t>(a)] < rank[static_cast<std::size_t>(b)];
      const double ca = window_cost(tracks[static_cast<std::size_t>(a)].leaf.get(), cfg.score_window);
      const double cb = window_cost(tracks[static_cast<std::size_t>(b)].leaf.get(), cfg.score_window);
      if (ca != cb) return ca < cb;
      return tracks[static_cast<std::size_t>(a)].leaf->id < tracks[static_cast<std::size_t>(b)].leaf->id;
    };
    std::map<int, std::vector<int>> by_tree;
    for (std::size_t t = 0; t < tracks.size(); ++t) by_tree[tracks[t].tree].push_back(static_cast<int>(t));
    for (auto& [tree, v] : by_tree) std::sort(v.begin(), v.end(), better);

    std::vector<bool> dead(tracks.size(), false);
    const int nmiss = miss_limit(i);
    for (std::size_t t = 0; t < tracks.size(); ++t) {
      const Node* n = tracks[t].leaf.get();
      if (n->miss_run >= nmiss) dead[t] = true;
      if (n->n_visible >= cfg.min_visible_for_fractions) {
        if (n->n_missed >= cfg.unobserved_frac * n->n_visible) dead[t] = true;
        if (n->n_ambiguous >= cfg.ambiguous_frac * n->n_visible) dead[t] = true;
      }
    }

    const int root_scan = i - cfg.root_depth;
    for (auto& [tree, v] : by_tree) {
      std::vector<int> live;
      for (int t : v)
        if (!dead[static_cast<std::size_t>(t)]) live.push_back(t);
      if (live.empty()) continue;
      const Node* best = tracks[static_cast<std::size_t>(live[0])].leaf.get();
      const Node* root = node_at(best, root_scan);
      std::vector<int> survivors{live[0]};
      for (std::size_t a = 1; a < live.size(); ++a) {
        const Node* n = tracks[static_cast<std::size_t>(live[a])].leaf.get();
        bool drop = root && node_at(n, root_scan) != root;
        for (int s : survivors) {
          if (drop) break;
          const Node* o = tracks[static_cast<std::size_t>(s)].leaf.get();
          bool same_all = true, diff_all = true;
          const Node* x = n;
          const Node* y = o;
          for (int d = 0; d < cfg.root_depth && x && y; ++d, x = x->parent.get(), y = y->parent.get()) {
            const bool same = x->meas == y->meas;
            same_all = same_all && same && x->seg_start == y->seg_start && x->claim == y->claim;
            diff_all = diff_all && !same;
          }
          drop = same_all || diff_all;
        }
        if (!drop && static_cast<int>(survivors.size()) < cfg.max_tracks_per_target)
          survivors.push_back(live[a]);
      }
      std::set<int> keep(survivors.begin(), survivors.end());
      for (int t : v)
        if (!keep.count(t)) dead[static_cast<std::size_t>(t)] = true;
    }

    // Too many targets: keep the ones with the most measurements.
    std::vector<std::pair<int, int>> tree_q;
    for (auto& [tree, v] : by_tree) {
      int best_q = -1;
      for (int t : v)
        if (!dead[static_cast<std::size_t>(t)]) {
          const Node* n = tracks[static_cast<std::size_t>(t)].leaf.get();
          best_q = std::max(best_q, n->n_visible - n->n_missed);
        }
      if (best_q >= 0) tree_q.push_back({best_q, tree});
    }
    if (static_cast<int>(tree_q.size()) > cfg.max_targets) {
      std::stable_sort(tree_q.begin(), tree_q.end(), [](auto& a, auto& b) { return a.first > b.first; });
      for (std::size_t r = static_cast<std::size_t>(cfg.max_targets); r < tree_q.size(); ++r)
        for (int t : by_tree[tree_q[r].second]) dead[static_cast<std::size_t>(t)] = true;
    }

    bool any = false;
    for (std::size_t t = 0; t < tracks.size(); ++t)
      if (dead[t]) {
        tracks[t].leaf.reset();
        any = true;
      }
    if (any) compact_tracks();
    return any;
  }

  void evict_cache(int i) {
    const int lim = i - cfg.score_window - cfg.fit_window;
    for (auto it = cache.begin(); it != cache.end();)
      it = it->second.scan < lim ? cache.erase(it) : std::next(it);
  }
};

Tracker::Tracker(const TrackerConfig& cfg, ObserverEstimate observer, std::vector<ManeuverImpulse> maneuvers)
    : impl_(std::make_unique<Impl>(cfg, std::move(observer), std::move(maneuvers))) {}
Tracker::~Tracker() = default;
Tracker::Tracker(Tracker&&) noexcept = default;
Tracker& Tracker::operator=(Tracker&&) noexcept = default;

ScanReport Tracker::process_scan(const Scan& scan, std::span<const ExternalPrediction> external) {
  return impl_->process(scan, external);
}

void Tracker::maintain() {
  if (!impl_->scans.empty()) impl_->maintain_at(static_cast<int>(impl_->scans.size()) - 1);
}

std::size_t Tracker::tree_count() const { return impl_->trees.size(); }
std::size_t Tracker::track_count() const { return impl_->tracks.size(); }
std::size_t Tracker::hypothesis_count() const { return impl_->kept.size(); }

std::vector<double> Tracker::hypothesis_totals() const {
  std::vector<double> v;
  for (const auto& h : impl_->kept) v.push_back(h.total);
  return v;
}

std::string Tracker::state_digest() const {
  std::ostringstream os;
  for (const auto& t : impl_->tracks) os << t.tree << ':' << t.leaf->id << ';';
  os << '|';
  for (const auto& h : impl_->kept) {
    for (int t : h.tracks) os << t << ',';
    os << '/';
  }
  return os.str();
}

std::vector<std::string> Tracker::audit() const {
  const Impl& m = *impl_;
  std::vector<std::string> out;
  if (m.kept.size() > static_cast<std::size_t>(m.cfg.max_hypotheses))
    out.push_back("hypothesis count " + std::to_string(m.kept.size()) + " over cap");
  if (m.trees.size() > static_cast<std::size_t>(m.cfg.max_targets))
    out.push_back("tree count " + std::to_string(m.trees.size()) + " over cap");
  std::map<int, int> per_tree;
  for (const auto& t : m.tracks) ++per_tree[t.tree];
  for (const auto& [tree, n] : per_tree) {
    if (n > m.cfg.max_tracks_per_target)
      out.push_back("tree " + std::to_string(tree) + " has " + std::to_string(n) + " tracks");
    if (!m.trees.count(tree)) out.push_back("track on unknown tree " + std::to_string(tree));
  }
  for (std::size_t h = 0; h < m.kept.size(); ++h) {
    std::set<int> seen_trees;
    std::set<std::int64_t> seen_meas;
    for (int ti : m.kept[h].tracks) {
      if (ti < 0 || static_cast<std::size_t>(ti) >= m.tracks.size()) {
        out.push_back("hypothesis " + std::to_string(h) + " names a missing track");
        continue;
      }
      const Track& tr = m.tracks[static_cast<std::size_t>(ti)];
      if (!seen_trees.insert(tr.tree).second)
        out.push_back("hypothesis " + std::to_string(h) + " repeats tree " + std::to_string(tr.tree));
      for (const Node* n = tr.leaf.get(); n; n = n->parent.get())
        if (n->meas >= 0 && !seen_meas.insert(meas_id(n->scan, n->meas)).second)
          out.push_back("hypothesis " + std::to_string(h) + " shares measurement " +
                        std::to_string(n->meas) + " of scan " + std::to_string(n->scan));
    }
  }
  return out;
}

Vec2 Tracker::model_plane_point(const Bearing& b, double t) const {
  const ObserverEpoch o = impl_->observer.at(t);
  return impl_->to_model_plane(b, impl_->model_rotation(o));
}

}  // namespace samus
