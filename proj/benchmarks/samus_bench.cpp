#include <benchmark/benchmark.h>

#include <vector>

#include "samus/gating.hpp"
#include "samus/harness.hpp"
#include "samus/motion_model.hpp"
#include "samus/rng.hpp"

using namespace samus;

namespace {

ScenarioConfig clutter_config(int clutter) {
  ScenarioConfig cfg;
  cfg.seed = 7;
  cfg.clutter_min = cfg.clutter_max = clutter;
  return cfg;
}

}  // namespace

// Whole run over one scenario, reported per scan.
static void BM_ProcessScan(benchmark::State& state) {
  const Scenario sc = generate_scenario(clutter_config(static_cast<int>(state.range(0))));
  const SimOutput sim = simulate(sc);
  const TrackerConfig tc = tracker_config_for(sc);
  for (auto _ : state) {
    Tracker t(tc, make_observer_estimate(sc));
    for (const Scan& s : sim.scans) benchmark::DoNotOptimize(t.process_scan(s));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(sim.scans.size()));
}
BENCHMARK(BM_ProcessScan)->Arg(0)->Arg(3)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_ModelFit(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ParametricModel truth = ParametricModel::from_x({0.01, 0.004, 1.0, -0.005, 0.003, 2.0});
  std::vector<Vec2> pts;
  std::vector<ModelEpoch> eps;
  for (int j = 0; j < n; ++j) {
    eps.push_back({0.1 * j, 0.1, 0.5, 1.0 - 0.1 * std::cos(0.1 * j)});
    pts.push_back(predict_plane(truth, eps.back()));
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_parametric_model(std::span<const Vec2>(pts), eps));
}
BENCHMARK(BM_ModelFit)->Arg(6)->Arg(12)->Arg(30);

static void BM_Gate(benchmark::State& state) {
  GateConfig cfg;
  std::vector<Vec2> hist;
  for (int j = 0; j < 8; ++j) hist.emplace_back(1e-3 * j, 5e-4 * j + 1e-5 * j * j);
  GateHistory h;
  h.points = hist;
  const ErrorRegion region = build_error_region(Vec2(8e-3, 4.6e-3), 1.1e-3, 0.0, cfg);
  Rng rng(1);
  std::vector<Vec2> cands;
  for (int j = 0; j < 256; ++j) cands.emplace_back(8e-3 + rng.normal() * 2e-4, 4.6e-3 + rng.normal() * 2e-4);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(gate_candidate(h, cands[i++ & 255], region, cfg));
}
BENCHMARK(BM_Gate);
BENCHMARK_MAIN();
