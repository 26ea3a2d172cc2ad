#include <benchmark/benchmark.h>

#include <vector>

#include "ttlnet/map.hpp"
#include "ttlnet/map_metrics.hpp"
#include "ttlnet/network.hpp"
#include "ttlnet/renewal.hpp"
#include "ttlnet/simulator.hpp"
#include "ttlnet/topology.hpp"
#include "ttlnet/ttl_io.hpp"

namespace {

ttlnet::MarkovArrivalProcess chain_map(std::size_t levels) {
  auto m = ttlnet::MarkovArrivalProcess::poisson(1.0);
  for (std::size_t i = 0; i < levels; ++i) {
    m = ttlnet::output_sigma(m, ttlnet::PhaseTypeDistribution::erlang(2, 2.0)).map;
  }
  return m;
}

const char* kTree = R"({
  "nodes": [
    {"id": "c1", "policy": "R", "ttl": {"exp": 1}},
    {"id": "c2", "policy": "R", "ttl": {"exp": 1}},
    {"id": "root", "policy": "R", "ttl": {"exp": 1}, "children": ["c1", "c2"]}
  ],
  "arrivals": {"c1": {"poisson": 1}, "c2": {"poisson": 1}}
})";

}  // namespace

static void BM_KronSum(benchmark::State& state) {
  const auto a = chain_map(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ttlnet::kron_sum(a.d0(), a.d0()));
  }
  state.SetLabel(std::to_string(a.states() * a.states()) + " states");
}
BENCHMARK(BM_KronSum)->Arg(1)->Arg(2)->Arg(3);

static void BM_SteadyState(benchmark::State& state) {
  const auto m = chain_map(static_cast<std::size_t>(state.range(0)));
  const auto q = m.generator();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ttlnet::steady_state(q));
  }
  state.SetLabel(std::to_string(m.states()) + " states");
}
BENCHMARK(BM_SteadyState)->Arg(2)->Arg(4)->Arg(6);

static void BM_AnalyzeTree(benchmark::State& state) {
  const auto topo = ttlnet::parse_topology(kTree);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ttlnet::analyze(topo, "default"));
  }
}
BENCHMARK(BM_AnalyzeTree);

static void BM_SigmaLattice(benchmark::State& state) {
  std::vector<double> density(201);
  for (std::size_t i = 0; i < density.size(); ++i) {
    const double x = 0.01 * static_cast<double>(i);
    density[i] = x * (2.0 - x);
  }
  double mass = 0.0;
  for (std::size_t i = 1; i < density.size(); ++i) mass += 0.005 * (density[i - 1] + density[i]);
  for (auto& d : density) d /= mass;
  const auto x = ttlnet::RenewalSpec::tabulated(0.01, density);
  const auto t = ttlnet::RenewalSpec::deterministic(3.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ttlnet::transform_sigma(x, t, 0.5));
  }
}
BENCHMARK(BM_SigmaLattice);

static void BM_SimulateTree(benchmark::State& state) {
  const auto topo = ttlnet::parse_topology(kTree);
  ttlnet::SimConfig cfg;
  cfg.event_cap = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ttlnet::simulate(topo, cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateTree)->Arg(100000);

BENCHMARK_MAIN();
