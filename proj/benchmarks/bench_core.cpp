#include <benchmark/benchmark.h>

#include "grassfusion/cluster.hpp"
#include "grassfusion/complete.hpp"
#include "grassfusion/objective.hpp"
#include "grassfusion/synth.hpp"

namespace {

// Reference instance: K=2 planes in R^50, 30 columns per cluster, half the
// entries observed.
struct Instance {
  gf::MaskedMatrix masked;
  gf::ProxyEnsemble ens;
};

Instance make_instance() {
  Instance inst;
  const auto gt = gf::generate_union(50, 2, 2, 30, 7);
  inst.masked = gf::apply_mask(gt.full_matrix, 0.5, 7);
  inst.ens.lambda = 1e-5;
  for (Eigen::Index j = 0; j < inst.masked.cols(); ++j) {
    const auto x = gf::observed_column(inst.masked, j);
    gf::RngStream rng(7, "init/" + std::to_string(j));
    inst.ens.proxies.push_back(gf::init_proxy(x, 2, rng));
    inst.ens.bases.push_back(gf::build_completion_basis(x));
  }
  return inst;
}

void bm_objective_value(benchmark::State& state) {
  const Instance inst = make_instance();
  for (auto _ : state)
    benchmark::DoNotOptimize(gf::objective_value(inst.ens, static_cast<int>(state.range(0))));
}

void bm_total_gradient(benchmark::State& state) {
  const Instance inst = make_instance();
  for (auto _ : state)
    benchmark::DoNotOptimize(gf::total_gradient(inst.ens, static_cast<int>(state.range(0))));
}

void bm_geodesic_step(benchmark::State& state) {
  const Instance inst = make_instance();
  const auto grad = gf::total_gradient(inst.ens, 1);
  gf::TangentVector dir;
  dir.delta = -grad.tangents[0].delta;
  for (auto _ : state)
    benchmark::DoNotOptimize(gf::geodesic_step(inst.ens.proxies[0], dir, 0.5));
}

void bm_spectral_cluster(benchmark::State& state) {
  const Instance inst = make_instance();
  const auto D = gf::distance_matrix(inst.ens);
  const auto A = gf::affinity(D);
  for (auto _ : state) benchmark::DoNotOptimize(gf::spectral_cluster(A, 2, 7));
}

void bm_lrmc_als(benchmark::State& state) {
  const Instance inst = make_instance();
  for (auto _ : state)
    benchmark::DoNotOptimize(gf::lrmc_als(inst.masked, 2, 1e-10, 500, 7));
}

}  // namespace

BENCHMARK(bm_objective_value)->Arg(1)->Arg(4);
BENCHMARK(bm_total_gradient)->Arg(1)->Arg(4);
BENCHMARK(bm_geodesic_step);
BENCHMARK(bm_spectral_cluster);
BENCHMARK(bm_lrmc_als);

BENCHMARK_MAIN();
