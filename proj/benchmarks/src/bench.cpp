// Microbenchmarks for the hot paths: predictor evaluation, closed-form
// gradients, the pairing oracle, Monte-Carlo batches, and integrator step
// throughput.

#include <benchmark/benchmark.h>

#include <random>

#include "iclflow/d1.hpp"
#include "iclflow/gradients.hpp"
#include "iclflow/integrate.hpp"
#include "iclflow/model.hpp"
#include "iclflow/sampling.hpp"
#include "iclflow/systems.hpp"
#include "iclflow/wick.hpp"

namespace {

iclflow::ModelSpec make_spec(int d, int N) {
  iclflow::ModelSpec spec;
  spec.d = d;
  spec.N = N;
  spec.lambda = iclflow::Mat::Identity(d, d);
  for (int i = 0; i < d; ++i) spec.lambda(i, i) = 0.5 + 0.5 * i;
  return spec;
}

iclflow::FullState make_state(int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.7);
  iclflow::FullState s;
  s.U = iclflow::Mat(d, d);
  s.z = iclflow::Vec(d);
  s.Z = iclflow::Vec(d);
  for (int i = 0; i < d; ++i) {
    s.z[i] = n(rng);
    s.Z[i] = n(rng);
    for (int j = 0; j < d; ++j) s.U(i, j) = n(rng);
  }
  s.v = n(rng);
  return s;
}

void bm_predict_sum(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const iclflow::ModelSpec spec = make_spec(d, 8);
  const iclflow::FullState s = make_state(d, 1);
  const iclflow::PromptSample sample = iclflow::draw_sample(spec, 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(iclflow::predict_query_sum(s, sample, spec));
}
BENCHMARK(bm_predict_sum)->Arg(2)->Arg(4)->Arg(8);

void bm_predict_matrix(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const iclflow::ModelSpec spec = make_spec(d, 8);
  const iclflow::FullState s = make_state(d, 1);
  const iclflow::PromptSample sample = iclflow::draw_sample(spec, 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(iclflow::predict_query_matrix(s, sample, spec));
}
BENCHMARK(bm_predict_matrix)->Arg(2)->Arg(4)->Arg(8);

void bm_full_gradient(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const iclflow::ModelSpec spec = make_spec(d, 4);
  const iclflow::GammaSpec gamma = iclflow::make_gamma(spec);
  const iclflow::FullState s = make_state(d, 3);
  for (auto _ : state)
    benchmark::DoNotOptimize(iclflow::full_gradient(s, spec, gamma));
}
BENCHMARK(bm_full_gradient)->Arg(1)->Arg(2)->Arg(4)->Arg(8);

void bm_pairing_oracle(benchmark::State& state) {
  const iclflow::ModelSpec spec = make_spec(2, 2);
  const iclflow::FullState s = make_state(2, 4);
  for (auto _ : state)
    benchmark::DoNotOptimize(iclflow::oracle::wick_expected_gradient(s, spec));
}
BENCHMARK(bm_pairing_oracle)->Unit(benchmark::kMillisecond);

void bm_mc_batch(benchmark::State& state) {
  const iclflow::ModelSpec spec = make_spec(2, 4);
  const iclflow::FullState s = make_state(2, 5);
  const long batch = state.range(0);
  for (auto _ : state)
    benchmark::DoNotOptimize(iclflow::mc_gradient(s, spec, batch, 9));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(bm_mc_batch)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void bm_integrate_reduced(benchmark::State& state) {
  const iclflow::ModelSpec spec = make_spec(2, 2);
  const iclflow::FlowSystem sys = iclflow::make_simplified_system(spec);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n;
  iclflow::Vec x0(sys.dim);
  for (int i = 0; i < sys.dim; ++i) x0[i] = n(rng);
  iclflow::IntegratorConfig cfg;
  cfg.t_end = 10.0;
  cfg.snapshot_stride = 1 << 30;  // measure stepping, not recording
  for (auto _ : state) {
    const iclflow::Trajectory traj = iclflow::integrate(sys, x0, cfg);
    benchmark::DoNotOptimize(traj.final_time);
    state.SetItemsProcessed(state.items_processed() +
                            static_cast<int64_t>(traj.steps_accepted));
  }
}
BENCHMARK(bm_integrate_reduced)->Unit(benchmark::kMicrosecond);

void bm_d1_rhs(benchmark::State& state) {
  const iclflow::D1Coefficients c = iclflow::d1_coefficients(2);
  const iclflow::D1State s{0.3, -0.2, 0.5, 0.7};
  for (auto _ : state) benchmark::DoNotOptimize(iclflow::d1_rhs(s, c));
}
BENCHMARK(bm_d1_rhs);

}  // namespace

BENCHMARK_MAIN();
