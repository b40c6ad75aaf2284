#include <benchmark/benchmark.h>

#include <random>

#include "slipflow/dynamics.hpp"
#include "slipflow/gronwall.hpp"
#include "slipflow/operators.hpp"

using namespace slipflow;

namespace {

const operators::OperatorSet& shared_ops() {
  static const auto ops = [] {
    operators::OperatorOptions o;
    return operators::build_operator_set(o);
  }();
  return ops;
}

const dynamics::GalerkinSystem& shared_system() {
  static const dynamics::GalerkinSystem system(shared_ops(), 0.1);
  return system;
}

Vector random_state(Eigen::Index n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  Vector g(n);
  for (Eigen::Index i = 0; i < n; ++i) g[i] = nd(rng);
  return g;
}

void BM_BilinearAssembly(benchmark::State& state) {
  operators::OperatorOptions o;
  o.l_max = static_cast<int>(state.range(0));
  o.advection = false;
  for (auto _ : state) benchmark::DoNotOptimize(operators::build_operator_set(o));
}
BENCHMARK(BM_BilinearAssembly)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_AdvectionAssembly(benchmark::State& state) {
  const auto& ops = shared_ops();
  const auto& orders = ops.nonlinear_orders;
  const auto grid = make_ball_grid(ops.options.radius, orders.radial_nodes, orders.angular_degree);
  const auto s = basis::sample_basis(*ops.basis, grid);
  for (auto _ : state) benchmark::DoNotOptimize(operators::assemble_advection(s, grid));
}
BENCHMARK(BM_AdvectionAssembly)->Unit(benchmark::kMillisecond)->Iterations(1);

void BM_Eigensolve(benchmark::State& state) {
  const auto& ops = shared_ops();
  for (auto _ : state) benchmark::DoNotOptimize(operators::solve_stokes_eigenproblem(ops.form_su, ops.mass));
}
BENCHMARK(BM_Eigensolve)->Unit(benchmark::kMillisecond);

void BM_GalerkinRhs(benchmark::State& state) {
  const auto& system = shared_system();
  const Vector g = random_state(system.size());
  for (auto _ : state) benchmark::DoNotOptimize(system.rhs(g));
  state.counters["nonzeros"] = static_cast<double>(system.nonzeros());
}
BENCHMARK(BM_GalerkinRhs)->Unit(benchmark::kMicrosecond);

void BM_Integrate(benchmark::State& state) {
  const auto& ops = shared_ops();
  const auto& system = shared_system();
  dynamics::SimulationConfig c;
  c.t_final = 0.1;
  c.cadence = 0.01;
  for (auto _ : state) benchmark::DoNotOptimize(dynamics::integrate(c, ops, system));
  state.counters["steps"] = 100;
}
BENCHMARK(BM_Integrate)->Unit(benchmark::kMillisecond);

void BM_GronwallHypothesis(benchmark::State& state) {
  gronwall::SampledTrajectory s;
  for (int k = 0; k < state.range(0); ++k) {
    s.t.push_back(k * 1e-3);
    s.y.push_back(std::exp(-k * 1e-3));
  }
  for (auto _ : state) benchmark::DoNotOptimize(gronwall::check_hypothesis(s, 1.0, 1.0));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GronwallHypothesis)->Range(1 << 10, 1 << 18)->Complexity(benchmark::oN);

}  // namespace

BENCHMARK_MAIN();
