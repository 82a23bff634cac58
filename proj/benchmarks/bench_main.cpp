#include <benchmark/benchmark.h>

#include "moco/linalg.hpp"
#include "moco/rng.hpp"
#include "moco/solvers.hpp"
#include "moco/subproblem.hpp"

using namespace moco;

namespace {

Jacobian gaussian_jacobian(std::size_t d, std::size_t m, std::uint64_t seed) {
  RngStream rng(seed);
  Jacobian j(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m));
  for (Eigen::Index c = 0; c < j.cols(); ++c)
    for (Eigen::Index r = 0; r < j.rows(); ++r) j(r, c) = rng.normal();
  return j;
}

void BM_ProjectSimplex(benchmark::State& state) {
  RngStream rng(1);
  Vector v(state.range(0));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = 3.0 * rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(project_simplex(v));
}
BENCHMARK(BM_ProjectSimplex)->Arg(2)->Arg(10)->Arg(100);

void BM_SolveLambda(benchmark::State& state) {
  const Jacobian j =
      gaussian_jacobian(static_cast<std::size_t>(state.range(1)), static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(solve_lambda(j, 0.0));
}
BENCHMARK(BM_SolveLambda)->Args({2, 10})->Args({3, 10})->Args({10, 100});

void BM_MoCoUpdate(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const Jacobian h = gaussian_jacobian(d, m, 3);
  MoCoState s = MoCoState::initial(Vector::Zero(static_cast<Eigen::Index>(d)), h, Vector::Constant(m, 1e3));
  const StepValues steps{1e-3, 0.1, 0.1, 0.0};
  for (auto _ : state) {
    s = moco_update(s, h, steps, {}).state;
    benchmark::DoNotOptimize(s.x.data());
  }
}
BENCHMARK(BM_MoCoUpdate)->Args({2, 2})->Args({3, 10})->Args({10, 1000});

}  // namespace

BENCHMARK_MAIN();
