#include <random>

#include <benchmark/benchmark.h>

#include "kinlangevin/linalg.hpp"
#include "kinlangevin/rate_bounds.hpp"
#include "kinlangevin/sde_sim.hpp"

using namespace kinlangevin;

namespace {

Matrix random_spd(int d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n;
  Matrix g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = n(gen);
  return g * g.transpose() / d + Matrix::Identity(d, d);
}

void BM_Expm(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const Matrix m = -random_spd(d, 1);
  for (auto _ : state) benchmark::DoNotOptimize(expm(m, 1.0));
}
BENCHMARK(BM_Expm)->Arg(4)->Arg(16)->Arg(40);

void BM_SpdSqrt(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const Matrix m = random_spd(d, 2);
  for (auto _ : state) benchmark::DoNotOptimize(spd_sqrt(m));
}
BENCHMARK(BM_SpdSqrt)->Arg(2)->Arg(5)->Arg(20);

void BM_SpdSqrtDerivative(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const Matrix m = random_spd(d, 3);
  const Matrix e = random_spd(d, 4);
  for (auto _ : state) benchmark::DoNotOptimize(spd_sqrt_directional_derivative(m, e));
}
BENCHMARK(BM_SpdSqrtDerivative)->Arg(2)->Arg(5)->Arg(20);

// Per-particle-step cost of Euler-Maruyama.
void BM_SimulatorStep(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const bool hessian = state.range(1) != 0;
  Vector v = Vector::LinSpaced(d, 1.0, 3.0);
  const PotentialPtr pot = hessian ? perturbed_diagonal(v, 0.1) : quadratic_diagonal(v);
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.n_particles = 10000;
  cfg.seed = 1;
  const Simulator sim(pot, hessian ? FrictionSpec::hessian_sqrt(2.0) : FrictionSpec::constant_scalar(2.0), cfg);
  Ensemble e = Ensemble::from_point(Vector::Ones(d), Vector::Zero(d), cfg.n_particles);
  for (auto _ : state) sim.step(e);
  state.SetItemsProcessed(state.iterations() * cfg.n_particles);
}
BENCHMARK(BM_SimulatorStep)->Args({1, 0})->Args({1, 1})->Args({10, 0})->Args({10, 1});

void BM_LambdaDmsSup(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(lambda_dms_sup(2.0, 1.0));
}
BENCHMARK(BM_LambdaDmsSup);

}  // namespace

BENCHMARK_MAIN();
