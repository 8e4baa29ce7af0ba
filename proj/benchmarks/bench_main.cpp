#include <random>

#include <benchmark/benchmark.h>
#include <Eigen/Dense>

#include "dacomp/assimilation.hpp"
#include "dacomp/compression.hpp"
#include "dacomp/covariance.hpp"
#include "dacomp/shallow_water.hpp"

namespace {

using namespace dacomp;

CovarianceMatrix random_cov(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = gauss(rng);
  return CovarianceMatrix(a * a.transpose() / static_cast<double>(n) +
                          Eigen::MatrixXd::Identity(n, n));
}

AssimilationProblem problem_of(Eigen::Index state_dim, Eigen::Index obs_dim) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  AssimilationProblem p;
  p.background = Eigen::VectorXd::NullaryExpr(state_dim, [&] { return gauss(rng); });
  p.observation = Eigen::VectorXd::NullaryExpr(obs_dim, [&] { return gauss(rng); });
  p.background_cov = random_cov(state_dim, 1);
  p.observation_cov = random_cov(obs_dim, 2);
  p.op = ObservationOperator::from_matrix(
      Eigen::MatrixXd::NullaryExpr(obs_dim, state_dim, [&] { return gauss(rng); }));
  return p;
}

void BM_BlueAnalysis(benchmark::State& state) {
  const AssimilationProblem p = problem_of(state.range(0), state.range(0) / 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(blue_analysis(p));
  }
}
BENCHMARK(BM_BlueAnalysis)->Arg(200)->Arg(800);

void BM_BuildIc(benchmark::State& state) {
  const Eigen::Index m = state.range(0);
  const CovarianceMatrix r = random_cov(m, 3);
  const CovarianceMatrix hbht = random_cov(m, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_ic(hbht.entries(), r, m / 4));
  }
}
BENCHMARK(BM_BuildIc)->Arg(100)->Arg(200);

void BM_SoarCovariance(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const GridGeometry geom(n, n);
  const SoarKernelSpec spec = SoarKernelSpec::homogeneous(4.0, 0.04, n * n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_soar_covariance(geom, spec));
  }
}
BENCHMARK(BM_SoarCovariance)->Arg(10)->Arg(20);

void BM_ShallowWaterStep(benchmark::State& state) {
  const SwConfig cfg;
  ShallowWaterState s = initial_state(cfg);
  for (auto _ : state) {
    s = step(s, cfg);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_ShallowWaterStep);

void BM_ReducedAnalysis(benchmark::State& state) {
  const Eigen::Index q = state.range(0);
  AssimilationProblem p = problem_of(800, 200);
  const Eigen::MatrixXd hbht = *p.op.linear * p.background_cov.entries() *
                               p.op.linear->transpose();
  const ProjectionOperator proj = build_ic(hbht, p.observation_cov, q);
  for (auto _ : state) {
    const ReducedProblem red = reduce_problem(p, proj);
    benchmark::DoNotOptimize(blue_analysis(red.reduced));
  }
}
BENCHMARK(BM_ReducedAnalysis)->Arg(29)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
