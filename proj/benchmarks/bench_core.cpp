#include <random>

#include <benchmark/benchmark.h>

#include <concentrix/assignment.hpp>
#include <concentrix/dynamics.hpp>
#include <concentrix/montecarlo.hpp>
#include <concentrix/transport.hpp>

using namespace concentrix;

namespace {

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

void BM_SolveAssignment(benchmark::State& state) {
  const auto n = state.range(0);
  const Matrix a = gaussian_matrix(2, n, 1);
  const Matrix b = gaussian_matrix(2, n, 2);
  Matrix cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = (a.col(i) - b.col(j)).norm();
  for (auto _ : state) benchmark::DoNotOptimize(solve_assignment(cost).cost);
  state.SetComplexityN(n);
}
BENCHMARK(BM_SolveAssignment)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

void BM_SortedW1(benchmark::State& state) {
  const auto n = state.range(0);
  const Matrix a = gaussian_matrix(1, n, 3);
  const Matrix b = gaussian_matrix(1, n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(empirical_w1(a, b).value);
  state.SetComplexityN(n);
}
BENCHMARK(BM_SortedW1)->RangeMultiplier(4)->Range(256, 65536)->Complexity();

void BM_SimulateSlds(benchmark::State& state) {
  const auto n = state.range(0);
  const auto spec = SystemSpec::slds(RegionSpec({Predicate::ball(1.0), Predicate::catch_all()}, n),
                                     {Matrix::Identity(n, n), 0.5 * Matrix::Identity(n, n)});
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate(spec, Vector::Zero(n), 10000, ++seed).states.data());
  }
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_SimulateSlds)->Arg(1)->Arg(4)->Arg(16);

void BM_GaussianW2(benchmark::State& state) {
  const auto n = state.range(0);
  const Matrix x = gaussian_matrix(n, n, 5);
  const Matrix y = gaussian_matrix(n, n, 6);
  const Matrix s1 = x * x.transpose();
  const Matrix s2 = y * y.transpose();
  const Vector m1 = Vector::Zero(n);
  const Vector m2 = Vector::Ones(n);
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_w2(m1, s1, m2, s2));
}
BENCHMARK(BM_GaussianW2)->Arg(2)->Arg(8)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
