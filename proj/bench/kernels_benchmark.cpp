// Serial references against the OpenMP kernels on synthetic snapshot matrices.
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "koopest/basis.hpp"
#include "koopest/kernels.hpp"
#include "koopest/rng.hpp"
#include "koopest/sde_models.hpp"

using namespace koopest;

namespace {

struct Fixture {
  Matrix psi_x, psi_y, k;
  std::vector<double> w;
};

Fixture make_fixture(Eigen::Index n, Eigen::Index t) {
  Rng rng(11);
  std::vector<double> xs(static_cast<std::size_t>(t) + 1);
  for (auto& x : xs) x = 0.1 + 0.05 * rng.normal();
  const auto basis = BasisSet::gaussian_rbf(make_rbf_centers(xs, static_cast<int>(n)));
  Fixture f;
  const std::span<const double> all(xs);
  f.psi_x = eval_matrix(basis, all.first(static_cast<std::size_t>(t)), 0);
  f.psi_y = eval_matrix(basis, all.subspan(1), 0);
  f.k = kernels::gram(f.psi_y) * 0.5;
  f.w.resize(static_cast<std::size_t>(t));
  for (auto& v : f.w) v = 1.0 + 0.1 * rng.normal();
  return f;
}

const Fixture& fixture(Eigen::Index n, Eigen::Index t) {
  static std::map<std::pair<Eigen::Index, Eigen::Index>, Fixture> cache;
  auto it = cache.find({n, t});
  if (it == cache.end()) it = cache.emplace(std::pair{n, t}, make_fixture(n, t)).first;
  return it->second;
}

void counters(benchmark::State& s) {
  s.SetItemsProcessed(s.iterations() * s.range(1));
  s.counters["threads"] = omp_get_max_threads();
}

template <bool Parallel>
void BM_cross(benchmark::State& s) {
  const auto& f = fixture(s.range(0), s.range(1));
  for (auto _ : s) {
    Matrix m = Parallel ? kernels::weighted_cross(f.psi_y, f.psi_x, f.w)
                        : kernels::serial::weighted_cross(f.psi_y, f.psi_x, f.w);
    benchmark::DoNotOptimize(m.data());
  }
  counters(s);
}

template <bool Parallel>
void BM_gram(benchmark::State& s) {
  const auto& f = fixture(s.range(0), s.range(1));
  for (auto _ : s) {
    Matrix m = Parallel ? kernels::gram(f.psi_x) : kernels::serial::gram(f.psi_x);
    benchmark::DoNotOptimize(m.data());
  }
  counters(s);
}

template <bool Parallel>
void BM_residual_ss(benchmark::State& s) {
  const auto& f = fixture(s.range(0), s.range(1));
  for (auto _ : s) {
    double v = Parallel ? kernels::residual_sum_squares(f.k, f.psi_x, f.psi_y)
                        : kernels::serial::residual_sum_squares(f.k, f.psi_x, f.psi_y);
    benchmark::DoNotOptimize(v);
  }
  counters(s);
}

template <bool Parallel>
void BM_residual_cov(benchmark::State& s) {
  const auto& f = fixture(s.range(0), s.range(1));
  for (auto _ : s) {
    Matrix m = Parallel ? kernels::residual_covariance(f.k, f.psi_x, f.psi_y)
                        : kernels::serial::residual_covariance(f.k, f.psi_x, f.psi_y);
    benchmark::DoNotOptimize(m.data());
  }
  counters(s);
}

// Path ensemble: one thread against the default team.
template <bool Parallel>
void BM_simulate(benchmark::State& s) {
  SimConfig c;
  c.theta = Vector{{0.2, 0.08, 0.03}};
  c.t_step = 1.0 / 12.0;
  c.n_points = static_cast<std::size_t>(s.range(1));
  c.n_paths = static_cast<std::size_t>(s.range(0));
  c.x0 = 0.08;
  c.seed = 2024;
  c.scheme = Scheme::Milstein;
  c.internal_dt = c.t_step / 8.0;
  const auto model = SdeModel::ornstein_uhlenbeck();
  const int saved = omp_get_max_threads();
  if (!Parallel) omp_set_num_threads(1);
  for (auto _ : s) {
    auto d = simulate_snapshots(model, c);
    benchmark::DoNotOptimize(d.x.data());
  }
  omp_set_num_threads(saved);
  s.SetItemsProcessed(s.iterations() * s.range(0) * s.range(1));
}

void sizes(benchmark::internal::Benchmark* b) {
  for (long n : {5, 10, 20})
    for (long t : {1L << 12, 1L << 16, 1L << 20}) b->Args({n, t});
  b->Unit(benchmark::kMicrosecond);
}

}  // namespace

BENCHMARK(BM_cross<false>)->Name("weighted_cross/serial")->Apply(sizes);
BENCHMARK(BM_cross<true>)->Name("weighted_cross/omp")->Apply(sizes);
BENCHMARK(BM_gram<false>)->Name("gram/serial")->Apply(sizes);
BENCHMARK(BM_gram<true>)->Name("gram/omp")->Apply(sizes);
BENCHMARK(BM_residual_ss<false>)->Name("residual_sum_squares/serial")->Apply(sizes);
BENCHMARK(BM_residual_ss<true>)->Name("residual_sum_squares/omp")->Apply(sizes);
BENCHMARK(BM_residual_cov<false>)->Name("residual_covariance/serial")->Apply(sizes);
BENCHMARK(BM_residual_cov<true>)->Name("residual_covariance/omp")->Apply(sizes);
BENCHMARK(BM_simulate<false>)->Name("simulate/1thread")->Args({64, 2000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate<true>)->Name("simulate/omp")->Args({64, 2000})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
