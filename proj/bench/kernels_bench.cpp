// Serial reference vs OpenMP kernels. Thread count follows OMP_NUM_THREADS.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "fpx/kernels.hpp"
#include "oracles.hpp"

using namespace fpx;

namespace {

BeliefGrid belief(int side) { return oracle::random_belief(side, side, 0.4, 0.15, 3, 0.5); }

std::vector<std::vector<Pose>> queries(int side, int count) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, side * 0.5), yaw(-kPi, kPi);
  std::vector<std::vector<Pose>> q(count);
  for (auto& path : q) {
    for (int i = 0; i < 4; ++i) path.push_back({u(gen), u(gen), yaw(gen)});
  }
  return q;
}

struct Mixture {
  int n, d, k;
  std::vector<double> x, log_const, mean, precision, resp;
};

Mixture mixture(int n, int d, int k) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd(0, 3);
  std::uniform_real_distribution<double> p(0.2, 2);
  Mixture m{n, d, k, std::vector<double>(static_cast<std::size_t>(n) * d), std::vector<double>(k),
            std::vector<double>(static_cast<std::size_t>(k) * d), std::vector<double>(static_cast<std::size_t>(k) * d),
            std::vector<double>(static_cast<std::size_t>(n) * k)};
  for (double& v : m.x) v = nd(gen);
  for (double& v : m.mean) v = nd(gen);
  for (double& v : m.precision) v = p(gen);
  const kernels::DiagComponents c{k, d, m.log_const, m.mean, m.precision};
  kernels::serial::diag_estep(m.x, n, c, m.resp);
  return m;
}

template <bool Parallel>
void frontier_scan(benchmark::State& state) {
  const auto b = belief(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto f = Parallel ? kernels::omp::frontier_cells(b.geometry(), b.cells())
                      : kernels::serial::frontier_cells(b.geometry(), b.cells());
    benchmark::DoNotOptimize(f.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(b.size()));
}

template <bool Parallel>
void predicted_gains(benchmark::State& state) {
  const int side = 128;
  const auto b = belief(side);
  const auto q = queries(side, static_cast<int>(state.range(0)));
  const SensorModel s{5.0, kTwoPi, 360};
  std::vector<double> out(q.size());
  for (auto _ : state) {
    if (Parallel) {
      kernels::omp::predicted_gains(b, s, q, out);
    } else {
      kernels::serial::predicted_gains(b, s, q, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void diag_estep(benchmark::State& state) {
  auto m = mixture(static_cast<int>(state.range(0)), 2, 16);
  const kernels::DiagComponents c{m.k, m.d, m.log_const, m.mean, m.precision};
  for (auto _ : state) {
    const auto r = kernels::diag_estep(Parallel ? kernels::Backend::OpenMP : kernels::Backend::Serial, m.x, m.n, c,
                                       m.resp);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void diag_stats(benchmark::State& state) {
  const auto m = mixture(static_cast<int>(state.range(0)), 2, 16);
  for (auto _ : state) {
    auto s = kernels::diag_stats(Parallel ? kernels::Backend::OpenMP : kernels::Backend::Serial, m.x, m.n, m.d,
                                 m.resp, m.k);
    benchmark::DoNotOptimize(s.mean.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(frontier_scan<false>)->Name("frontier_scan/serial")->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(frontier_scan<true>)->Name("frontier_scan/omp")->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(predicted_gains<false>)->Name("predicted_gains/serial")->Arg(64)->Arg(512);
BENCHMARK(predicted_gains<true>)->Name("predicted_gains/omp")->Arg(64)->Arg(512);
BENCHMARK(diag_estep<false>)->Name("diag_estep/serial")->Arg(1000)->Arg(100000);
BENCHMARK(diag_estep<true>)->Name("diag_estep/omp")->Arg(1000)->Arg(100000);
BENCHMARK(diag_stats<false>)->Name("diag_stats/serial")->Arg(1000)->Arg(100000);
BENCHMARK(diag_stats<true>)->Name("diag_stats/omp")->Arg(1000)->Arg(100000);

BENCHMARK_MAIN();
