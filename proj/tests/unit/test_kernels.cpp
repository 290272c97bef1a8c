#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <omp.h>

#include "fpx/kernels.hpp"
#include "oracles.hpp"

using namespace fpx;

namespace {

// Runs each check at several thread counts; the OpenMP kernels must not depend on it.
template <class F>
void for_thread_counts(F&& f) {
  const int saved = omp_get_max_threads();
  for (int t : {1, 2, 4, 7}) {
    omp_set_num_threads(t);
    f(t);
  }
  omp_set_num_threads(saved);
}

struct Mixture {
  int k, d;
  std::vector<double> log_const, mean, precision;
};

Mixture random_mixture(std::mt19937_64& gen, int k, int d) {
  std::uniform_real_distribution<double> u(-3, 3), p(0.2, 4);
  Mixture m{k, d, std::vector<double>(k), std::vector<double>(k * d), std::vector<double>(k * d)};
  for (double& x : m.log_const) x = u(gen);
  for (double& x : m.mean) x = u(gen);
  for (double& x : m.precision) x = p(gen);
  return m;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12 * (1.0 + std::abs(b[i]))) << i;
}

}  // namespace

TEST(Kernels, FrontierScanAgrees) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto b = oracle::random_belief(40 + static_cast<int>(seed) * 7, 33, 0.3, 0.2, seed);
    const auto ref = kernels::serial::frontier_cells(b.geometry(), b.cells());
    EXPECT_EQ(ref, oracle::frontiers(b));
    for_thread_counts([&](int t) { EXPECT_EQ(kernels::omp::frontier_cells(b.geometry(), b.cells()), ref) << t; });
  }
}

TEST(Kernels, PredictedGainsAgree) {
  std::mt19937_64 gen(2);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto b = oracle::random_belief(48, 48, 0.5, 0.1, seed, 0.5);
    const SensorModel s{5.0, kTwoPi, 360};
    std::uniform_real_distribution<double> u(0.0, 24.0), yaw(-kPi, kPi);
    std::vector<std::vector<Pose>> queries(60);
    for (auto& q : queries) {
      const int n = 1 + static_cast<int>(gen() % 5);
      for (int i = 0; i < n; ++i) q.push_back({u(gen), u(gen), yaw(gen)});
    }
    std::vector<double> ref(queries.size()), got(queries.size());
    kernels::serial::predicted_gains(b, s, queries, ref);
    kernels::GainScratch scratch(b.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
      EXPECT_EQ(ref[i], kernels::predicted_gain(b, s, queries[i], scratch));
    }
    for_thread_counts([&](int) {
      kernels::omp::predicted_gains(b, s, queries, got);
      EXPECT_EQ(got, ref);
    });
  }
}

TEST(Kernels, DiagEStepAgrees) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd(0, 2);
  for (int d : {1, 2, 5}) {
    const int n = 3001, k = 6;
    std::vector<double> x(static_cast<std::size_t>(n) * d);
    for (double& v : x) v = nd(gen);
    const auto m = random_mixture(gen, k, d);
    const kernels::DiagComponents c{k, d, m.log_const, m.mean, m.precision};
    std::vector<double> r_ref(static_cast<std::size_t>(n) * k), r(r_ref.size());
    const auto ref = kernels::serial::diag_estep(x, n, c, r_ref);
    for (int i = 0; i < n; ++i) {
      double s = 0;
      for (int j = 0; j < k; ++j) s += r_ref[static_cast<std::size_t>(i) * k + j];
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
    // Per-point work is identical; only the block-ordered reduction may differ from the serial sum.
    std::vector<double> r_one(r_ref.size());
    omp_set_num_threads(1);
    const auto one = kernels::omp::diag_estep(x, n, c, r_one);
    EXPECT_EQ(r_one, r_ref);
    EXPECT_NEAR(one.log_evidence, ref.log_evidence, 1e-12 * std::abs(ref.log_evidence));
    EXPECT_NEAR(one.neg_entropy, ref.neg_entropy, 1e-12 * std::abs(ref.neg_entropy));
    for_thread_counts([&](int t) {
      const auto got = kernels::omp::diag_estep(x, n, c, r);
      EXPECT_EQ(r, r_ref) << t;
      EXPECT_EQ(got.log_evidence, one.log_evidence) << t;
      EXPECT_EQ(got.neg_entropy, one.neg_entropy) << t;
    });
  }
}

TEST(Kernels, DiagStatsAgree) {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(0, 1);
  for (int d : {1, 3, 8}) {
    const int n = 2503, k = 5;
    std::vector<double> x(static_cast<std::size_t>(n) * d), resp(static_cast<std::size_t>(n) * k);
    for (double& v : x) v = 10 * u(gen);
    for (int i = 0; i < n; ++i) {
      double s = 0;
      for (int j = 0; j < k; ++j) s += resp[static_cast<std::size_t>(i) * k + j] = j == k - 1 ? 0.0 : u(gen);
      for (int j = 0; j < k; ++j) resp[static_cast<std::size_t>(i) * k + j] /= s;
    }
    const auto ref = kernels::serial::diag_stats(x, n, d, resp, k);
    // Direct weighted mean of component 0, dimension 0.
    double w = 0, wx = 0;
    for (int i = 0; i < n; ++i) {
      w += resp[static_cast<std::size_t>(i) * k];
      wx += resp[static_cast<std::size_t>(i) * k] * x[static_cast<std::size_t>(i) * d];
    }
    EXPECT_NEAR(ref.count[0], w, 1e-9);
    EXPECT_NEAR(ref.mean[0], wx / w, 1e-9);
    EXPECT_EQ(ref.count[k - 1], 0.0);
    omp_set_num_threads(1);
    const auto one = kernels::omp::diag_stats(x, n, d, resp, k);
    expect_close(one.count, ref.count);
    expect_close(one.mean, ref.mean);
    expect_close(one.variance, ref.variance);
    for_thread_counts([&](int t) {
      const auto got = kernels::omp::diag_stats(x, n, d, resp, k);
      EXPECT_EQ(got.count, one.count) << t;
      EXPECT_EQ(got.mean, one.mean) << t;
      EXPECT_EQ(got.variance, one.variance) << t;
    });
  }
}
