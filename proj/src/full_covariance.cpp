#include "fpx/full_covariance.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <boost/math/special_functions/digamma.hpp>

#include "fpx/common.hpp"
#include "fpx/kmeans.hpp"

namespace fpx {

FullCovarianceFit fit_full_covariance(std::span<const double> data, int dim, int components, int iterations,
                                      std::uint64_t seed) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  using boost::math::digamma;

  const int d = dim;
  if (d < 1 || data.empty() || data.size() % static_cast<std::size_t>(d) != 0) {
    throw InputError("full-covariance fit needs non-empty n x dim data");
  }
  const int n = static_cast<int>(data.size() / static_cast<std::size_t>(d));
  const int k_max = std::clamp(components, 1, n);
  const double gamma = 1.0;
  const double beta0 = 1.0;
  const double nu0 = static_cast<double>(d);
  const double log2pi = std::log(kTwoPi);

  VectorXd m0 = VectorXd::Zero(d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) m0[j] += data[static_cast<std::size_t>(i) * d + j];
  }
  m0 /= n;
  MatrixXd w0_inv = MatrixXd::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      const double diff = data[static_cast<std::size_t>(i) * d + j] - m0[j];
      w0_inv(j, j) += diff * diff;
    }
  }
  w0_inv *= nu0 / n;
  for (int j = 0; j < d; ++j) w0_inv(j, j) = std::max(w0_inv(j, j), 1e-4 * nu0);

  // Hard initial assignment from k-means++ seeds.
  const std::vector<double> centers = kmeanspp_seed(data, n, d, k_max, seed);
  const std::vector<int> label = nearest_centers(data, n, d, centers);
  std::vector<double> resp(static_cast<std::size_t>(n) * k_max, 0.0);
  for (int i = 0; i < n; ++i) resp[static_cast<std::size_t>(i) * k_max + label[i]] = 1.0;

  std::vector<double> g1(k_max), g2(k_max), beta(k_max), nu(k_max), log_det_w(k_max);
  std::vector<VectorXd> m(k_max, VectorXd::Zero(d));
  std::vector<MatrixXd> w(k_max, MatrixXd::Identity(d, d));
  std::vector<double> nk(k_max);
  std::vector<double> xbar(static_cast<std::size_t>(k_max) * d);
  std::vector<double> scatter(static_cast<std::size_t>(k_max) * d * d);

  auto m_step = [&] {
    std::fill(nk.begin(), nk.end(), 0.0);
    std::fill(xbar.begin(), xbar.end(), 0.0);
    std::fill(scatter.begin(), scatter.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      const double* xi = data.data() + static_cast<std::size_t>(i) * d;
      for (int k = 0; k < k_max; ++k) {
        const double r = resp[static_cast<std::size_t>(i) * k_max + k];
        nk[k] += r;
        double* xb = xbar.data() + static_cast<std::size_t>(k) * d;
        for (int j = 0; j < d; ++j) xb[j] += r * xi[j];
      }
    }
    for (int k = 0; k < k_max; ++k) {
      double* xb = xbar.data() + static_cast<std::size_t>(k) * d;
      for (int j = 0; j < d; ++j) xb[j] = nk[k] > 1e-300 ? xb[j] / nk[k] : 0.0;
    }
    std::vector<double> diff(d);
    for (int i = 0; i < n; ++i) {
      const double* xi = data.data() + static_cast<std::size_t>(i) * d;
      for (int k = 0; k < k_max; ++k) {
        const double r = resp[static_cast<std::size_t>(i) * k_max + k];
        const double* xb = xbar.data() + static_cast<std::size_t>(k) * d;
        double* s = scatter.data() + static_cast<std::size_t>(k) * d * d;
        for (int a = 0; a < d; ++a) diff[a] = xi[a] - xb[a];
        for (int a = 0; a < d; ++a) {
          const double ra = r * diff[a];
          for (int b = 0; b < d; ++b) s[a * d + b] += ra * diff[b];
        }
      }
    }
    double tail = 0.0;
    for (int k = k_max - 1; k >= 0; --k) {
      g1[k] = 1.0 + nk[k];
      g2[k] = gamma + tail;
      tail += nk[k];
      beta[k] = beta0 + nk[k];
      nu[k] = nu0 + nk[k];
      const Eigen::Map<const VectorXd> xb(xbar.data() + static_cast<std::size_t>(k) * d, d);
      const Eigen::Map<const MatrixXd> s(scatter.data() + static_cast<std::size_t>(k) * d * d, d, d);
      m[k] = (beta0 * m0 + nk[k] * xb) / beta[k];
      const VectorXd dm = xb - m0;
      const MatrixXd w_inv = w0_inv + s + (beta0 * nk[k] / beta[k]) * dm * dm.transpose();
      const Eigen::LLT<MatrixXd> llt(w_inv);
      w[k] = llt.solve(MatrixXd::Identity(d, d));
      log_det_w[k] = -2.0 * llt.matrixLLT().diagonal().array().log().sum();
    }
  };

  m_step();
  std::vector<double> log_const(k_max);
  std::vector<double> diff(d);
  for (int it = 0; it < iterations; ++it) {
    double acc = 0.0;
    for (int k = 0; k < k_max; ++k) {
      double log_v = 0.0;
      double log_1mv = 0.0;
      if (k < k_max - 1) {
        const double dsum = digamma(g1[k] + g2[k]);
        log_v = digamma(g1[k]) - dsum;
        log_1mv = digamma(g2[k]) - dsum;
      }
      double e_log_det = d * std::log(2.0) + log_det_w[k];
      for (int j = 0; j < d; ++j) e_log_det += digamma(0.5 * (nu[k] - j));
      log_const[k] = log_v + acc + 0.5 * e_log_det - 0.5 * d * log2pi - 0.5 * d / beta[k];
      acc += log_1mv;
    }
    for (int i = 0; i < n; ++i) {
      const double* xi = data.data() + static_cast<std::size_t>(i) * d;
      double* ri = resp.data() + static_cast<std::size_t>(i) * k_max;
      double mx = -kInf;
      for (int k = 0; k < k_max; ++k) {
        const double* wk = w[k].data();
        for (int a = 0; a < d; ++a) diff[a] = xi[a] - m[k][a];
        double q = 0.0;
        for (int a = 0; a < d; ++a) {
          double row = 0.0;
          for (int b = 0; b < d; ++b) row += wk[a * d + b] * diff[b];
          q += diff[a] * row;
        }
        ri[k] = log_const[k] - 0.5 * nu[k] * q;
        mx = std::max(mx, ri[k]);
      }
      double sum = 0.0;
      for (int k = 0; k < k_max; ++k) sum += std::exp(ri[k] - mx);
      const double lse = mx + std::log(sum);
      for (int k = 0; k < k_max; ++k) ri[k] = std::exp(ri[k] - lse);
    }
    m_step();
  }

  FullCovarianceFit fit;
  fit.dim = d;
  fit.components = k_max;
  fit.iterations = iterations;
  fit.weights.resize(k_max);
  double remaining = 1.0;
  for (int k = 0; k < k_max; ++k) {
    const double ev = k < k_max - 1 ? g1[k] / (g1[k] + g2[k]) : 1.0;
    fit.weights[k] = remaining * ev;
    remaining *= 1.0 - ev;
  }
  for (int k = 0; k < k_max; ++k) {
    for (int j = 0; j < d; ++j) fit.means.push_back(m[k][j]);
    const MatrixXd cov = (w[k] * nu[k]).inverse();
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) fit.covariances.push_back(cov(a, b));
    }
  }
  return fit;
}

}  // namespace fpx
