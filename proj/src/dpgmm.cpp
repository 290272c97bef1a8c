#include "fpx/dpgmm.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "fpx/kmeans.hpp"
#include "fpx/rng.hpp"

namespace fpx {

namespace {

using boost::math::digamma;
using boost::math::lgamma;

const double kLog2Pi = std::log(kTwoPi);

// Variational posterior of the truncated stick-breaking mixture.
//   q(v_k)         = Beta(g1_k, g2_k), k < K-1 (v_{K-1} = 1)
//   q(mu_kj, l_kj) = N(mu | m_kj, 1 / (beta_k l_kj)) Gamma(l | a_k, b_kj)
struct Posterior {
  int k = 0;
  int d = 0;
  std::vector<double> g1, g2, beta, a, m, b;
};

struct Prior {
  double gamma = 1.0;
  double beta0 = 1.0;
  double a0 = 1.0;
  std::vector<double> m0, b0;
};

struct Expectations {
  std::vector<double> log_pi;      // E[ln pi_k]
  std::vector<double> log_v;       // E[ln v_k]
  std::vector<double> log_1mv;     // E[ln (1 - v_k)]
  std::vector<double> log_lambda;  // E[ln l_kj]
  std::vector<double> lambda;      // E[l_kj]
};

Expectations expectations(const Posterior& q) {
  Expectations e;
  e.log_pi.assign(q.k, 0.0);
  e.log_v.assign(q.k, 0.0);
  e.log_1mv.assign(q.k, 0.0);
  double acc = 0.0;
  for (int k = 0; k < q.k; ++k) {
    if (k < q.k - 1) {
      const double dsum = digamma(q.g1[k] + q.g2[k]);
      e.log_v[k] = digamma(q.g1[k]) - dsum;
      e.log_1mv[k] = digamma(q.g2[k]) - dsum;
    }
    e.log_pi[k] = e.log_v[k] + acc;
    acc += e.log_1mv[k];
  }
  const std::size_t kd = static_cast<std::size_t>(q.k) * q.d;
  e.log_lambda.resize(kd);
  e.lambda.resize(kd);
  for (int k = 0; k < q.k; ++k) {
    const double dig = digamma(q.a[k]);
    for (int j = 0; j < q.d; ++j) {
      const std::size_t i = static_cast<std::size_t>(k) * q.d + j;
      e.log_lambda[i] = dig - std::log(q.b[i]);
      e.lambda[i] = q.a[k] / q.b[i];
    }
  }
  return e;
}

void m_step(const kernels::DiagStats& s, const Prior& p, Posterior& q) {
  double tail = 0.0;
  for (int k = q.k - 1; k >= 0; --k) {
    const double nk = s.count[k];
    q.g1[k] = 1.0 + nk;
    q.g2[k] = p.gamma + tail;
    tail += nk;
    q.beta[k] = p.beta0 + nk;
    q.a[k] = p.a0 + 0.5 * nk;
    for (int j = 0; j < q.d; ++j) {
      const std::size_t i = static_cast<std::size_t>(k) * q.d + j;
      const double diff = s.mean[i] - p.m0[j];
      q.m[i] = (p.beta0 * p.m0[j] + nk * s.mean[i]) / q.beta[k];
      q.b[i] = p.b0[j] + 0.5 * (nk * s.variance[i] + p.beta0 * nk / q.beta[k] * diff * diff);
    }
  }
}

// Evidence lower bound of the current (r, q) state. `neg_entropy` is sum r ln r of the
// responsibilities the statistics were computed from.
double elbo(const kernels::DiagStats& s, double neg_entropy, const Prior& p, const Posterior& q) {
  const Expectations e = expectations(q);
  double total = -neg_entropy;
  const double lgamma_a0 = lgamma(p.a0);
  for (int k = 0; k < q.k; ++k) {
    const double nk = s.count[k];
    total += nk * e.log_pi[k];
    const double lgamma_ak = lgamma(q.a[k]);
    for (int j = 0; j < q.d; ++j) {
      const std::size_t i = static_cast<std::size_t>(k) * q.d + j;
      const double el = e.log_lambda[i];
      const double l = e.lambda[i];
      const double dm = s.mean[i] - q.m[i];
      // E[ln p(x | z, mu, l)]
      total += nk * (0.5 * el - 0.5 * kLog2Pi) - 0.5 * l * nk * (s.variance[i] + dm * dm) - 0.5 * nk / q.beta[k];
      // E[ln p(mu, l)]
      const double dm0 = q.m[i] - p.m0[j];
      total += 0.5 * std::log(p.beta0) - 0.5 * kLog2Pi + 0.5 * el - 0.5 * p.beta0 * (l * dm0 * dm0 + 1.0 / q.beta[k]);
      total += p.a0 * std::log(p.b0[j]) - lgamma_a0 + (p.a0 - 1.0) * el - p.b0[j] * l;
      // -E[ln q(mu, l)]
      total -= 0.5 * std::log(q.beta[k]) - 0.5 * kLog2Pi + 0.5 * el - 0.5;
      total -= q.a[k] * std::log(q.b[i]) - lgamma_ak + (q.a[k] - 1.0) * el - q.a[k];
    }
    if (k < q.k - 1) {
      // E[ln p(v)] with Beta(1, gamma), and -E[ln q(v)].
      total += std::log(p.gamma) + (p.gamma - 1.0) * e.log_1mv[k];
      total -= lgamma(q.g1[k] + q.g2[k]) - lgamma(q.g1[k]) - lgamma(q.g2[k]) + (q.g1[k] - 1.0) * e.log_v[k] +
               (q.g2[k] - 1.0) * e.log_1mv[k];
    }
  }
  return total;
}

struct ComponentTerms {
  std::vector<double> log_const, precision;
};

ComponentTerms e_step_terms(const Posterior& q) {
  const Expectations e = expectations(q);
  ComponentTerms t;
  t.log_const.resize(q.k);
  t.precision = e.lambda;
  for (int k = 0; k < q.k; ++k) {
    double c = e.log_pi[k] - 0.5 * q.d / q.beta[k];
    for (int j = 0; j < q.d; ++j) {
      c += 0.5 * e.log_lambda[static_cast<std::size_t>(k) * q.d + j] - 0.5 * kLog2Pi;
    }
    t.log_const[k] = c;
  }
  return t;
}

// Initial centers: the previous model's active components (heaviest first) when the warm-start
// rule allows it, k-means++ seeding otherwise.
std::vector<double> initial_centers(std::span<const double> x, int n, int d, int k, const MixtureModel* warm,
                                    std::uint64_t seed, const DpgmmOptions& opt, bool& warm_used) {
  warm_used = false;
  if (warm && warm->dim == d && warm->n_points > 0 && warm->components > 0) {
    const double prev = static_cast<double>(warm->n_points);
    if (std::abs(static_cast<double>(n) - prev) / prev < opt.warm_start_ratio) {
      std::vector<int> order;
      for (int c = 0; c < warm->components; ++c) {
        if (warm->active[c]) order.push_back(c);
      }
      std::stable_sort(order.begin(), order.end(),
                       [&](int lhs, int rhs) { return warm->weights[lhs] > warm->weights[rhs]; });
      if (!order.empty()) {
        if (static_cast<int>(order.size()) > k) order.resize(k);
        std::vector<double> centers;
        for (int c : order) {
          auto m = warm->mean(c);
          centers.insert(centers.end(), m.begin(), m.end());
        }
        warm_used = true;
        return centers;
      }
    }
  }
  return kmeanspp_seed(x, n, d, k, seed);
}

}  // namespace

int MixtureModel::active_count() const {
  return static_cast<int>(std::count(active.begin(), active.end(), true));
}

double MixtureModel::log_density(int k, std::span<const double> x) const {
  double lp = 0.0;
  for (int j = 0; j < dim; ++j) {
    const double v = variances[static_cast<std::size_t>(k) * dim + j];
    const double diff = x[j] - means[static_cast<std::size_t>(k) * dim + j];
    lp += -0.5 * (kLog2Pi + std::log(v)) - 0.5 * diff * diff / v;
  }
  return lp;
}

DpgmmFit fit_dpgmm(std::span<const double> data, int dim, const MixtureModel* warm_start, std::uint64_t seed,
                   const DpgmmOptions& opt) {
  if (dim < 1) throw InputError("dimension must be >= 1");
  if (data.empty()) throw InputError("cannot fit a mixture to zero points");
  if (data.size() % static_cast<std::size_t>(dim) != 0) throw InputError("data size is not a multiple of dim");
  for (double v : data) {
    if (!std::isfinite(v)) throw InputError("non-finite coordinate in mixture input");
  }
  const int n = static_cast<int>(data.size() / static_cast<std::size_t>(dim));
  const int d = dim;
  int k_max = std::max(1, n / 2);
  if (opt.max_components > 0) k_max = std::min(opt.max_components, n);

  // Data-driven prior: mean prior at the data mean, per-axis variance prior at the data variance.
  Prior prior;
  prior.gamma = opt.concentration;
  prior.beta0 = opt.mean_precision;
  prior.a0 = 0.5 * opt.degrees_of_freedom;
  prior.m0.assign(d, 0.0);
  prior.b0.assign(d, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) prior.m0[j] += data[static_cast<std::size_t>(i) * d + j];
  }
  for (double& v : prior.m0) v /= n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      const double diff = data[static_cast<std::size_t>(i) * d + j] - prior.m0[j];
      prior.b0[j] += diff * diff;
    }
  }
  for (double& v : prior.b0) v = prior.a0 * std::max(v / n, opt.variance_floor);

  // Hard assignment to the initial centers, heaviest component first.
  bool warm_used = false;
  const std::vector<double> centers = initial_centers(data, n, d, k_max, warm_start, seed, opt, warm_used);
  const int n_centers = static_cast<int>(centers.size() / static_cast<std::size_t>(d));
  std::vector<int> label = nearest_centers(data, n, d, centers);
  std::vector<int> size(n_centers, 0);
  for (int l : label) ++size[l];
  std::vector<int> order(n_centers);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) { return size[lhs] > size[rhs]; });
  std::vector<int> rank(n_centers);
  for (int r = 0; r < n_centers; ++r) rank[order[r]] = r;

  const std::size_t nk = static_cast<std::size_t>(n) * k_max;
  std::vector<double> resp(nk, 0.0);
  for (int i = 0; i < n; ++i) resp[static_cast<std::size_t>(i) * k_max + rank[label[i]]] = 1.0;

  Posterior q;
  q.k = k_max;
  q.d = d;
  q.g1.assign(k_max, 1.0);
  q.g2.assign(k_max, 1.0);
  q.beta.assign(k_max, 1.0);
  q.a.assign(k_max, 1.0);
  q.m.assign(static_cast<std::size_t>(k_max) * d, 0.0);
  q.b.assign(static_cast<std::size_t>(k_max) * d, 1.0);

  MixtureModel model;
  model.dim = d;
  model.components = k_max;
  model.n_points = static_cast<std::size_t>(n);
  model.warm_started = warm_used;

  kernels::DiagStats stats = kernels::diag_stats(opt.backend, data, n, d, resp, k_max);
  m_step(stats, prior, q);
  double bound = elbo(stats, 0.0, prior, q);
  model.elbo_trace.push_back(bound);

  for (int it = 1; it <= opt.max_iterations; ++it) {
    const ComponentTerms terms = e_step_terms(q);
    const kernels::DiagComponents comps{k_max, d, terms.log_const, q.m, terms.precision};
    const kernels::EStepOutput es = kernels::diag_estep(opt.backend, data, n, comps, resp);
    stats = kernels::diag_stats(opt.backend, data, n, d, resp, k_max);
    m_step(stats, prior, q);
    const double next = elbo(stats, es.neg_entropy, prior, q);
    model.elbo_trace.push_back(next);
    model.iterations = it;
    const bool done = std::abs(next - bound) <= opt.tolerance * std::abs(bound);
    bound = next;
    if (done) {
      model.converged = true;
      break;
    }
  }

  // Expected stick-breaking weights; the last stick takes the remainder so they sum to one.
  model.weights.assign(k_max, 0.0);
  double remaining = 1.0;
  for (int k = 0; k < k_max; ++k) {
    const double ev = k < k_max - 1 ? q.g1[k] / (q.g1[k] + q.g2[k]) : 1.0;
    model.weights[k] = remaining * ev;
    remaining *= 1.0 - ev;
  }
  model.means = q.m;
  model.variances.resize(q.b.size());
  for (int k = 0; k < k_max; ++k) {
    for (int j = 0; j < d; ++j) {
      const std::size_t i = static_cast<std::size_t>(k) * d + j;
      model.variances[i] = std::max(q.b[i] / q.a[k], opt.variance_floor);
    }
  }
  // Expected stick weights of empty components are pure prior mass (about gamma / (N + gamma)
  // spread geometrically), so activity also requires the data to support the component.
  model.active.resize(k_max);
  for (int k = 0; k < k_max; ++k) {
    model.active[k] = model.weights[k] > opt.weight_floor && stats.count[k] > opt.weight_floor * n;
  }

  DpgmmFit fit;
  fit.model = std::move(model);
  fit.responsibilities = {n, k_max, std::move(resp)};
  return fit;
}

DpgmmFit fit_dpgmm(std::span<const Vec2> points, const MixtureModel* warm_start, std::uint64_t seed,
                   const DpgmmOptions& options) {
  std::vector<double> flat;
  flat.reserve(points.size() * 2);
  for (const auto& p : points) {
    flat.push_back(p.x);
    flat.push_back(p.y);
  }
  return fit_dpgmm(flat, 2, warm_start, seed, options);
}

std::vector<double> responsibility(const MixtureModel& model, Vec2 x) {
  const double xy[2] = {x.x, x.y};
  std::vector<double> out(model.components);
  double mx = -kInf;
  for (int k = 0; k < model.components; ++k) {
    out[k] = model.weights[k] > 0.0 ? std::log(model.weights[k]) + model.log_density(k, xy) : -kInf;
    mx = std::max(mx, out[k]);
  }
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : out) v /= sum;
  return out;
}

int allocate_component(const MixtureModel& model, const Pose& robot) {
  const double xy[2] = {robot.x, robot.y};
  int best = -1;
  double best_score = -kInf;
  for (int k = 0; k < model.components; ++k) {
    if (!model.active[k]) continue;
    const double s = std::log(model.weights[k]) + model.log_density(k, xy);
    if (best < 0 || s > best_score) {
      best = k;
      best_score = s;
    }
  }
  return best < 0 ? 0 : best;
}

void write_model(std::ostream& out, const MixtureModel& model) {
  const auto old = out.precision(17);
  out << "fpx-mixture 1\n" << model.components << ' ' << model.dim << '\n';
  for (int k = 0; k < model.components; ++k) {
    out << model.weights[k] << ' ' << (model.active[k] ? 1 : 0);
    for (double v : model.mean(k)) out << ' ' << v;
    for (double v : model.variance(k)) out << ' ' << v;
    out << '\n';
  }
  out.precision(old);
}

MixtureModel read_model(std::istream& in) {
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "fpx-mixture" || version != 1) {
    throw InputError("not an fpx-mixture version 1 record");
  }
  MixtureModel m;
  if (!(in >> m.components >> m.dim) || m.components < 0 || m.dim < 1) throw InputError("bad mixture header");
  m.weights.resize(m.components);
  m.active.resize(m.components);
  m.means.resize(static_cast<std::size_t>(m.components) * m.dim);
  m.variances.resize(m.means.size());
  for (int k = 0; k < m.components; ++k) {
    int act = 0;
    if (!(in >> m.weights[k] >> act)) throw InputError("bad mixture component " + std::to_string(k));
    m.active[k] = act != 0;
    for (int j = 0; j < m.dim; ++j) in >> m.means[static_cast<std::size_t>(k) * m.dim + j];
    for (int j = 0; j < m.dim; ++j) in >> m.variances[static_cast<std::size_t>(k) * m.dim + j];
    if (!in) throw InputError("bad mixture component " + std::to_string(k));
  }
  m.converged = true;
  return m;
}

}  // namespace fpx
