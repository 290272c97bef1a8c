#include "fpx/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "fpx/rng.hpp"

namespace fpx {

namespace {

double sq_dist(const double* a, const double* b, int d) {
  double s = 0.0;
  for (int j = 0; j < d; ++j) {
    const double diff = a[j] - b[j];
    s += diff * diff;
  }
  return s;
}

}  // namespace

std::vector<double> kmeanspp_seed(std::span<const double> x, int n, int d, int k, std::uint64_t seed) {
  if (k < 1 || k > n) throw InputError("k-means++ needs 1 <= k <= n");
  Rng rng(seed);
  std::vector<double> centers;
  centers.reserve(static_cast<std::size_t>(k) * d);
  std::vector<bool> chosen(n, false);

  auto take = [&](int i) {
    chosen[i] = true;
    const double* p = x.data() + static_cast<std::size_t>(i) * d;
    centers.insert(centers.end(), p, p + d);
  };
  take(static_cast<int>(rng.index(static_cast<std::uint64_t>(n))));

  std::vector<double> d2(n);
  for (int i = 0; i < n; ++i) d2[i] = sq_dist(x.data() + static_cast<std::size_t>(i) * d, centers.data(), d);

  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += d2[i];
    int pick = -1;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (int i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        pick = i;
        u -= d2[i];
        if (u < 0.0) break;
      }
    }
    if (pick < 0) {
      // Every point coincides with a center: take the first point not yet used.
      for (int i = 0; i < n && pick < 0; ++i) {
        if (!chosen[i]) pick = i;
      }
    }
    take(pick);
    const double* cp = centers.data() + static_cast<std::size_t>(c) * d;
    for (int i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(x.data() + static_cast<std::size_t>(i) * d, cp, d));
  }
  return centers;
}

std::vector<int> nearest_centers(std::span<const double> x, int n, int d, std::span<const double> centers) {
  const int k = static_cast<int>(centers.size() / static_cast<std::size_t>(d));
  std::vector<int> out(n, 0);
  for (int i = 0; i < n; ++i) {
    const double* p = x.data() + static_cast<std::size_t>(i) * d;
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      const double s = sq_dist(p, centers.data() + static_cast<std::size_t>(c) * d, d);
      if (s < best) {
        best = s;
        out[i] = c;
      }
    }
  }
  return out;
}

int KMeansResult::nearest(Vec2 p) const {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double dx = p.x - centroids[c].x;
    const double dy = p.y - centroids[c].y;
    const double s = dx * dx + dy * dy;
    if (s < best_d) {
      best_d = s;
      best = static_cast<int>(c);
    }
  }
  return best;
}

KMeansResult fit_kmeans(std::span<const Vec2> points, int k, std::uint64_t seed, int max_iterations) {
  const int n = static_cast<int>(points.size());
  if (k < 1) throw InputError("k-means needs k >= 1");
  if (k > n) throw InputError("k-means needs k <= number of points (k=" + std::to_string(k) +
                              ", n=" + std::to_string(n) + ")");
  std::vector<double> flat;
  flat.reserve(points.size() * 2);
  for (const auto& p : points) {
    flat.push_back(p.x);
    flat.push_back(p.y);
  }
  std::vector<double> centers = kmeanspp_seed(flat, n, 2, k, seed);
  std::vector<int> assign = nearest_centers(flat, n, 2, centers);

  KMeansResult res;
  for (int it = 1; it <= max_iterations; ++it) {
    res.iterations = it;
    std::vector<double> sum(static_cast<std::size_t>(k) * 2, 0.0);
    std::vector<int> count(k, 0);
    for (int i = 0; i < n; ++i) {
      sum[2 * assign[i]] += flat[2 * i];
      sum[2 * assign[i] + 1] += flat[2 * i + 1];
      ++count[assign[i]];
    }
    for (int c = 0; c < k; ++c) {
      // Empty clusters keep their previous centroid.
      if (count[c] == 0) continue;
      centers[2 * c] = sum[2 * c] / count[c];
      centers[2 * c + 1] = sum[2 * c + 1] / count[c];
    }
    std::vector<int> next = nearest_centers(flat, n, 2, centers);
    if (next == assign) break;
    assign = std::move(next);
  }

  res.centroids.resize(k);
  res.sizes.assign(k, 0);
  for (int c = 0; c < k; ++c) res.centroids[c] = {centers[2 * c], centers[2 * c + 1]};
  for (int i = 0; i < n; ++i) {
    ++res.sizes[assign[i]];
    res.distortion += sq_dist(&flat[2 * i], &centers[2 * assign[i]], 2);
  }
  res.assignment = std::move(assign);
  return res;
}

std::vector<double> hard_coherence(const KMeansResult& km, int cluster) {
  std::vector<double> out(km.assignment.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = km.assignment[i] == cluster ? 1.0 : 0.0;
  return out;
}

}  // namespace fpx
