#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fpx/common.hpp"

namespace fpx {

/// k-means++ D^2 seeding over row-major n x d data. Returns k x d centers.
std::vector<double> kmeanspp_seed(std::span<const double> x, int n, int d, int k, std::uint64_t seed);

/// Index of the nearest center for every point (squared Euclidean, lowest index on ties).
std::vector<int> nearest_centers(std::span<const double> x, int n, int d, std::span<const double> centers);

struct KMeansResult {
  std::vector<Vec2> centroids;
  std::vector<int> assignment;
  std::vector<int> sizes;
  double distortion = 0.0;  // sum of squared distances to the assigned centroid
  int iterations = 0;

  int nearest(Vec2 p) const;
};

/// Lloyd's algorithm with k-means++ seeding. Requires 1 <= k <= points.size().
KMeansResult fit_kmeans(std::span<const Vec2> points, int k, std::uint64_t seed, int max_iterations = 100);

/// Binary cluster coherence of the hard baseline: 1 for members of `cluster`, 0 elsewhere.
std::vector<double> hard_coherence(const KMeansResult& km, int cluster);

}  // namespace fpx
