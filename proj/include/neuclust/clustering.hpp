#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "neuclust/linalg.hpp"

namespace neuclust::clustering {

struct Clustering {
  /// assignments[i] is the cluster of row i.
  std::vector<std::size_t> assignments;
  linalg::DenseMatrix centroids;
  double inertia = 0.0;
  std::size_t iterations_run = 0;
  bool converged = false;
  /// Inertia after each Lloyd iteration.
  std::vector<double> inertia_trace;

  std::size_t cluster_count() const noexcept { return centroids.rows(); }
};

/// Lloyd's algorithm with greedy k-means++ seeding over the rows of `contexts`.
/// Stops when no assignment changes or after `max_iterations` iterations.
/// Squared Euclidean distance, ties to the lower cluster id; an empty
/// cluster takes the point farthest from its current centroid.
Clustering kmeans(const linalg::DenseMatrix& contexts, std::size_t clusters,
                  std::size_t max_iterations, std::uint64_t seed);

/// Arms assigned to cluster `c`, ascending.
std::vector<std::size_t> cluster_members(const Clustering& clust, std::size_t c);

/// Within-cluster sum of squares for `contexts` under `assignments` and `centroids`.
double inertia(const linalg::DenseMatrix& contexts, const std::vector<std::size_t>& assignments,
               const linalg::DenseMatrix& centroids);

/// Best-of-`restarts` inertia for each requested cluster count.
std::vector<std::pair<std::size_t, double>> wcss_sweep(const linalg::DenseMatrix& contexts,
                                                       const std::vector<std::size_t>& cluster_counts,
                                                       std::size_t max_iterations,
                                                       std::uint64_t seed,
                                                       std::size_t restarts = 5);

}  // namespace neuclust::clustering
