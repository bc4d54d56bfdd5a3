#include "neuclust/clustering.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "neuclust/error.hpp"

namespace neuclust::clustering {

using linalg::DenseMatrix;
using linalg::squared_distance;

namespace {

// Draws one non-chosen index with probability proportional to d2.
std::size_t draw_weighted(const std::vector<double>& d2, const std::vector<bool>& taken, double total,
                          std::mt19937_64& rng) {
  const std::size_t n = d2.size();
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (taken[i]) continue;
    acc += d2[i];
    if (acc > u && d2[i] > 0.0) return i;
  }
  // Rounding left u at the very end of the cumulative sum.
  for (std::size_t i = n; i-- > 0;)
    if (!taken[i] && d2[i] > 0.0) return i;
  return n;
}

// Greedy k-means++: each step draws 2 + floor(ln k) candidates and keeps
// the one that lowers the seeding potential most.
std::vector<std::size_t> seed_plus_plus(const DenseMatrix& x, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = x.rows();
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  std::vector<bool> taken(n, false);
  chosen.push_back(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  taken[chosen.back()] = true;

  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (chosen.size() < k) {
    const auto last = x.row(chosen.back());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(x.row(i), last));
      if (!taken[i]) total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t cand = draw_weighted(d2, taken, total, rng);
        double potential = 0.0;
        for (std::size_t i = 0; i < n; ++i) potential += std::min(d2[i], squared_distance(x.row(i), x.row(cand)));
        if (potential < best) {
          best = potential;
          pick = cand;
        }
      }
    } else {
      // Every remaining point duplicates a chosen center.
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i)
        if (!taken[i]) free.push_back(i);
      pick = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
    }
    chosen.push_back(pick);
    taken[pick] = true;
  }
  return chosen;
}

void assign(const DenseMatrix& x, const DenseMatrix& centroids, std::vector<std::size_t>& out) {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::size_t best = 0;
    double best_d = squared_distance(x.row(i), centroids.row(0));
    for (std::size_t c = 1; c < centroids.rows(); ++c) {
      const double d = squared_distance(x.row(i), centroids.row(c));
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    out[i] = best;
  }
}

void repair_empty(const DenseMatrix& x, const DenseMatrix& centroids,
                  std::vector<std::size_t>& assignments) {
  const std::size_t k = centroids.rows();
  std::vector<std::size_t> sizes(k, 0);
  for (auto a : assignments) ++sizes[a];
  for (std::size_t e = 0; e < k; ++e) {
    if (sizes[e] != 0) continue;
    std::size_t victim = x.rows();
    double worst = -1.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (sizes[assignments[i]] < 2) continue;
      const double d = squared_distance(x.row(i), centroids.row(assignments[i]));
      if (d > worst) {
        worst = d;
        victim = i;
      }
    }
    if (victim == x.rows()) throw InternalConsistencyError("kmeans: no point available to fill empty cluster");
    --sizes[assignments[victim]];
    assignments[victim] = e;
    sizes[e] = 1;
  }
}

void update_centroids(const DenseMatrix& x, const std::vector<std::size_t>& assignments,
                      DenseMatrix& centroids) {
  const std::size_t d = x.cols();
  std::vector<std::size_t> counts(centroids.rows(), 0);
  std::fill(centroids.data().begin(), centroids.data().end(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto c = centroids.row(assignments[i]);
    auto xi = x.row(i);
    for (std::size_t j = 0; j < d; ++j) c[j] += xi[j];
    ++counts[assignments[i]];
  }
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double inv = 1.0 / static_cast<double>(counts[c]);
    for (double& v : centroids.row(c)) v *= inv;
  }
}

}  // namespace

double inertia(const DenseMatrix& contexts, const std::vector<std::size_t>& assignments,
               const DenseMatrix& centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < contexts.rows(); ++i)
    s += squared_distance(contexts.row(i), centroids.row(assignments[i]));
  return s;
}

Clustering kmeans(const DenseMatrix& contexts, std::size_t k, std::size_t max_iterations,
                  std::uint64_t seed) {
  const std::size_t n = contexts.rows();
  if (k == 0) throw InvalidArgument("kmeans: cluster count must be >= 1");
  if (k > n)
    throw InvalidArgument("kmeans: cluster count " + std::to_string(k) + " exceeds point count " +
                          std::to_string(n));
  if (!contexts.all_finite()) throw InvalidArgument("kmeans: non-finite context");

  std::mt19937_64 rng(seed);
  Clustering out;
  out.centroids = DenseMatrix(k, contexts.cols());
  const auto seeds = seed_plus_plus(contexts, k, rng);
  for (std::size_t c = 0; c < k; ++c) {
    auto src = contexts.row(seeds[c]);
    std::copy(src.begin(), src.end(), out.centroids.row(c).begin());
  }

  std::vector<std::size_t> current(n, 0);
  std::vector<std::size_t> next(n, 0);
  assign(contexts, out.centroids, current);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    if (it > 0) {
      assign(contexts, out.centroids, next);
      if (next == current) {
        out.converged = true;
        break;
      }
      current.swap(next);
    }
    repair_empty(contexts, out.centroids, current);
    update_centroids(contexts, current, out.centroids);
    out.inertia_trace.push_back(inertia(contexts, current, out.centroids));
    ++out.iterations_run;
  }
  if (!out.converged && max_iterations > 0) {
    assign(contexts, out.centroids, next);
    out.converged = next == current;
  }
  if (max_iterations == 0) {
    repair_empty(contexts, out.centroids, current);
    update_centroids(contexts, current, out.centroids);
  }
  out.assignments = std::move(current);
  out.inertia = inertia(contexts, out.assignments, out.centroids);
  return out;
}

std::vector<std::size_t> cluster_members(const Clustering& clust, std::size_t c) {
  if (c >= clust.cluster_count())
    throw InvalidArgument("cluster_members: cluster id " + std::to_string(c) + " out of range");
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < clust.assignments.size(); ++i)
    if (clust.assignments[i] == c) members.push_back(i);
  return members;
}

std::vector<std::pair<std::size_t, double>> wcss_sweep(const DenseMatrix& contexts,
                                                       const std::vector<std::size_t>& cluster_counts,
                                                       std::size_t max_iterations,
                                                       std::uint64_t seed, std::size_t restarts) {
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t k : cluster_counts) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
      const std::uint64_t s = seed ^ (0x9E3779B97F4A7C15ULL * (r + 1)) ^ (k << 32);
      best = std::min(best, kmeans(contexts, k, max_iterations, s).inertia);
    }
    out.emplace_back(k, best);
  }
  return out;
}

}  // namespace neuclust::clustering
