#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "neuclust/clustering.hpp"
#include "neuclust/error.hpp"

using namespace neuclust;
using clustering::kmeans;
using linalg::DenseMatrix;

namespace {

struct Planted {
  DenseMatrix points;
  std::vector<std::size_t> labels;
};

Planted blobs(const std::vector<std::vector<double>>& centers, std::size_t per, double sigma,
              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  Planted out;
  for (std::size_t i = 0; i < per * centers.size(); ++i) {
    const std::size_t c = i % centers.size();
    std::vector<double> row = centers[c];
    for (auto& v : row) v += g(rng);
    out.points.append_row(row);
    out.labels.push_back(c);
  }
  return out;
}

// Same partition up to relabeling.
bool same_partition(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::map<std::size_t, std::size_t> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (ab.emplace(a[i], b[i]).first->second != b[i]) return false;
    if (ba.emplace(b[i], a[i]).first->second != a[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("kmeans trivial cases") {
  std::mt19937_64 rng(1);
  DenseMatrix pts;
  for (int i = 0; i < 6; ++i) pts.append_row(std::vector<double>{double(i * i), double(7 - i)});

  const auto own = kmeans(pts, 6, 300, 3);
  CHECK(own.inertia == doctest::Approx(0.0));
  for (std::size_t c = 0; c < 6; ++c) CHECK(clustering::cluster_members(own, c).size() == 1);
  for (std::size_t i = 0; i < 6; ++i)
    CHECK(own.centroids(own.assignments[i], 0) == pts(i, 0));

  const auto one = kmeans(pts, 1, 300, 3);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < 6; ++i) mx += pts(i, 0) / 6, my += pts(i, 1) / 6;
  CHECK(one.centroids(0, 0) == doctest::Approx(mx));
  CHECK(one.centroids(0, 1) == doctest::Approx(my));
  double ss = 0;
  for (std::size_t i = 0; i < 6; ++i) ss += (pts(i, 0) - mx) * (pts(i, 0) - mx) + (pts(i, 1) - my) * (pts(i, 1) - my);
  CHECK(one.inertia == doctest::Approx(ss));
  CHECK(clustering::cluster_members(one, 0) == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});

  CHECK_THROWS_AS(kmeans(pts, 7, 300, 0), InvalidArgument);
  CHECK_THROWS_AS(kmeans(pts, 0, 300, 0), InvalidArgument);
  CHECK_THROWS_AS(clustering::cluster_members(one, 1), InvalidArgument);
}

TEST_CASE("planted three blobs") {
  const std::vector<std::vector<double>> centers{{0, 0}, {10, 0}, {5, 8.660254037844386}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto p = blobs(centers, 20, 0.01, seed);
    const auto c = kmeans(p.points, 3, 300, seed);
    CHECK(same_partition(c.assignments, p.labels));
    for (std::size_t k = 0; k < 3; ++k) {
      const auto members = clustering::cluster_members(c, k);
      std::set<std::size_t> planted;
      for (auto i : members) planted.insert(p.labels[i]);
      CHECK(planted.size() == 1);
    }
  }
}

TEST_CASE("kmeans invariants") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 5);
  for (int trial = 0; trial < 20; ++trial) {
    DenseMatrix pts;
    for (int i = 0; i < 60; ++i) {
      std::vector<double> row(4);
      for (auto& v : row) v = u(rng);
      pts.append_row(row);
    }
    const auto c = kmeans(pts, 5, 300, trial);
    for (std::size_t i = 1; i < c.inertia_trace.size(); ++i)
      CHECK(c.inertia_trace[i] <= c.inertia_trace[i - 1] + 1e-9);
    CHECK(c.inertia == doctest::Approx(clustering::inertia(pts, c.assignments, c.centroids)));
    if (!c.converged) continue;
    for (std::size_t i = 0; i < pts.rows(); ++i) {
      const double own = linalg::squared_distance(pts.row(i), c.centroids.row(c.assignments[i]));
      for (std::size_t k = 0; k < 5; ++k) {
        const double other = linalg::squared_distance(pts.row(i), c.centroids.row(k));
        CHECK((own < other || (own == other && c.assignments[i] <= k) || k == c.assignments[i]));
      }
    }
    const auto again = kmeans(pts, 5, 300, trial);
    CHECK(again.assignments == c.assignments);
  }
}

TEST_CASE("wcss_sweep") {
  const auto two = blobs({{0, 0, 0}, {6, 0, 0}}, 15, 0.1, 4);
  const auto sweep = clustering::wcss_sweep(two.points, {1, 2, 3, 5, 30}, 300, 1);
  REQUIRE(sweep.size() == 5);
  CHECK(sweep.back().first == 30);
  CHECK(sweep.back().second == doctest::Approx(0.0));
  for (std::size_t i = 1; i < sweep.size(); ++i) CHECK(sweep[i].second <= sweep[i - 1].second);
  // Splitting two blobs of 15 at distance 6 removes 2 * 15 * 3^2 of spread.
  CHECK(sweep[0].second - sweep[1].second >= 0.95 * 270.0);
  CHECK(sweep[0].second / sweep[1].second > 10.0);
  CHECK_THROWS_AS(clustering::wcss_sweep(two.points, {31}, 300, 1), InvalidArgument);
}
