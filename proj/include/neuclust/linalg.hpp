#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace neuclust::linalg {

using Vector = std::vector<double>;

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n, double scale = 1.0);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  /// Appends a row; the first row fixes cols() when the matrix is empty.
  void append_row(std::span<const double> values);

  DenseMatrix transpose() const;
  bool all_finite() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
double frobenius_norm(const DenseMatrix& a);

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);
Vector multiply(const DenseMatrix& a, std::span<const double> x);
DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b);

/// Lower-triangular Cholesky factor, or nullopt when `a` is not positive definite.
std::optional<DenseMatrix> cholesky(const DenseMatrix& a);

/// Inverse of an SPD matrix through its Cholesky factor. Throws
/// InternalConsistencyError when the factorization fails.
DenseMatrix inverse_spd(const DenseMatrix& a);
double log_det_spd(const DenseMatrix& a);

/// Solves a x = b for SPD a.
Vector solve_spd(const DenseMatrix& a, std::span<const double> b);

/// Regularized design matrix z = lambda1 I + sum v v^T together with its
/// inverse and log-determinant, maintained incrementally.
///
/// Each rank-1 update applies Sherman-Morrison to the inverse and the matrix
/// determinant lemma to the log-determinant. Every `refresh_interval`
/// updates, z is symmetrized and both derived quantities are recomputed by
/// Cholesky so rounding drift stays bounded.
class ConfidenceState {
 public:
  static constexpr std::size_t kDefaultRefreshInterval = 512;

  ConfidenceState(std::size_t p, double lambda1,
                  std::size_t refresh_interval = kDefaultRefreshInterval);

  std::size_t dim() const noexcept { return z_.rows(); }
  double lambda1() const noexcept { return lambda1_; }
  double log_det() const noexcept { return log_det_; }
  /// log(det z / det(lambda1 I)).
  double log_det_ratio() const noexcept;
  std::size_t updates_applied() const noexcept { return updates_applied_; }
  std::size_t updates_since_refresh() const noexcept { return updates_since_refresh_; }
  std::size_t refresh_interval() const noexcept { return refresh_interval_; }

  const DenseMatrix& z() const noexcept { return z_; }
  const DenseMatrix& z_inv() const noexcept { return z_inv_; }

  void rank1_update(std::span<const double> v);

  /// sqrt(v^T z^{-1} v).
  double mahalanobis_norm(std::span<const double> v) const;

  /// z^{-1} x.
  Vector apply_inverse(std::span<const double> x) const;

  /// Recomputes z_inv and log_det from z.
  void refresh();

  /// Direct write access to z, bypassing the maintained inverse. Only for
  /// fault-injection checks.
  DenseMatrix& mutable_z_for_testing() noexcept { return z_; }

 private:
  DenseMatrix z_;
  DenseMatrix z_inv_;
  double log_det_ = 0.0;
  double lambda1_ = 1.0;
  std::size_t refresh_interval_ = kDefaultRefreshInterval;
  std::size_t updates_applied_ = 0;
  std::size_t updates_since_refresh_ = 0;
  Vector scratch_;
};

}  // namespace neuclust::linalg
