#include "neuclust/linalg.hpp"

#include <cmath>
#include <string>

#include "neuclust/error.hpp"

namespace neuclust::linalg {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw InvalidArgument("DenseMatrix: data length " + std::to_string(data_.size()) +
                          " does not match " + std::to_string(rows_) + "x" +
                          std::to_string(cols_));
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n, double scale) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = scale;
  return m;
}

void DenseMatrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) {
    throw InvalidArgument("DenseMatrix::append_row: expected " + std::to_string(cols_) +
                          " columns, got " + std::to_string(values.size()));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool DenseMatrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("squared_distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double frobenius_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw InvalidArgument("multiply: inner dimension mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

Vector multiply(const DenseMatrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw InvalidArgument("multiply: vector length mismatch");
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgument("subtract: shape mismatch");
  DenseMatrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] -= bd[i];
  return c;
}

std::optional<DenseMatrix> cholesky(const DenseMatrix& a) {
  if (a.rows() != a.cols()) throw InvalidArgument("cholesky: matrix not square");
  const std::size_t n = a.rows();
  DenseMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) return std::nullopt;
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      auto li = l.row(i);
      auto lj = l.row(j);
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      l(i, j) = s / ljj;
    }
  }
  return l;
}

namespace {

DenseMatrix require_cholesky(const DenseMatrix& a, const char* who) {
  auto l = cholesky(a);
  if (!l) throw InternalConsistencyError(std::string(who) + ": matrix is not positive definite");
  return std::move(*l);
}

// Inverse of a lower-triangular matrix by forward substitution.
DenseMatrix invert_lower(const DenseMatrix& l) {
  const std::size_t n = l.rows();
  DenseMatrix inv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    inv(j, j) = 1.0 / l(j, j);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s += l(i, k) * inv(k, j);
      inv(i, j) = -s / l(i, i);
    }
  }
  return inv;
}

}  // namespace

DenseMatrix inverse_spd(const DenseMatrix& a) {
  const DenseMatrix l = require_cholesky(a, "inverse_spd");
  const DenseMatrix linv = invert_lower(l);
  // a^{-1} = L^{-T} L^{-1}; linv is lower triangular.
  const std::size_t n = a.rows();
  DenseMatrix inv(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t k = i; k < n; ++k) s += linv(k, i) * linv(k, j);
      inv(i, j) = s;
      inv(j, i) = s;
    }
  }
  return inv;
}

double log_det_spd(const DenseMatrix& a) {
  const DenseMatrix l = require_cholesky(a, "log_det_spd");
  double s = 0.0;
  for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

Vector solve_spd(const DenseMatrix& a, std::span<const double> b) {
  if (b.size() != a.rows()) throw InvalidArgument("solve_spd: length mismatch");
  const DenseMatrix l = require_cholesky(a, "solve_spd");
  const std::size_t n = a.rows();
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  Vector x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = y[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

ConfidenceState::ConfidenceState(std::size_t p, double lambda1, std::size_t refresh_interval)
    : lambda1_(lambda1), refresh_interval_(refresh_interval) {
  if (p == 0) throw InvalidArgument("ConfidenceState: dimension must be >= 1");
  if (!(lambda1 > 0.0) || !std::isfinite(lambda1))
    throw InvalidArgument("ConfidenceState: lambda1 must be positive");
  if (refresh_interval_ == 0) throw InvalidArgument("ConfidenceState: refresh interval must be >= 1");
  z_ = DenseMatrix::identity(p, lambda1);
  z_inv_ = DenseMatrix::identity(p, 1.0 / lambda1);
  log_det_ = static_cast<double>(p) * std::log(lambda1);
  scratch_.assign(p, 0.0);
}

double ConfidenceState::log_det_ratio() const noexcept {
  return log_det_ - static_cast<double>(dim()) * std::log(lambda1_);
}

void ConfidenceState::rank1_update(std::span<const double> v) {
  const std::size_t p = dim();
  if (v.size() != p) throw InvalidArgument("rank1_update: vector length mismatch");

  std::vector<std::size_t> nz;
  nz.reserve(p);
  for (std::size_t i = 0; i < p; ++i) {
    if (!std::isfinite(v[i])) throw InvalidArgument("rank1_update: non-finite entry");
    if (v[i] != 0.0) nz.push_back(i);
  }

  // u = z_inv v, touching only the nonzero columns of v.
  Vector& u = scratch_;
  for (std::size_t i = 0; i < p; ++i) {
    auto row = z_inv_.row(i);
    double s = 0.0;
    for (std::size_t j : nz) s += row[j] * v[j];
    u[i] = s;
  }
  double quad = 0.0;
  for (std::size_t j : nz) quad += v[j] * u[j];
  const double denom = 1.0 + quad;
  if (!(denom > 0.0) || !std::isfinite(denom))
    throw InternalConsistencyError("rank1_update: 1 + v^T z^-1 v <= 0, confidence state corrupted");

  if (!nz.empty()) {
    for (std::size_t i : nz) {
      auto zr = z_.row(i);
      for (std::size_t j : nz) zr[j] += v[i] * v[j];
    }
    const double scale = 1.0 / denom;
    for (std::size_t i = 0; i < p; ++i) {
      const double ui = u[i] * scale;
      if (ui == 0.0) continue;
      auto row = z_inv_.row(i);
      for (std::size_t j = 0; j < p; ++j) row[j] -= ui * u[j];
    }
    log_det_ += std::log1p(quad);
  }

  ++updates_applied_;
  if (++updates_since_refresh_ >= refresh_interval_) refresh();
}

double ConfidenceState::mahalanobis_norm(std::span<const double> v) const {
  const std::size_t p = dim();
  if (v.size() != p) throw InvalidArgument("mahalanobis_norm: vector length mismatch");
  std::vector<std::size_t> nz;
  nz.reserve(p);
  for (std::size_t i = 0; i < p; ++i) {
    if (!std::isfinite(v[i])) throw InvalidArgument("mahalanobis_norm: non-finite entry");
    if (v[i] != 0.0) nz.push_back(i);
  }
  double quad = 0.0;
  for (std::size_t i : nz) {
    auto row = z_inv_.row(i);
    double s = 0.0;
    for (std::size_t j : nz) s += row[j] * v[j];
    quad += v[i] * s;
  }
  if (quad < 0.0) {
    if (quad < -1e-10)
      throw InternalConsistencyError("mahalanobis_norm: negative quadratic form");
    return 0.0;
  }
  return std::sqrt(quad);
}

Vector ConfidenceState::apply_inverse(std::span<const double> x) const {
  return multiply(z_inv_, x);
}

void ConfidenceState::refresh() {
  const std::size_t p = dim();
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      const double s = 0.5 * (z_(i, j) + z_(j, i));
      z_(i, j) = s;
      z_(j, i) = s;
    }
  }
  const DenseMatrix l = require_cholesky(z_, "ConfidenceState::refresh");
  double ld = 0.0;
  for (std::size_t i = 0; i < p; ++i) ld += std::log(l(i, i));
  log_det_ = 2.0 * ld;
  z_inv_ = inverse_spd(z_);
  updates_since_refresh_ = 0;
}

}  // namespace neuclust::linalg
