#include "ormachine/model.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ormachine {

BinaryMatrix::BinaryMatrix(std::size_t rows, std::size_t cols, Bit fill)
    : rows_(rows), cols_(cols), cells_(rows * cols, fill) {
  if (fill > 1) throw std::invalid_argument("BinaryMatrix: fill value must be 0 or 1");
}

BinaryMatrix::BinaryMatrix(std::size_t rows, std::size_t cols, std::vector<Bit> cells)
    : rows_(rows), cols_(cols), cells_(std::move(cells)) {
  if (cells_.size() != rows * cols) {
    throw std::invalid_argument("BinaryMatrix: expected " + std::to_string(rows * cols) +
                                " cells, got " + std::to_string(cells_.size()));
  }
  if (std::any_of(cells_.begin(), cells_.end(), [](Bit b) { return b > 1; })) {
    throw std::invalid_argument("BinaryMatrix: cells must be 0 or 1");
  }
}

std::size_t BinaryMatrix::count_ones() const noexcept {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), Bit{1}));
}

BinaryMatrix BinaryMatrix::transposed() const {
  BinaryMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

BinaryMatrix BinaryMatrix::with_zero_columns(std::size_t extra) const {
  BinaryMatrix out(rows_, cols_ + extra);
  for (std::size_t r = 0; r < rows_; ++r) std::copy_n(row(r).begin(), cols_, out.row(r).begin());
  return out;
}

BinaryMatrix RealMatrix::rounded() const {
  BinaryMatrix out(rows_, cols_);
  for (std::size_t i = 0; i < cells_.size(); ++i) out.cells()[i] = cells_[i] >= 0.5 ? 1 : 0;
  return out;
}

ObservedMatrix::ObservedMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), cells_(rows * cols, kMissing) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("ObservedMatrix: empty shape");
}

ObservedMatrix::ObservedMatrix(std::size_t rows, std::size_t cols, std::vector<Trit> cells)
    : rows_(rows), cols_(cols), cells_(std::move(cells)) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("ObservedMatrix: empty shape");
  if (cells_.size() != rows * cols) {
    throw std::invalid_argument("ObservedMatrix: expected " + std::to_string(rows * cols) +
                                " cells, got " + std::to_string(cells_.size()));
  }
  for (Trit t : cells_) {
    if (t < -1 || t > 1) throw std::invalid_argument("ObservedMatrix: cells must be -1, 0 or +1");
    if (t != kMissing) ++observed_;
  }
}

ObservedMatrix ObservedMatrix::from_binary(const BinaryMatrix& x) {
  std::vector<Trit> cells(x.size());
  std::transform(x.cells().begin(), x.cells().end(), cells.begin(), to_trit);
  return ObservedMatrix(x.rows(), x.cols(), std::move(cells));
}

void ObservedMatrix::set(std::size_t r, std::size_t c, Trit value) {
  if (value < -1 || value > 1) throw std::invalid_argument("ObservedMatrix: cells must be -1, 0 or +1");
  Trit& cell = cells_[r * cols_ + c];
  observed_ += static_cast<std::size_t>(value != kMissing) - static_cast<std::size_t>(cell != kMissing);
  cell = value;
}

std::size_t ObservedMatrix::positive_count() const noexcept {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), kObservedOne));
}

double ObservedMatrix::observed_density() const noexcept {
  if (observed_ == 0) return 0.0;
  return static_cast<double>(positive_count()) / static_cast<double>(observed_);
}

ObservedMatrix ObservedMatrix::transposed() const {
  std::vector<Trit> t(cells_.size());
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t[c * rows_ + r] = (*this)(r, c);
  return ObservedMatrix(cols_, rows_, std::move(t));
}

BinaryMatrix ObservedMatrix::to_binary() const {
  BinaryMatrix out(rows_, cols_);
  for (std::size_t i = 0; i < cells_.size(); ++i) out.cells()[i] = cells_[i] == kObservedOne ? 1 : 0;
  return out;
}

Dispersion::Dispersion(double lambda, double lambda_max) : lambda_(lambda) {
  if (!(lambda >= 0.0) || lambda > lambda_max) {
    throw std::invalid_argument("Dispersion: lambda must lie in [0, lambda_max]");
  }
}

BernoulliPrior::BernoulliPrior(double p) : p_(p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("BernoulliPrior: p must lie in (0, 1)");
  eta_ = logit(p);
}

BinaryMatrix boolean_product(const BinaryMatrix& z, const BinaryMatrix& u) {
  if (z.cols() != u.cols()) {
    throw std::invalid_argument("boolean_product: latent width mismatch (" + std::to_string(z.cols()) +
                                " vs " + std::to_string(u.cols()) + ")");
  }
  BinaryMatrix x(z.rows(), u.rows());
  const std::size_t width = z.cols();
  for (std::size_t n = 0; n < z.rows(); ++n) {
    const auto zr = z.row(n);
    for (std::size_t d = 0; d < u.rows(); ++d) {
      const auto ur = u.row(d);
      Bit any = 0;
      for (std::size_t l = 0; l < width && !any; ++l) any = zr[l] & ur[l];
      x(n, d) = any;
    }
  }
  return x;
}

int deterministic_residual(Trit x, std::span<const Bit> z_row, std::span<const Bit> u_row) {
  if (x == kMissing) return 0;
  bool any = false;
  const std::size_t width = std::min(z_row.size(), u_row.size());
  for (std::size_t l = 0; l < width && !any; ++l) any = z_row[l] && u_row[l];
  return static_cast<int>(x) * (any ? 1 : -1);
}

std::size_t count_correct(const ObservedMatrix& x, const BinaryMatrix& z, const BinaryMatrix& u) {
  if (z.rows() != x.rows() || u.rows() != x.cols() || z.cols() != u.cols()) {
    throw std::invalid_argument("count_correct: inconsistent shapes");
  }
  std::size_t correct = 0;
  for (std::size_t n = 0; n < x.rows(); ++n) {
    const auto zr = z.row(n);
    const auto xr = x.row(n);
    for (std::size_t d = 0; d < x.cols(); ++d) {
      if (deterministic_residual(xr[d], zr, u.row(d)) > 0) ++correct;
    }
  }
  return correct;
}

double log_likelihood_from_counts(std::size_t correct, std::size_t observed, double lambda) noexcept {
  const double p = static_cast<double>(correct);
  const double q = static_cast<double>(observed - correct);
  return p * log_sigmoid(lambda) + q * log_sigmoid(-lambda);
}

double log_likelihood(const ObservedMatrix& x, const BinaryMatrix& z, const BinaryMatrix& u,
                      double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("log_likelihood: lambda must be nonnegative");
  return log_likelihood_from_counts(count_correct(x, z, u), x.observed_count(), lambda);
}

}  // namespace ormachine
