#pragma once

// Domain types for Boolean matrix factorisation and the exact likelihood
// bookkeeping shared by the sampler, predictors and generators.
//
// Observations are trits in signed encoding: -1 = observed zero, +1 = observed
// one, 0 = missing. Factor matrices hold bits; their signed view is 2b - 1.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ormachine {

using Trit = std::int8_t;
using Bit = std::uint8_t;

inline constexpr Trit kObservedZero = -1;
inline constexpr Trit kMissing = 0;
inline constexpr Trit kObservedOne = 1;

/// {0,1} -> {-1,+1}
constexpr int to_signed(Bit b) noexcept { return 2 * static_cast<int>(b) - 1; }
constexpr Bit from_signed(int s) noexcept { return static_cast<Bit>((s + 1) / 2); }
constexpr Trit to_trit(Bit b) noexcept { return b ? kObservedOne : kObservedZero; }

inline double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) noexcept { return std::log(p / (1.0 - p)); }
/// ln sigma(x), stable for large |x|.
inline double log_sigmoid(double x) noexcept {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

/// Default dispersion cap, logit(1 - 1e-6). Keeps the MLE finite for perfect fits.
inline const double kDefaultLambdaMax = logit(1.0 - 1e-6);

/// Index of a single matrix cell.
struct Cell {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Dense row-major {0,1} matrix. Used for Boolean products and as the storage
/// behind factor matrices.
class BinaryMatrix {
 public:
  BinaryMatrix() = default;
  BinaryMatrix(std::size_t rows, std::size_t cols, Bit fill = 0);
  /// Throws std::invalid_argument if the size is wrong or a cell is not 0/1.
  BinaryMatrix(std::size_t rows, std::size_t cols, std::vector<Bit> cells);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return cells_.size(); }

  Bit operator()(std::size_t r, std::size_t c) const noexcept { return cells_[r * cols_ + c]; }
  Bit& operator()(std::size_t r, std::size_t c) noexcept { return cells_[r * cols_ + c]; }
  int signed_at(std::size_t r, std::size_t c) const noexcept { return to_signed((*this)(r, c)); }

  std::span<const Bit> row(std::size_t r) const noexcept { return {cells_.data() + r * cols_, cols_}; }
  std::span<Bit> row(std::size_t r) noexcept { return {cells_.data() + r * cols_, cols_}; }
  std::span<const Bit> cells() const noexcept { return cells_; }
  std::span<Bit> cells() noexcept { return cells_; }

  std::size_t count_ones() const noexcept;
  BinaryMatrix transposed() const;
  /// Append `extra` all-zero columns.
  BinaryMatrix with_zero_columns(std::size_t extra) const;

  friend bool operator==(const BinaryMatrix&, const BinaryMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Bit> cells_;
};

enum class FactorRole : std::uint8_t { latent, code };

/// Binary factor matrix: Z (N x L, latent assignments) or U (D x L, codes).
class FactorMatrix : public BinaryMatrix {
 public:
  FactorMatrix() = default;
  FactorMatrix(BinaryMatrix bits, FactorRole role) : BinaryMatrix(std::move(bits)), role_(role) {}
  FactorMatrix(std::size_t rows, std::size_t width, FactorRole role)
      : BinaryMatrix(rows, width), role_(role) {}

  FactorRole role() const noexcept { return role_; }
  std::size_t width() const noexcept { return cols(); }

 private:
  FactorRole role_ = FactorRole::latent;
};

/// Dense row-major real matrix (posterior means and similar).
class RealMatrix {
 public:
  RealMatrix() = default;
  RealMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), cells_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return cells_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return cells_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const noexcept { return {cells_.data() + r * cols_, cols_}; }
  std::span<const double> cells() const noexcept { return cells_; }
  std::span<double> cells() noexcept { return cells_; }

  /// Round at 1/2 with ties going to 1.
  BinaryMatrix rounded() const;

  friend bool operator==(const RealMatrix&, const RealMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> cells_;
};

/// N x D trit matrix of observations.
class ObservedMatrix {
 public:
  ObservedMatrix() = default;
  /// All cells missing. Throws std::invalid_argument if rows or cols is zero.
  ObservedMatrix(std::size_t rows, std::size_t cols);
  /// Throws std::invalid_argument on size mismatch or a cell outside {-1,0,1}.
  ObservedMatrix(std::size_t rows, std::size_t cols, std::vector<Trit> cells);

  /// Fully observed view of a binary matrix.
  static ObservedMatrix from_binary(const BinaryMatrix& x);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return cells_.size(); }
  std::size_t observed_count() const noexcept { return observed_; }
  std::size_t missing_count() const noexcept { return cells_.size() - observed_; }

  Trit operator()(std::size_t r, std::size_t c) const noexcept { return cells_[r * cols_ + c]; }
  bool is_missing(std::size_t r, std::size_t c) const noexcept { return (*this)(r, c) == kMissing; }
  void set(std::size_t r, std::size_t c, Trit value);

  std::span<const Trit> row(std::size_t r) const noexcept { return {cells_.data() + r * cols_, cols_}; }
  std::span<const Trit> cells() const noexcept { return cells_; }

  /// Number of observed ones.
  std::size_t positive_count() const noexcept;
  /// Fraction of observed cells that are ones; 0 when nothing is observed.
  double observed_density() const noexcept;
  ObservedMatrix transposed() const;
  /// Observed cells as bits, missing as 0.
  BinaryMatrix to_binary() const;

  friend bool operator==(const ObservedMatrix&, const ObservedMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t observed_ = 0;
  std::vector<Trit> cells_;
};

/// Global dispersion on the logit scale; sigma(lambda) is the probability an
/// observation agrees with the Boolean product.
class Dispersion {
 public:
  Dispersion() = default;
  /// Throws std::invalid_argument unless 0 <= lambda <= lambda_max.
  explicit Dispersion(double lambda, double lambda_max = kDefaultLambdaMax);
  double lambda() const noexcept { return lambda_; }
  double sigma() const noexcept { return sigmoid(lambda_); }

 private:
  double lambda_ = 0.0;
};

/// Independent Bernoulli prior on a binary variable.
class BernoulliPrior {
 public:
  BernoulliPrior() = default;
  /// Throws std::invalid_argument unless 0 < p < 1.
  explicit BernoulliPrior(double p);
  double p() const noexcept { return p_; }
  /// logit(p), the additive prior term of the full conditional.
  double eta() const noexcept { return eta_; }

 private:
  double p_ = 0.5;
  double eta_ = 0.0;
};

/// x[n][d] = OR_l (z[n][l] AND u[d][l]). Z is N x L, U is D x L.
/// Throws std::invalid_argument if the widths differ.
BinaryMatrix boolean_product(const BinaryMatrix& z, const BinaryMatrix& u);

/// Signed agreement of one cell with the deterministic product:
/// +1 predicted correctly, -1 incorrectly, 0 when x is missing.
int deterministic_residual(Trit x, std::span<const Bit> z_row, std::span<const Bit> u_row);

/// Number of observed cells predicted correctly by boolean_product(z, u).
std::size_t count_correct(const ObservedMatrix& x, const BinaryMatrix& z, const BinaryMatrix& u);

/// P ln sigma(lambda) + (observed - P) ln sigma(-lambda). Missing cells are dropped.
double log_likelihood(const ObservedMatrix& x, const BinaryMatrix& z, const BinaryMatrix& u,
                      double lambda);

/// Same, from precomputed counts.
double log_likelihood_from_counts(std::size_t correct, std::size_t observed, double lambda) noexcept;

}  // namespace ormachine
