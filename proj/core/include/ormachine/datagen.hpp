#pragma once

// Synthetic benchmark data: random Boolean products at a controlled density,
// bit-flip noise, exact-count masking, and seven-segment calculator digits.
// Every generator is deterministic under its seed.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "ormachine/model.hpp"

namespace ormachine {

/// Bernoulli parameter p such that the product of two i.i.d. Bernoulli(p)
/// factor matrices of width L has expected density `target`:
/// p = sqrt(1 - (1 - target)^(1/L)).
double density_to_bernoulli(std::size_t width, double target);

/// Empirical-Bayes factor prior from the density of the observed cells,
/// clamped to [0.001, 0.999].
BernoulliPrior empirical_bayes_prior(const ObservedMatrix& x, std::size_t width);

struct SyntheticSpec {
  std::size_t rows = 100;
  std::size_t cols = 100;
  std::size_t width = 5;
  double target_density = 0.5;
  double flip_prob = 0.0;
  double observed_fraction = 1.0;
  std::uint64_t seed = 0;
  /// Bypass density_to_bernoulli and use this factor density directly.
  std::optional<double> factor_density;

  void validate() const;
};

struct SyntheticFactors {
  BinaryMatrix clean;
  BinaryMatrix z;
  BinaryMatrix u;
};

SyntheticFactors gen_random_boolean(const SyntheticSpec& spec);

/// Each cell is complemented independently with probability flip_prob.
BinaryMatrix apply_bitflip_noise(const BinaryMatrix& x, double flip_prob, std::uint64_t seed);
/// Throws std::invalid_argument if x has missing cells (noise precedes masking).
ObservedMatrix apply_bitflip_noise(const ObservedMatrix& x, double flip_prob, std::uint64_t seed);

struct MaskedMatrix {
  ObservedMatrix observed;
  /// Cells hidden by the mask, in row-major order.
  std::vector<Cell> held_out;
  /// The unmasked input.
  BinaryMatrix truth;
};

/// Keep exactly round(fraction * N * D) cells, chosen uniformly without
/// replacement. Throws std::invalid_argument if that count is zero.
MaskedMatrix mask_random(const BinaryMatrix& x, double observed_fraction, std::uint64_t seed);

enum class DigitOrientation : std::uint8_t { portrait, landscape };

/// Seven-segment names in conventional order a..g:
/// top, upper right, lower right, bottom, lower left, upper left, middle.
inline constexpr std::array<char, 7> kSegmentNames{'a', 'b', 'c', 'd', 'e', 'f', 'g'};

/// 10 x 7 segment membership of digits 0..9.
BinaryMatrix digit_segments();

/// 7 x (height * width) segment bitmaps. Throws std::invalid_argument if
/// height < 5 or width < 3.
BinaryMatrix segment_bitmaps(std::size_t height, std::size_t width,
                             DigitOrientation orientation = DigitOrientation::portrait);

struct DigitsData {
  ObservedMatrix x;
  std::vector<int> labels;
  BinaryMatrix clean;
  BinaryMatrix membership;
  BinaryMatrix segments;
};

/// `copies` rounds of the digits 0..9 rendered on a height x width grid,
/// flattened row-major, with optional bit flips. Landscape orientation
/// transposes each image.
DigitsData calculator_digits(std::size_t copies, double flip_prob = 0.0, std::size_t height = 17,
                             std::size_t width = 10, std::uint64_t seed = 0,
                             DigitOrientation orientation = DigitOrientation::portrait);

}  // namespace ormachine
