#pragma once

// Experiment protocols shared by the `benchmark` command and the acceptance
// suite. Each trial is deterministic under its seed.

#include <cstdint>
#include <optional>
#include <vector>

#include "ormachine/ormachine.hpp"

namespace ormachine::experiments {

struct Protocol {
  std::size_t burn_in = 100;
  std::size_t samples = 100;
  unsigned threads = 1;
  /// Factor priors from the observed density; otherwise both are 1/2.
  bool empirical_bayes = true;
};

struct Stat {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Sample mean and (n - 1) standard deviation; stddev is 0 for one value.
Stat describe(const std::vector<double>& values);

/// Sampler config for a width-L factorisation of x under the protocol.
SamplerConfig protocol_config(const ObservedMatrix& x, std::size_t width, const Protocol& protocol, std::uint64_t seed);

struct FactorizationResult {
  /// MAP reconstruction vs the noise-free product.
  double error = 0.0;
  /// MAP reconstruction vs the noisy input.
  double observed_error = 0.0;
  double lambda = 0.0;
  double seconds = 0.0;
};

/// Random N x D product of rank L at the target density, bit-flipped, then
/// factorised at the true rank.
FactorizationResult factorization_trial(std::size_t rows, std::size_t cols, std::size_t rank, double density,
                                        double flip, std::uint64_t seed, const Protocol& protocol);

struct CompletionResult {
  /// Fraction of held-out cells whose thresholded prediction is correct.
  double accuracy = 0.0;
  /// Majority-class accuracy on the same held-out cells.
  double baseline = 0.0;
  double lambda = 0.0;
  CalibrationHistograms calibration;
  std::vector<double> probabilities;
  std::vector<Bit> truths;
  double seconds = 0.0;
};

/// Noise-free random product with only `observed_fraction` of the cells
/// visible; the rest are completed and scored.
CompletionResult completion_trial(std::size_t rows, std::size_t cols, std::size_t rank, double observed_fraction,
                                  std::uint64_t seed, const Protocol& protocol, double density = 0.5);

/// Observe `fraction` of x's observed cells and complete the rest.
CompletionResult observed_completion_trial(const ObservedMatrix& x, std::size_t rank, double fraction,
                                           std::uint64_t seed, const Protocol& protocol);

struct DigitsResult {
  /// Imputation error on the hidden cells, single layer of the bottom width.
  double single_error = 0.0;
  /// Same for the stacked model.
  double multi_error = 0.0;
  std::vector<double> multi_lambdas;
  double seconds = 0.0;
};

/// Calculator digits with `missing` of the cells hidden, imputed by a single
/// layer of width widths[0] and by the full stack.
DigitsResult digits_trial(std::size_t copies, double missing, const std::vector<std::size_t>& widths,
                          const std::vector<double>& code_priors, std::uint64_t seed, const Protocol& protocol);

/// Table values of the shallow model on MovieLens 100k, by observed fraction.
struct ReferencePoint {
  double fraction;
  double accuracy;
};
inline constexpr ReferencePoint kMovieLens100kReference[] = {
    {0.01, 0.585}, {0.05, 0.635}, {0.10, 0.649}, {0.20, 0.664}, {0.50, 0.689}, {0.95, 0.700}};

}  // namespace ormachine::experiments
