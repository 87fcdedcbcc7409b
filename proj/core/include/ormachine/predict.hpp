#pragma once

// Completion and evaluation: predictive probabilities for individual cells,
// reconstruction error, ROC curves and calibration histograms.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ormachine/model.hpp"
#include "ormachine/sampler.hpp"

namespace ormachine {

/// Monte-Carlo predictive: average over samples of sigma(lambda) where the
/// sample's Boolean product is 1, else 1 - sigma(lambda).
/// Throws std::invalid_argument when no samples are supplied.
std::vector<double> predict_mc(std::span<const FactorSample> samples, double lambda, std::span<const Cell> cells);

/// Plug-in predictive from posterior means:
/// q = 1 - prod_l (1 - z[n][l] u[d][l]),  p = sigma(lambda) q + (1 - sigma(lambda)) (1 - q).
std::vector<double> predict_plugin(const RealMatrix& z_mean, const RealMatrix& u_mean, double lambda,
                                   std::span<const Cell> cells);

/// Plug-in predictive for every cell.
RealMatrix predict_plugin_all(const RealMatrix& z_mean, const RealMatrix& u_mean, double lambda);

/// Reconstruction obtained by thresholding the plug-in predictive at 1/2
/// (ties to 1).
BinaryMatrix reconstruct(const PosteriorSummary& summary);

/// Fraction of cells (restricted to mask == 1 when a mask is given) where the
/// two matrices differ. Throws std::invalid_argument on shape mismatch or an
/// empty mask.
double reconstruction_error(const BinaryMatrix& truth, const BinaryMatrix& estimate,
                            const BinaryMatrix* mask = nullptr);

struct ConfusionCounts {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;

  std::size_t total() const noexcept { return true_positive + false_positive + true_negative + false_negative; }
  double accuracy() const noexcept;
};

/// Predicted positive iff probability >= threshold.
ConfusionCounts confusion(std::span<const double> probabilities, std::span<const Bit> truths, double threshold = 0.5);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

/// One (FPR, TPR) point per threshold, in the order given; a cell is
/// predicted positive iff probability >= threshold. Throws
/// std::invalid_argument when the truths lack a positive or a negative.
std::vector<RocPoint> roc_curve(std::span<const double> probabilities, std::span<const Bit> truths,
                                std::span<const double> thresholds);

/// 101 evenly spaced thresholds from 1 + 1e-9 down to 0.
std::vector<double> default_roc_thresholds();

/// Trapezoidal area under a curve sorted by the caller's thresholds.
double roc_auc(std::span<const RocPoint> curve);

inline constexpr std::size_t kCalibrationBins = 50;

struct CalibrationHistograms {
  std::array<std::size_t, kCalibrationBins> correct{};
  std::array<std::size_t, kCalibrationBins> incorrect{};
  std::size_t n_correct = 0;
  std::size_t n_incorrect = 0;
  /// Mean |p - 1/2| within each partition (0 when the partition is empty).
  double correct_mean_distance = 0.0;
  double incorrect_mean_distance = 0.0;
};

/// Split cells by whether the thresholded prediction matches the truth and
/// histogram their probabilities over 50 uniform bins on [0, 1].
CalibrationHistograms calibration_split(std::span<const double> probabilities, std::span<const Bit> truths,
                                        double threshold = 0.5);

struct PredictionReport {
  std::vector<Cell> cells;
  std::vector<double> probabilities;
  std::vector<Bit> map;
  std::optional<std::vector<Bit>> truths;
  std::optional<ConfusionCounts> counts;

  std::optional<double> accuracy() const;
};

PredictionReport make_report(std::vector<Cell> cells, std::vector<double> probabilities,
                             std::optional<std::vector<Bit>> truths, double threshold = 0.5);

}  // namespace ormachine
