#include "ormachine/predict.hpp"

#include <cmath>
#include <stdexcept>

namespace ormachine {

namespace {

void check_means(const RealMatrix& z_mean, const RealMatrix& u_mean) {
  if (z_mean.cols() != u_mean.cols()) throw std::invalid_argument("predict: latent width mismatch");
}

double plugin_cell(const RealMatrix& z_mean, const RealMatrix& u_mean, double sigma, std::size_t n, std::size_t d) {
  const auto zr = z_mean.row(n);
  const auto ur = u_mean.row(d);
  double none = 1.0;
  for (std::size_t l = 0; l < zr.size(); ++l) none *= 1.0 - zr[l] * ur[l];
  const double q = 1.0 - none;
  return sigma * q + (1.0 - sigma) * (1.0 - q);
}

void check_truths(std::span<const double> probabilities, std::span<const Bit> truths) {
  if (probabilities.size() != truths.size()) throw std::invalid_argument("probabilities and truths differ in length");
}

}  // namespace

std::vector<double> predict_mc(std::span<const FactorSample> samples, double lambda, std::span<const Cell> cells) {
  if (samples.empty()) throw std::invalid_argument("predict_mc: no stored posterior samples (enable sample retention)");
  const double sigma = sigmoid(lambda);
  std::vector<double> out(cells.size(), 0.0);
  for (const auto& s : samples) {
    if (s.z.cols() != s.u.cols()) throw std::invalid_argument("predict_mc: latent width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto zr = s.z.row(cells[i].row);
      const auto ur = s.u.row(cells[i].col);
      bool on = false;
      for (std::size_t l = 0; l < zr.size() && !on; ++l) on = zr[l] && ur[l];
      out[i] += on ? sigma : 1.0 - sigma;
    }
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (double& p : out) p *= inv;
  return out;
}

std::vector<double> predict_plugin(const RealMatrix& z_mean, const RealMatrix& u_mean, double lambda,
                                   std::span<const Cell> cells) {
  check_means(z_mean, u_mean);
  const double sigma = sigmoid(lambda);
  std::vector<double> out;
  out.reserve(cells.size());
  for (const Cell& c : cells) {
    if (c.row >= z_mean.rows() || c.col >= u_mean.rows()) throw std::out_of_range("predict_plugin: cell out of range");
    out.push_back(plugin_cell(z_mean, u_mean, sigma, c.row, c.col));
  }
  return out;
}

RealMatrix predict_plugin_all(const RealMatrix& z_mean, const RealMatrix& u_mean, double lambda) {
  check_means(z_mean, u_mean);
  const double sigma = sigmoid(lambda);
  RealMatrix out(z_mean.rows(), u_mean.rows());
  for (std::size_t n = 0; n < z_mean.rows(); ++n)
    for (std::size_t d = 0; d < u_mean.rows(); ++d) out(n, d) = plugin_cell(z_mean, u_mean, sigma, n, d);
  return out;
}

BinaryMatrix reconstruct(const PosteriorSummary& summary) {
  return predict_plugin_all(summary.z_mean, summary.u_mean, summary.lambda).rounded();
}

double reconstruction_error(const BinaryMatrix& truth, const BinaryMatrix& estimate, const BinaryMatrix* mask) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols()) {
    throw std::invalid_argument("reconstruction_error: shape mismatch");
  }
  if (mask && (mask->rows() != truth.rows() || mask->cols() != truth.cols())) {
    throw std::invalid_argument("reconstruction_error: mask shape mismatch");
  }
  std::size_t considered = 0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (mask && !mask->cells()[i]) continue;
    ++considered;
    wrong += truth.cells()[i] != estimate.cells()[i];
  }
  if (considered == 0) throw std::invalid_argument("reconstruction_error: empty mask");
  return static_cast<double>(wrong) / static_cast<double>(considered);
}

double ConfusionCounts::accuracy() const noexcept {
  const std::size_t n = total();
  return n == 0 ? 0.0 : static_cast<double>(true_positive + true_negative) / static_cast<double>(n);
}

ConfusionCounts confusion(std::span<const double> probabilities, std::span<const Bit> truths, double threshold) {
  check_truths(probabilities, truths);
  ConfusionCounts c;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const bool predicted = probabilities[i] >= threshold;
    if (predicted) (truths[i] ? c.true_positive : c.false_positive)++;
    else (truths[i] ? c.false_negative : c.true_negative)++;
  }
  return c;
}

std::vector<RocPoint> roc_curve(std::span<const double> probabilities, std::span<const Bit> truths,
                                std::span<const double> thresholds) {
  check_truths(probabilities, truths);
  std::size_t positives = 0;
  for (Bit t : truths) positives += t;
  const std::size_t negatives = truths.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw std::invalid_argument("roc_curve: truths need at least one positive and one negative (got " +
                                std::to_string(positives) + " positives, " + std::to_string(negatives) + " negatives)");
  }
  std::vector<RocPoint> curve;
  curve.reserve(thresholds.size());
  for (double t : thresholds) {
    const ConfusionCounts c = confusion(probabilities, truths, t);
    curve.push_back({t, static_cast<double>(c.false_positive) / static_cast<double>(negatives),
                     static_cast<double>(c.true_positive) / static_cast<double>(positives)});
  }
  return curve;
}

std::vector<double> default_roc_thresholds() {
  std::vector<double> t;
  t.push_back(1.0 + 1e-9);
  for (int i = 99; i >= 0; --i) t.push_back(static_cast<double>(i) / 100.0);
  return t;
}

double roc_auc(std::span<const RocPoint> curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) / 2.0;
  }
  return std::abs(area);
}

CalibrationHistograms calibration_split(std::span<const double> probabilities, std::span<const Bit> truths,
                                        double threshold) {
  check_truths(probabilities, truths);
  CalibrationHistograms h;
  double dc = 0.0;
  double di = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = probabilities[i];
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("calibration_split: probability outside [0, 1]");
    const auto bin = std::min(kCalibrationBins - 1, static_cast<std::size_t>(p * static_cast<double>(kCalibrationBins)));
    const bool correct = (p >= threshold) == (truths[i] != 0);
    if (correct) {
      ++h.correct[bin];
      ++h.n_correct;
      dc += std::abs(p - 0.5);
    } else {
      ++h.incorrect[bin];
      ++h.n_incorrect;
      di += std::abs(p - 0.5);
    }
  }
  if (h.n_correct) h.correct_mean_distance = dc / static_cast<double>(h.n_correct);
  if (h.n_incorrect) h.incorrect_mean_distance = di / static_cast<double>(h.n_incorrect);
  return h;
}

std::optional<double> PredictionReport::accuracy() const {
  if (!counts) return std::nullopt;
  return counts->accuracy();
}

PredictionReport make_report(std::vector<Cell> cells, std::vector<double> probabilities,
                             std::optional<std::vector<Bit>> truths, double threshold) {
  if (cells.size() != probabilities.size()) throw std::invalid_argument("make_report: cells and probabilities differ in length");
  PredictionReport r;
  r.map.reserve(probabilities.size());
  for (double p : probabilities) r.map.push_back(p >= threshold ? 1 : 0);
  if (truths) r.counts = confusion(probabilities, *truths, threshold);
  r.cells = std::move(cells);
  r.probabilities = std::move(probabilities);
  r.truths = std::move(truths);
  return r;
}

}  // namespace ormachine
