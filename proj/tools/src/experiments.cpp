#include "experiments.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ormachine::experiments {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Trial seeds are split so that data, noise, mask and sampler streams differ.
std::uint64_t mix(std::uint64_t seed, std::uint64_t lane) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (lane + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

CompletionResult score_completion(const PosteriorSummary& s, const std::vector<Cell>& cells,
                                  std::vector<Bit> truths) {
  CompletionResult r;
  r.probabilities = predict_plugin(s.z_mean, s.u_mean, s.lambda, cells);
  r.accuracy = confusion(r.probabilities, truths).accuracy();
  const auto ones = static_cast<double>(std::accumulate(truths.begin(), truths.end(), std::size_t{0}));
  const double frac = ones / static_cast<double>(truths.size());
  r.baseline = std::max(frac, 1.0 - frac);
  r.calibration = calibration_split(r.probabilities, truths);
  r.lambda = s.lambda;
  r.truths = std::move(truths);
  return r;
}

}  // namespace

Stat describe(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("describe: no values");
  Stat s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

SamplerConfig protocol_config(const ObservedMatrix& x, std::size_t width, const Protocol& protocol,
                              std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.burn_in = protocol.burn_in;
  cfg.samples = protocol.samples;
  cfg.threads = protocol.threads;
  cfg.seed = seed;
  if (protocol.empirical_bayes) {
    const BernoulliPrior prior = empirical_bayes_prior(x, width);
    cfg.prior_z = prior;
    cfg.prior_u = prior;
  }
  return cfg;
}

FactorizationResult factorization_trial(std::size_t rows, std::size_t cols, std::size_t rank, double density,
                                        double flip, std::uint64_t seed, const Protocol& protocol) {
  const auto start = Clock::now();
  SyntheticSpec spec;
  spec.rows = rows;
  spec.cols = cols;
  spec.width = rank;
  spec.target_density = density;
  spec.seed = mix(seed, 0);
  const auto data = gen_random_boolean(spec);
  const BinaryMatrix noisy = apply_bitflip_noise(data.clean, flip, mix(seed, 1));
  const ObservedMatrix x = ObservedMatrix::from_binary(noisy);

  const auto summary = run(x, rank, protocol_config(x, rank, protocol, mix(seed, 2)));
  const BinaryMatrix estimate = reconstruct(summary);
  FactorizationResult r;
  r.error = reconstruction_error(data.clean, estimate);
  r.observed_error = reconstruction_error(noisy, estimate);
  r.lambda = summary.lambda;
  r.seconds = seconds_since(start);
  return r;
}

CompletionResult completion_trial(std::size_t rows, std::size_t cols, std::size_t rank, double observed_fraction,
                                  std::uint64_t seed, const Protocol& protocol, double density) {
  const auto start = Clock::now();
  SyntheticSpec spec;
  spec.rows = rows;
  spec.cols = cols;
  spec.width = rank;
  spec.target_density = density;
  spec.seed = mix(seed, 0);
  const auto data = gen_random_boolean(spec);
  const auto masked = mask_random(data.clean, observed_fraction, mix(seed, 1));

  const auto summary = run(masked.observed, rank, protocol_config(masked.observed, rank, protocol, mix(seed, 2)));
  std::vector<Bit> truths;
  truths.reserve(masked.held_out.size());
  for (const auto& c : masked.held_out) truths.push_back(data.clean(c.row, c.col));
  auto r = score_completion(summary, masked.held_out, std::move(truths));
  r.seconds = seconds_since(start);
  return r;
}

CompletionResult observed_completion_trial(const ObservedMatrix& x, std::size_t rank, double fraction,
                                           std::uint64_t seed, const Protocol& protocol) {
  const auto start = Clock::now();
  const auto split = observe_fraction_split(x, fraction, mix(seed, 1));
  const auto summary = run(split.train, rank, protocol_config(split.train, rank, protocol, mix(seed, 2)));
  auto r = score_completion(summary, split.test_cells, split.test_truth);
  r.seconds = seconds_since(start);
  return r;
}

DigitsResult digits_trial(std::size_t copies, double missing, const std::vector<std::size_t>& widths,
                          const std::vector<double>& code_priors, std::uint64_t seed, const Protocol& protocol) {
  if (widths.empty() || widths.size() != code_priors.size()) {
    throw std::invalid_argument("digits_trial: need one code prior per layer");
  }
  const auto start = Clock::now();
  const auto digits = calculator_digits(copies, 0.0, 17, 10, mix(seed, 0));
  const auto masked = mask_random(digits.clean, 1.0 - missing, mix(seed, 1));

  SamplerConfig base = protocol_config(masked.observed, widths[0], protocol, mix(seed, 2));
  const auto score = [&](const PosteriorSummary& bottom) {
    const auto probs = predict_plugin(bottom.z_mean, bottom.u_mean, bottom.lambda, masked.held_out);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const Cell c = masked.held_out[i];
      wrong += static_cast<Bit>(probs[i] >= 0.5) != digits.clean(c.row, c.col);
    }
    return static_cast<double>(wrong) / static_cast<double>(probs.size());
  };

  DigitsResult r;
  Architecture single{{widths[0]}, {BernoulliPrior(code_priors[0])}, {}};
  r.single_error = score(train_stack(masked.observed, single, base).layers.front());

  Architecture stack;
  stack.widths = widths;
  for (double p : code_priors) stack.code_priors.emplace_back(p);
  const auto trained = train_stack(masked.observed, stack, base);
  r.multi_error = score(trained.layers.front());
  r.multi_lambdas = trained.lambdas();
  r.seconds = seconds_since(start);
  return r;
}

}  // namespace ormachine::experiments
