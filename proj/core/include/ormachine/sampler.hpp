#pragma once

// Metropolised Gibbs sampler for a single OrMachine layer.
//
// A sweep updates every row of Z in parallel (U frozen), then every row of U in
// parallel (Z frozen), then sets the dispersion to its maximum-likelihood
// value. Within a row the L entries are visited in ascending order.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "ormachine/model.hpp"

namespace ormachine {

namespace detail {
struct PackedWorkspace;
}

/// Evidence sum for z[n][l]: sum_d x~[n][d] u[d][l] prod_{l' != l} (1 - z[n][l'] u[d][l']),
/// skipping features where u[d][l] = 0 or where another active code already
/// explains the cell. Independent of the current z[n][l].
int conditional_score(std::size_t n, std::size_t l, const BinaryMatrix& z, const BinaryMatrix& u,
                      const ObservedMatrix& x);

/// The same for u[d][l], with the roles of Z and U swapped.
int code_conditional_score(std::size_t d, std::size_t l, const BinaryMatrix& z, const BinaryMatrix& u,
                           const ObservedMatrix& x);

/// Metropolis acceptance of the deterministic flip proposal: with
/// s = lambda * score + eta and p(1|.) = sigma(s), returns
/// min(1, exp(-(2 current - 1) s)) = min(1, p_proposed / p_current).
double flip_probability(int score, Bit current, double lambda, double eta) noexcept;

/// Dispersion MLE over observed cells: logit(clamp(correct/observed, 1/2, sigma(lambda_max))).
/// Throws DegenerateError when observed == 0 and std::invalid_argument when correct > observed.
double update_lambda(std::size_t correct, std::size_t observed, double lambda_max = kDefaultLambdaMax);

struct SamplerConfig {
  std::size_t burn_in = 100;
  std::size_t samples = 100;
  std::uint64_t seed = 0;
  bool lambda_update = true;
  double lambda_init = logit(0.95);
  double lambda_max = kDefaultLambdaMax;
  BernoulliPrior prior_z{0.5};
  BernoulliPrior prior_u{0.5};
  /// Burn-in ends early once |delta lambda| < convergence_tol for
  /// convergence_patience consecutive sweeps. 0 disables early stopping.
  double convergence_tol = 0.0;
  std::size_t convergence_patience = 5;
  /// Worker threads for the row-parallel half sweeps; 0 means all cores.
  unsigned threads = 1;
  /// Hold U at its initial value (codes supplied by the caller).
  bool freeze_codes = false;
  /// Keep every k-th post burn-in state for Monte-Carlo prediction; 0 keeps none.
  std::size_t retain_every = 0;
  /// Mixed into the stream tag so that stacked layers draw from distinct streams.
  std::uint32_t stream_salt = 0;

  /// Throws std::invalid_argument on out-of-range settings.
  void validate() const;
};

/// One retained posterior sample.
struct FactorSample {
  BinaryMatrix z;
  BinaryMatrix u;
  double lambda = 0.0;
};

/// Running counts of sampled ones plus the per-sweep dispersion trace.
struct PosteriorTrace {
  std::vector<std::uint32_t> z_sum;
  std::vector<std::uint32_t> u_sum;
  std::size_t n_samples = 0;
  std::vector<double> lambda_trace;
  std::vector<FactorSample> retained;
};

struct PosteriorSummary {
  RealMatrix z_mean;
  RealMatrix u_mean;
  BinaryMatrix z_map;
  BinaryMatrix u_map;
  std::vector<double> lambda_trace;
  double lambda = 0.0;
  std::size_t n_samples = 0;
  std::size_t burn_in_sweeps = 0;
  std::vector<FactorSample> samples;
  SamplerConfig config;
};

class SamplerState {
 public:
  /// Z and U drawn as fair coins from the initialisation streams.
  SamplerState(ObservedMatrix x, std::size_t width, const SamplerConfig& config);
  /// Explicit starting point. Throws std::invalid_argument on inconsistent shapes.
  SamplerState(ObservedMatrix x, BinaryMatrix z, BinaryMatrix u, double lambda, const SamplerConfig& config);
  ~SamplerState();
  SamplerState(SamplerState&&) noexcept;
  SamplerState& operator=(SamplerState&&) noexcept;
  SamplerState(const SamplerState&);
  SamplerState& operator=(const SamplerState&);

  const ObservedMatrix& data() const noexcept { return x_; }
  const BinaryMatrix& latent() const noexcept { return z_; }
  const BinaryMatrix& codes() const noexcept { return u_; }
  const SamplerConfig& config() const noexcept { return config_; }
  std::size_t width() const noexcept { return z_.cols(); }
  double lambda() const noexcept { return lambda_; }
  std::uint32_t sweep_index() const noexcept { return sweep_; }

  void set_lambda(double lambda);
  /// Replace the observations (same shape).
  void set_data(ObservedMatrix x);
  void set_latent(BinaryMatrix z);
  void set_codes(BinaryMatrix u);
  /// Per-entry prior logits for Z replacing prior_z (N x L). Used to couple stacked layers.
  void set_latent_logits(RealMatrix eta);
  void clear_latent_logits();

  /// Sequential Metropolised Gibbs pass over row n of Z (resp. row d of U),
  /// drawing from that row's stream for the current sweep index.
  void update_latent_row(std::size_t n);
  void update_code_row(std::size_t d);

  /// Full sweep; appends lambda to the trace and, when accumulate is set,
  /// adds the resulting state to the posterior counters.
  void sweep(PosteriorTrace& trace, bool accumulate);

  /// Observed cells predicted correctly by the current (Z, U).
  std::size_t correct_count() const;

  PosteriorTrace make_trace() const;
  PosteriorSummary summarize(const PosteriorTrace& trace, std::size_t burn_in_sweeps) const;

 private:
  void refresh_data_planes();
  void half_sweep(bool latent);
  void record(PosteriorTrace& trace, bool accumulate) const;

  ObservedMatrix x_;
  BinaryMatrix z_;
  BinaryMatrix u_;
  SamplerConfig config_;
  double lambda_ = 0.0;
  std::uint32_t sweep_ = 0;
  std::optional<RealMatrix> latent_logits_;
  std::unique_ptr<detail::PackedWorkspace> packed_;
};

/// Initialise at random, burn in, then draw config.samples sweeps.
/// Throws std::invalid_argument when width < 1 or the config is invalid.
PosteriorSummary run(const ObservedMatrix& x, std::size_t width, const SamplerConfig& config);

/// As run(), starting from the supplied state.
PosteriorSummary run(SamplerState& state);

/// Resolve a thread request (0 = all cores).
unsigned resolve_threads(unsigned requested) noexcept;

}  // namespace ormachine
