#include "ormachine/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ormachine/error.hpp"
#include "ormachine/rng.hpp"
#include "packed.hpp"

namespace ormachine {

namespace {

void check_indices(std::size_t row, std::size_t l, std::size_t rows, std::size_t width) {
  if (row >= rows || l >= width) throw std::out_of_range("conditional score index out of range");
}

void check_shapes(const ObservedMatrix& x, const BinaryMatrix& z, const BinaryMatrix& u) {
  if (z.rows() != x.rows() || u.rows() != x.cols() || z.cols() != u.cols()) {
    throw std::invalid_argument("inconsistent shapes: X is " + std::to_string(x.rows()) + "x" +
                                std::to_string(x.cols()) + ", Z is " + std::to_string(z.rows()) + "x" +
                                std::to_string(z.cols()) + ", U is " + std::to_string(u.rows()) + "x" +
                                std::to_string(u.cols()));
  }
}

BinaryMatrix coin_flips(std::size_t rows, std::size_t width, std::uint64_t seed, std::uint32_t tag) {
  BinaryMatrix m(rows, width);
  for (std::size_t r = 0; r < rows; ++r) {
    CounterStream rng(seed, tag, static_cast<std::uint32_t>(r), kInitSweep);
    for (auto& b : m.row(r)) b = rng.bernoulli(0.5) ? 1 : 0;
  }
  return m;
}

void sample_row(std::span<Bit> row, const std::uint64_t* pos, const std::uint64_t* neg,
                const detail::ColumnMasks& masks, const double* eta_row, double eta, double lambda,
                CounterStream& rng, const std::uint64_t** scratch) {
  for (std::size_t l = 0; l < row.size(); ++l) {
    const int score = detail::packed_score(pos, neg, masks, row, l, scratch);
    const double prior = eta_row ? eta_row[l] : eta;
    const double accept = flip_probability(score, row[l], lambda, prior);
    if (rng.uniform() < accept) row[l] ^= 1;
  }
}

}  // namespace

int conditional_score(std::size_t n, std::size_t l, const BinaryMatrix& z, const BinaryMatrix& u,
                      const ObservedMatrix& x) {
  check_shapes(x, z, u);
  check_indices(n, l, z.rows(), z.cols());
  const auto zr = z.row(n);
  const auto xr = x.row(n);
  int acc = 0;
  for (std::size_t d = 0; d < x.cols(); ++d) {
    if (u(d, l) == 0) continue;
    bool explained = false;
    for (std::size_t k = 0; k < z.cols() && !explained; ++k) explained = k != l && zr[k] && u(d, k);
    if (explained) continue;
    acc += xr[d];
  }
  return acc;
}

int code_conditional_score(std::size_t d, std::size_t l, const BinaryMatrix& z, const BinaryMatrix& u,
                           const ObservedMatrix& x) {
  check_shapes(x, z, u);
  check_indices(d, l, u.rows(), u.cols());
  const auto ur = u.row(d);
  int acc = 0;
  for (std::size_t n = 0; n < x.rows(); ++n) {
    if (z(n, l) == 0) continue;
    bool explained = false;
    for (std::size_t k = 0; k < u.cols() && !explained; ++k) explained = k != l && ur[k] && z(n, k);
    if (explained) continue;
    acc += x(n, d);
  }
  return acc;
}

double flip_probability(int score, Bit current, double lambda, double eta) noexcept {
  const double s = lambda * static_cast<double>(score) + eta;
  const double log_ratio = -static_cast<double>(to_signed(current)) * s;
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

double update_lambda(std::size_t correct, std::size_t observed, double lambda_max) {
  if (observed == 0) throw DegenerateError("update_lambda: no observed cells");
  if (correct > observed) throw std::invalid_argument("update_lambda: correct count exceeds observed count");
  const double ratio = static_cast<double>(correct) / static_cast<double>(observed);
  const double clamped = std::clamp(ratio, 0.5, sigmoid(lambda_max));
  return std::clamp(logit(clamped), 0.0, lambda_max);
}

void SamplerConfig::validate() const {
  if (samples < 1) throw std::invalid_argument("sampler config: samples must be >= 1");
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) {
    throw std::invalid_argument("sampler config: lambda_max must be positive and finite");
  }
  if (!(lambda_init >= 0.0) || lambda_init > lambda_max) {
    throw std::invalid_argument("sampler config: lambda_init must lie in [0, lambda_max]");
  }
  if (!(convergence_tol >= 0.0)) throw std::invalid_argument("sampler config: convergence_tol must be >= 0");
  if (convergence_tol > 0.0 && convergence_patience < 1) {
    throw std::invalid_argument("sampler config: convergence_patience must be >= 1");
  }
}

unsigned resolve_threads(unsigned requested) noexcept {
  if (requested > 0) return requested;
#ifdef _OPENMP
  return static_cast<unsigned>(std::max(1, omp_get_num_procs()));
#else
  return std::max(1u, std::thread::hardware_concurrency());
#endif
}

SamplerState::SamplerState(ObservedMatrix x, std::size_t width, const SamplerConfig& config)
    : x_(std::move(x)), config_(config) {
  config_.validate();
  if (width < 1) throw std::invalid_argument("sampler: latent width must be >= 1");
  z_ = coin_flips(x_.rows(), width, config_.seed, stream_tag(config_.stream_salt, StreamMatrix::latent));
  u_ = coin_flips(x_.cols(), width, config_.seed, stream_tag(config_.stream_salt, StreamMatrix::code));
  lambda_ = config_.lambda_init;
  refresh_data_planes();
}

SamplerState::SamplerState(ObservedMatrix x, BinaryMatrix z, BinaryMatrix u, double lambda,
                           const SamplerConfig& config)
    : x_(std::move(x)), z_(std::move(z)), u_(std::move(u)), config_(config) {
  config_.validate();
  check_shapes(x_, z_, u_);
  if (z_.cols() < 1) throw std::invalid_argument("sampler: latent width must be >= 1");
  set_lambda(lambda);
  refresh_data_planes();
}

SamplerState::~SamplerState() = default;
SamplerState::SamplerState(SamplerState&&) noexcept = default;
SamplerState& SamplerState::operator=(SamplerState&&) noexcept = default;

SamplerState::SamplerState(const SamplerState& other)
    : x_(other.x_), z_(other.z_), u_(other.u_), config_(other.config_), lambda_(other.lambda_),
      sweep_(other.sweep_), latent_logits_(other.latent_logits_),
      packed_(std::make_unique<detail::PackedWorkspace>(*other.packed_)) {}

SamplerState& SamplerState::operator=(const SamplerState& other) {
  if (this != &other) *this = SamplerState(other);
  return *this;
}

void SamplerState::refresh_data_planes() {
  if (!packed_) packed_ = std::make_unique<detail::PackedWorkspace>();
  packed_->by_row = detail::pack_rows(x_);
  packed_->by_col = detail::pack_cols(x_);
}

void SamplerState::set_lambda(double lambda) {
  if (!(lambda >= 0.0) || lambda > config_.lambda_max) {
    throw std::invalid_argument("sampler: lambda must lie in [0, lambda_max]");
  }
  lambda_ = lambda;
}

void SamplerState::set_data(ObservedMatrix x) {
  if (x.rows() != x_.rows() || x.cols() != x_.cols()) throw std::invalid_argument("set_data: shape mismatch");
  x_ = std::move(x);
  refresh_data_planes();
}

void SamplerState::set_latent(BinaryMatrix z) {
  if (z.rows() != z_.rows() || z.cols() != z_.cols()) throw std::invalid_argument("set_latent: shape mismatch");
  z_ = std::move(z);
}

void SamplerState::set_codes(BinaryMatrix u) {
  if (u.rows() != u_.rows() || u.cols() != u_.cols()) throw std::invalid_argument("set_codes: shape mismatch");
  u_ = std::move(u);
}

void SamplerState::set_latent_logits(RealMatrix eta) {
  if (eta.rows() != z_.rows() || eta.cols() != z_.cols()) {
    throw std::invalid_argument("set_latent_logits: shape mismatch");
  }
  latent_logits_ = std::move(eta);
}

void SamplerState::clear_latent_logits() { latent_logits_.reset(); }

void SamplerState::update_latent_row(std::size_t n) {
  if (n >= z_.rows()) throw std::out_of_range("update_latent_row: row out of range");
  const auto masks = detail::pack_factor(u_);
  std::vector<const std::uint64_t*> scratch(masks.width);
  CounterStream rng(config_.seed, stream_tag(config_.stream_salt, StreamMatrix::latent),
                    static_cast<std::uint32_t>(n), sweep_);
  const double* eta_row = latent_logits_ ? latent_logits_->row(n).data() : nullptr;
  sample_row(z_.row(n), packed_->by_row.pos_row(n), packed_->by_row.neg_row(n), masks, eta_row,
             config_.prior_z.eta(), lambda_, rng, scratch.data());
}

void SamplerState::update_code_row(std::size_t d) {
  if (d >= u_.rows()) throw std::out_of_range("update_code_row: row out of range");
  const auto masks = detail::pack_factor(z_);
  std::vector<const std::uint64_t*> scratch(masks.width);
  CounterStream rng(config_.seed, stream_tag(config_.stream_salt, StreamMatrix::code),
                    static_cast<std::uint32_t>(d), sweep_);
  sample_row(u_.row(d), packed_->by_col.pos_row(d), packed_->by_col.neg_row(d), masks, nullptr,
             config_.prior_u.eta(), lambda_, rng, scratch.data());
}

void SamplerState::half_sweep(bool latent) {
  BinaryMatrix& factor = latent ? z_ : u_;
  const detail::SignedPlanes& planes = latent ? packed_->by_row : packed_->by_col;
  const auto masks = detail::pack_factor(latent ? u_ : z_);
  const std::uint32_t tag =
      stream_tag(config_.stream_salt, latent ? StreamMatrix::latent : StreamMatrix::code);
  const double eta = latent ? config_.prior_z.eta() : config_.prior_u.eta();
  const RealMatrix* logits = latent && latent_logits_ ? &*latent_logits_ : nullptr;
  const auto rows = static_cast<std::ptrdiff_t>(factor.rows());
  const unsigned threads = resolve_threads(config_.threads);

#pragma omp parallel num_threads(threads)
  {
    std::vector<const std::uint64_t*> scratch(masks.width);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
      const auto r = static_cast<std::size_t>(i);
      CounterStream rng(config_.seed, tag, static_cast<std::uint32_t>(r), sweep_);
      sample_row(factor.row(r), planes.pos_row(r), planes.neg_row(r), masks,
                 logits ? logits->row(r).data() : nullptr, eta, lambda_, rng, scratch.data());
    }
  }
}

std::size_t SamplerState::correct_count() const {
  return detail::packed_correct(packed_->by_row, z_, detail::pack_factor(u_), resolve_threads(config_.threads));
}

void SamplerState::sweep(PosteriorTrace& trace, bool accumulate) {
  half_sweep(true);
  if (!config_.freeze_codes) half_sweep(false);
  // With nothing observed the likelihood is flat and lambda is irrelevant.
  if (config_.lambda_update && x_.observed_count() > 0) {
    lambda_ = update_lambda(correct_count(), x_.observed_count(), config_.lambda_max);
  }
  ++sweep_;
  record(trace, accumulate);
}

PosteriorTrace SamplerState::make_trace() const {
  PosteriorTrace t;
  t.z_sum.assign(z_.size(), 0);
  t.u_sum.assign(u_.size(), 0);
  return t;
}

void SamplerState::record(PosteriorTrace& trace, bool accumulate) const {
  trace.lambda_trace.push_back(lambda_);
  if (!accumulate) return;
  if (trace.z_sum.size() != z_.size() || trace.u_sum.size() != u_.size()) {
    throw std::invalid_argument("posterior trace does not match the sampler state");
  }
  for (std::size_t i = 0; i < z_.size(); ++i) trace.z_sum[i] += z_.cells()[i];
  for (std::size_t i = 0; i < u_.size(); ++i) trace.u_sum[i] += u_.cells()[i];
  ++trace.n_samples;
  if (config_.retain_every > 0 && trace.n_samples % config_.retain_every == 0) {
    trace.retained.push_back({z_, u_, lambda_});
  }
}

PosteriorSummary SamplerState::summarize(const PosteriorTrace& trace, std::size_t burn_in_sweeps) const {
  if (trace.n_samples == 0) throw std::invalid_argument("summarize: no posterior samples recorded");
  PosteriorSummary s;
  const double inv = 1.0 / static_cast<double>(trace.n_samples);
  s.z_mean = RealMatrix(z_.rows(), z_.cols());
  s.u_mean = RealMatrix(u_.rows(), u_.cols());
  for (std::size_t i = 0; i < z_.size(); ++i) s.z_mean.cells()[i] = trace.z_sum[i] * inv;
  for (std::size_t i = 0; i < u_.size(); ++i) s.u_mean.cells()[i] = trace.u_sum[i] * inv;
  s.z_map = s.z_mean.rounded();
  s.u_map = s.u_mean.rounded();
  s.lambda_trace = trace.lambda_trace;
  s.lambda = lambda_;
  s.n_samples = trace.n_samples;
  s.burn_in_sweeps = burn_in_sweeps;
  s.samples = trace.retained;
  s.config = config_;
  return s;
}

PosteriorSummary run(SamplerState& state) {
  const SamplerConfig& cfg = state.config();
  PosteriorTrace trace = state.make_trace();
  std::size_t burned = 0;
  std::size_t calm = 0;
  for (; burned < cfg.burn_in; ++burned) {
    const double before = state.lambda();
    state.sweep(trace, false);
    if (cfg.convergence_tol > 0.0) {
      calm = std::abs(state.lambda() - before) < cfg.convergence_tol ? calm + 1 : 0;
      if (calm >= cfg.convergence_patience) {
        ++burned;
        break;
      }
    }
  }
  for (std::size_t s = 0; s < cfg.samples; ++s) state.sweep(trace, true);
  return state.summarize(trace, burned);
}

PosteriorSummary run(const ObservedMatrix& x, std::size_t width, const SamplerConfig& config) {
  SamplerState state(x, width, config);
  return run(state);
}

}  // namespace ormachine
