#include "ormachine/multilayer.hpp"

#include <stdexcept>
#include <string>

namespace ormachine {

namespace {

SamplerConfig layer_config(const Architecture& arch, const SamplerConfig& base, std::size_t k) {
  SamplerConfig cfg = base;
  if (!arch.layer_configs.empty()) {
    cfg = arch.layer_configs[k];
    cfg.burn_in = base.burn_in;
    cfg.samples = base.samples;
    cfg.seed = base.seed;
    cfg.threads = base.threads;
  } else {
    cfg.prior_u = arch.code_priors[k];
  }
  cfg.stream_salt = static_cast<std::uint32_t>(k);
  return cfg;
}

// Prior logits for layer k's Z implied by the current state of layer k + 1.
RealMatrix upper_logits(const SamplerState& upper) {
  const BinaryMatrix& z = upper.latent();
  const BinaryMatrix& u = upper.codes();
  const double lambda = upper.lambda();
  RealMatrix eta(z.rows(), u.rows());
  for (std::size_t n = 0; n < z.rows(); ++n) {
    const auto zr = z.row(n);
    for (std::size_t l = 0; l < u.rows(); ++l) {
      const auto ur = u.row(l);
      bool on = false;
      for (std::size_t m = 0; m < zr.size() && !on; ++m) on = zr[m] && ur[m];
      eta(n, l) = on ? lambda : -lambda;
    }
  }
  return eta;
}

}  // namespace

void Architecture::validate() const {
  if (widths.empty()) throw std::invalid_argument("architecture: at least one layer is required");
  for (std::size_t w : widths) {
    if (w < 1) throw std::invalid_argument("architecture: layer widths must be >= 1");
  }
  if (code_priors.size() != widths.size()) {
    throw std::invalid_argument("architecture: expected " + std::to_string(widths.size()) + " code priors, got " +
                                std::to_string(code_priors.size()));
  }
  if (!layer_configs.empty() && layer_configs.size() != widths.size()) {
    throw std::invalid_argument("architecture: layer config count must match the number of layers");
  }
}

std::vector<double> StackSummary::lambdas() const {
  std::vector<double> out;
  for (const auto& l : layers) out.push_back(l.lambda);
  return out;
}

StackSummary train_stack(const ObservedMatrix& x, const Architecture& architecture, const SamplerConfig& base) {
  architecture.validate();
  base.validate();
  const std::size_t depth = architecture.widths.size();

  std::vector<SamplerState> layers;
  layers.reserve(depth);
  for (std::size_t k = 0; k < depth; ++k) {
    const SamplerConfig cfg = layer_config(architecture, base, k);
    ObservedMatrix data = k == 0 ? x : ObservedMatrix::from_binary(layers[k - 1].latent());
    layers.emplace_back(std::move(data), architecture.widths[k], cfg);
  }
  std::vector<PosteriorTrace> traces;
  for (const auto& layer : layers) traces.push_back(layer.make_trace());

  const auto prepare = [&](std::size_t k) {
    if (k > 0) layers[k].set_data(ObservedMatrix::from_binary(layers[k - 1].latent()));
    if (k + 1 < depth) layers[k].set_latent_logits(upper_logits(layers[k + 1]));
  };

  for (std::size_t it = 0; it < base.burn_in; ++it) {
    for (std::size_t k = 0; k < depth; ++k) {
      prepare(k);
      layers[k].sweep(traces[k], false);
    }
  }

  StackSummary out;
  for (std::size_t k = 0; k < depth; ++k) {
    prepare(k);
    for (std::size_t s = 0; s < base.samples; ++s) layers[k].sweep(traces[k], true);
    out.layers.push_back(layers[k].summarize(traces[k], base.burn_in));
    layers[k].set_latent(out.layers.back().z_map);
    layers[k].set_codes(out.layers.back().u_map);
  }
  return out;
}

std::vector<double> feed_forward(const StackSummary& stack, std::size_t layer, std::size_t unit) {
  if (layer >= stack.depth()) throw std::out_of_range("feed_forward: layer index out of range");
  const RealMatrix& top_codes = stack.layers[layer].u_mean;
  if (unit >= top_codes.cols()) throw std::out_of_range("feed_forward: unit index out of range");

  std::vector<double> means(top_codes.cols(), 0.0);
  means[unit] = 1.0;
  for (std::size_t k = layer + 1; k-- > 0;) {
    const RealMatrix& codes = stack.layers[k].u_mean;
    const double sigma = sigmoid(stack.layers[k].lambda);
    std::vector<double> below(codes.rows());
    for (std::size_t d = 0; d < codes.rows(); ++d) {
      const auto ur = codes.row(d);
      double none = 1.0;
      for (std::size_t l = 0; l < ur.size(); ++l) none *= 1.0 - means[l] * ur[l];
      const double q = 1.0 - none;
      below[d] = sigma * q + (1.0 - sigma) * (1.0 - q);
    }
    means = std::move(below);
  }
  return means;
}

PredictionReport impute(const StackSummary& stack, const ObservedMatrix& x) {
  if (stack.depth() == 0) throw std::invalid_argument("impute: empty stack");
  const PosteriorSummary& bottom = stack.layers.front();
  if (bottom.z_mean.rows() != x.rows() || bottom.u_mean.rows() != x.cols()) {
    throw std::invalid_argument("impute: data shape does not match the trained stack");
  }
  std::vector<Cell> cells;
  for (std::size_t n = 0; n < x.rows(); ++n)
    for (std::size_t d = 0; d < x.cols(); ++d)
      if (x.is_missing(n, d)) cells.push_back({n, d});
  auto probs = predict_plugin(bottom.z_mean, bottom.u_mean, bottom.lambda, cells);
  return make_report(std::move(cells), std::move(probs), std::nullopt);
}

}  // namespace ormachine
