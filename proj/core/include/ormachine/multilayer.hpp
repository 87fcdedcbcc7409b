#pragma once

// Stacked OrMachines: layer k factorises the latent matrix Z of layer k-1.
//
// Training follows a layer-wise schedule. During burn-in the layers are swept
// round-robin, one sweep each, with every layer's data set to the current hard
// Z of the layer below. Afterwards each layer in turn is sampled while the
// others are held at their MAP estimates.
//
// Coupling: while layer k+1 is fixed, the prior logit of z[n][l] in layer k is
// replaced by the logit of layer k+1's predictive probability for that cell.

#include <cstddef>
#include <vector>

#include "ormachine/model.hpp"
#include "ormachine/predict.hpp"
#include "ormachine/sampler.hpp"

namespace ormachine {

struct Architecture {
  std::vector<std::size_t> widths;
  /// One code prior per layer.
  std::vector<BernoulliPrior> code_priors;
  /// Optional per-layer settings (priors, lambda handling). When empty every
  /// layer uses the base config with its code prior from code_priors.
  std::vector<SamplerConfig> layer_configs;

  /// Throws std::invalid_argument unless K >= 1, all widths >= 1 and the
  /// per-layer vectors have K entries.
  void validate() const;
};

struct StackSummary {
  std::vector<PosteriorSummary> layers;

  std::size_t depth() const noexcept { return layers.size(); }
  std::vector<double> lambdas() const;
};

/// burn_in and samples of `base` drive the schedule; seed and threads are
/// shared by every layer.
StackSummary train_stack(const ObservedMatrix& x, const Architecture& architecture, const SamplerConfig& base);

/// Mean-field propagation of a one-hot activation of unit `unit` in layer
/// `layer` (0-based) down to the data layer. Returns the probability of each
/// observed feature being one. Throws std::out_of_range on bad indices.
std::vector<double> feed_forward(const StackSummary& stack, std::size_t layer, std::size_t unit);

/// Plug-in predictive probabilities for the missing cells of x, from the
/// bottom layer's posterior means.
PredictionReport impute(const StackSummary& stack, const ObservedMatrix& x);

}  // namespace ormachine
