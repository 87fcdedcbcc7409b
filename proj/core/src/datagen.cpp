#include "ormachine/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ormachine/rng.hpp"

namespace ormachine {

namespace {

// Stream salts for the generators, disjoint from the small salts used by samplers.
constexpr std::uint32_t kSaltFactors = 0x40000000u;
constexpr std::uint32_t kSaltNoise = 0x40000001u;
constexpr std::uint32_t kSaltMask = 0x40000002u;

BinaryMatrix bernoulli_matrix(std::size_t rows, std::size_t cols, double p, std::uint64_t seed, std::uint32_t tag) {
  BinaryMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    CounterStream rng(seed, tag, static_cast<std::uint32_t>(r), 0);
    for (auto& b : m.row(r)) b = rng.bernoulli(p) ? 1 : 0;
  }
  return m;
}

}  // namespace

double density_to_bernoulli(std::size_t width, double target) {
  if (width < 1) throw std::invalid_argument("density_to_bernoulli: width must be >= 1");
  if (!(target > 0.0 && target < 1.0)) throw std::invalid_argument("density_to_bernoulli: target must lie in (0, 1)");
  return std::sqrt(1.0 - std::pow(1.0 - target, 1.0 / static_cast<double>(width)));
}

BernoulliPrior empirical_bayes_prior(const ObservedMatrix& x, std::size_t width) {
  if (width < 1) throw std::invalid_argument("empirical_bayes_prior: width must be >= 1");
  const double density = x.observed_density();
  const double p = std::sqrt(1.0 - std::pow(1.0 - density, 1.0 / static_cast<double>(width)));
  return BernoulliPrior(std::clamp(p, 0.001, 0.999));
}

void SyntheticSpec::validate() const {
  if (rows < 1 || cols < 1 || width < 1) throw std::invalid_argument("SyntheticSpec: dimensions must be >= 1");
  if (!factor_density && !(target_density > 0.0 && target_density < 1.0)) {
    throw std::invalid_argument("SyntheticSpec: target density must lie in (0, 1)");
  }
  if (factor_density && !(*factor_density >= 0.0 && *factor_density <= 1.0)) {
    throw std::invalid_argument("SyntheticSpec: factor density must lie in [0, 1]");
  }
  if (!(flip_prob >= 0.0 && flip_prob <= 0.5)) throw std::invalid_argument("SyntheticSpec: flip probability must lie in [0, 0.5]");
  if (!(observed_fraction > 0.0 && observed_fraction <= 1.0)) {
    throw std::invalid_argument("SyntheticSpec: observed fraction must lie in (0, 1]");
  }
}

SyntheticFactors gen_random_boolean(const SyntheticSpec& spec) {
  spec.validate();
  const double p = spec.factor_density ? *spec.factor_density : density_to_bernoulli(spec.width, spec.target_density);
  SyntheticFactors out;
  out.z = bernoulli_matrix(spec.rows, spec.width, p, spec.seed, stream_tag(kSaltFactors, StreamMatrix::latent));
  out.u = bernoulli_matrix(spec.cols, spec.width, p, spec.seed, stream_tag(kSaltFactors, StreamMatrix::code));
  out.clean = boolean_product(out.z, out.u);
  return out;
}

BinaryMatrix apply_bitflip_noise(const BinaryMatrix& x, double flip_prob, std::uint64_t seed) {
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) throw std::invalid_argument("apply_bitflip_noise: probability must lie in [0, 1]");
  BinaryMatrix out = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    CounterStream rng(seed, stream_tag(kSaltNoise, StreamMatrix::latent), static_cast<std::uint32_t>(r), 0);
    for (auto& b : out.row(r)) {
      if (rng.bernoulli(flip_prob)) b ^= 1;
    }
  }
  return out;
}

ObservedMatrix apply_bitflip_noise(const ObservedMatrix& x, double flip_prob, std::uint64_t seed) {
  if (x.missing_count() > 0) throw std::invalid_argument("apply_bitflip_noise: input has missing cells; apply noise before masking");
  return ObservedMatrix::from_binary(apply_bitflip_noise(x.to_binary(), flip_prob, seed));
}

MaskedMatrix mask_random(const BinaryMatrix& x, double observed_fraction, std::uint64_t seed) {
  if (!(observed_fraction > 0.0 && observed_fraction <= 1.0)) {
    throw std::invalid_argument("mask_random: fraction must lie in (0, 1]");
  }
  const std::size_t total = x.size();
  const auto keep = static_cast<std::size_t>(std::llround(observed_fraction * static_cast<double>(total)));
  if (keep == 0) throw std::invalid_argument("mask_random: fraction leaves no observed cells");

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterStream rng(seed, stream_tag(kSaltMask, StreamMatrix::latent), 0, 0);
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
    std::swap(order[i], order[j]);
  }
  std::vector<Bit> chosen(total, 0);
  for (std::size_t i = 0; i < keep; ++i) chosen[order[i]] = 1;

  std::vector<Trit> cells(total, kMissing);
  MaskedMatrix out{ObservedMatrix{}, {}, x};
  out.held_out.reserve(total - keep);
  for (std::size_t i = 0; i < total; ++i) {
    if (chosen[i]) cells[i] = to_trit(x.cells()[i]);
    else out.held_out.push_back({i / x.cols(), i % x.cols()});
  }
  out.observed = ObservedMatrix(x.rows(), x.cols(), std::move(cells));
  return out;
}

BinaryMatrix digit_segments() {
  //                     a  b  c  d  e  f  g
  return BinaryMatrix(10, 7,
                      {1, 1, 1, 1, 1, 1, 0,    // 0
                       0, 1, 1, 0, 0, 0, 0,    // 1
                       1, 1, 0, 1, 1, 0, 1,    // 2
                       1, 1, 1, 1, 0, 0, 1,    // 3
                       0, 1, 1, 0, 0, 1, 1,    // 4
                       1, 0, 1, 1, 0, 1, 1,    // 5
                       1, 0, 1, 1, 1, 1, 1,    // 6
                       1, 1, 1, 0, 0, 0, 0,    // 7
                       1, 1, 1, 1, 1, 1, 1,    // 8
                       1, 1, 1, 1, 0, 1, 1});  // 9
}

BinaryMatrix segment_bitmaps(std::size_t height, std::size_t width, DigitOrientation orientation) {
  if (height < 5 || width < 3) throw std::invalid_argument("segment_bitmaps: grid must be at least 5x3");
  const std::size_t mid = height / 2;
  BinaryMatrix seg(7, height * width);
  const auto set = [&](std::size_t s, std::size_t r, std::size_t c) {
    const std::size_t idx = orientation == DigitOrientation::portrait ? r * width + c : c * height + r;
    seg(s, idx) = 1;
  };
  for (std::size_t c = 1; c + 1 < width; ++c) {
    set(0, 0, c);           // a
    set(3, height - 1, c);  // d
    set(6, mid, c);         // g
  }
  for (std::size_t r = 1; r < mid; ++r) {
    set(1, r, width - 1);  // b
    set(5, r, 0);          // f
  }
  for (std::size_t r = mid + 1; r + 1 < height; ++r) {
    set(2, r, width - 1);  // c
    set(4, r, 0);          // e
  }
  return seg;
}

DigitsData calculator_digits(std::size_t copies, double flip_prob, std::size_t height, std::size_t width,
                             std::uint64_t seed, DigitOrientation orientation) {
  if (copies < 1) throw std::invalid_argument("calculator_digits: copies must be >= 1");
  DigitsData out;
  out.membership = digit_segments();
  out.segments = segment_bitmaps(height, width, orientation);
  const BinaryMatrix glyphs = boolean_product(out.membership, out.segments.transposed());

  BinaryMatrix clean(10 * copies, height * width);
  for (std::size_t k = 0; k < copies; ++k) {
    for (std::size_t digit = 0; digit < 10; ++digit) {
      std::copy_n(glyphs.row(digit).begin(), glyphs.cols(), clean.row(k * 10 + digit).begin());
      out.labels.push_back(static_cast<int>(digit));
    }
  }
  out.clean = clean;
  out.x = ObservedMatrix::from_binary(flip_prob > 0.0 ? apply_bitflip_noise(clean, flip_prob, seed) : clean);
  return out;
}

}  // namespace ormachine
