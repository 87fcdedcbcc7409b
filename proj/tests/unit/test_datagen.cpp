#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "ormachine/datagen.hpp"

using namespace ormachine;

TEST(DensityToBernoulli, ClosedForm) {
  EXPECT_NEAR(density_to_bernoulli(1, 0.36), 0.6, 1e-12);
  EXPECT_NEAR(density_to_bernoulli(5, 0.5), 0.359791, 5e-6);
  EXPECT_NEAR(density_to_bernoulli(7, 0.7), 0.397514, 5e-6);
  for (std::size_t l : {1u, 2u, 5u, 7u, 12u})
    for (double t : {0.05, 0.3, 0.5, 0.7, 0.95}) {
      const double p = density_to_bernoulli(l, t);
      EXPECT_NEAR(1.0 - std::pow(1.0 - p * p, static_cast<double>(l)), t, 1e-12);
    }
  EXPECT_THROW(density_to_bernoulli(0, 0.5), std::invalid_argument);
  EXPECT_THROW(density_to_bernoulli(3, 1.0), std::invalid_argument);
}

TEST(DensityToBernoulli, EmpiricalDensityOnLargeProduct) {
  SyntheticSpec spec;
  spec.rows = 1000;
  spec.cols = 1000;
  spec.width = 5;
  spec.seed = 17;
  const auto data = gen_random_boolean(spec);
  const double density = static_cast<double>(data.clean.count_ones()) / 1e6;
  EXPECT_NEAR(density, 0.5, 0.02);
}

TEST(GenRandomBoolean, IsProductOfFactors) {
  SyntheticSpec spec;
  spec.rows = 50;
  spec.cols = 40;
  spec.width = 4;
  spec.seed = 3;
  const auto data = gen_random_boolean(spec);
  EXPECT_EQ(data.clean, boolean_product(data.z, data.u));
  EXPECT_EQ(data.clean, gen_random_boolean(spec).clean);
  spec.seed = 4;
  EXPECT_NE(data.clean, gen_random_boolean(spec).clean);
}

TEST(GenRandomBoolean, ForcedFactorDensities) {
  SyntheticSpec spec;
  spec.rows = 20;
  spec.cols = 30;
  spec.width = 3;
  spec.factor_density = 1.0;
  EXPECT_EQ(gen_random_boolean(spec).clean.count_ones(), 600u);
  spec.factor_density = 0.0;
  EXPECT_EQ(gen_random_boolean(spec).clean.count_ones(), 0u);
}

TEST(GenRandomBoolean, DensityWithinBinomialBound) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SyntheticSpec spec;
    spec.rows = 300;
    spec.cols = 300;
    spec.width = 7;
    spec.target_density = 0.7;
    spec.seed = seed;
    const double density = static_cast<double>(gen_random_boolean(spec).clean.count_ones()) / 9e4;
    // Rows and columns share factors, so allow for the correlated fluctuation.
    EXPECT_NEAR(density, 0.7, 0.05);
  }
}

TEST(BitflipNoise, Examples) {
  SyntheticSpec spec;
  spec.rows = 1000;
  spec.cols = 1000;
  spec.width = 3;
  const auto x = gen_random_boolean(spec).clean;
  EXPECT_EQ(apply_bitflip_noise(x, 0.0, 1), x);
  BinaryMatrix comp = x;
  for (auto& b : comp.cells()) b ^= 1;
  EXPECT_EQ(apply_bitflip_noise(x, 1.0, 1), comp);
  const auto noisy = apply_bitflip_noise(x, 0.3, 2);
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < x.size(); ++i) flipped += x.cells()[i] != noisy.cells()[i];
  EXPECT_GE(flipped, 297000u);
  EXPECT_LE(flipped, 303000u);
}

TEST(BitflipNoise, RejectsMissingCells) {
  EXPECT_THROW(apply_bitflip_noise(ObservedMatrix(2, 2), 0.1, 0), std::invalid_argument);
  const ObservedMatrix full(1, 2, {1, -1});
  EXPECT_EQ(apply_bitflip_noise(full, 0.0, 0), full);
}

TEST(MaskRandom, ExactCounts) {
  const BinaryMatrix x2(2, 2, {1, 0, 1, 1});
  EXPECT_EQ(mask_random(x2, 0.5, 0).observed.observed_count(), 2u);
  EXPECT_EQ(mask_random(x2, 1.0, 0).observed.missing_count(), 0u);
  const BinaryMatrix big(250, 250);
  EXPECT_EQ(mask_random(big, 0.02, 1).observed.observed_count(), 1250u);
  EXPECT_THROW(mask_random(x2, 0.05, 0), std::invalid_argument);
}

TEST(MaskRandom, PartitionLosesNothing) {
  SyntheticSpec spec;
  spec.rows = 30;
  spec.cols = 20;
  spec.width = 3;
  const auto x = gen_random_boolean(spec).clean;
  const auto m = mask_random(x, 0.35, 8);
  EXPECT_EQ(m.truth, x);
  std::set<std::pair<std::size_t, std::size_t>> held;
  for (const auto& c : m.held_out) {
    EXPECT_TRUE(m.observed.is_missing(c.row, c.col));
    held.insert({c.row, c.col});
  }
  EXPECT_EQ(held.size(), m.held_out.size());
  EXPECT_EQ(held.size() + m.observed.observed_count(), x.size());
  for (std::size_t n = 0; n < 30; ++n)
    for (std::size_t d = 0; d < 20; ++d)
      if (!m.observed.is_missing(n, d)) EXPECT_EQ(m.observed(n, d), to_signed(x(n, d)));
}

TEST(CalculatorDigits, SegmentStructure) {
  const auto data = calculator_digits(1);
  ASSERT_EQ(data.x.rows(), 10u);
  ASSERT_EQ(data.x.cols(), 170u);
  EXPECT_EQ(data.clean, boolean_product(data.membership, data.segments.transposed()));

  std::vector<std::size_t> pixels(10, 0);
  for (std::size_t k = 0; k < 10; ++k)
    for (std::size_t p = 0; p < 170; ++p) pixels[data.labels[k]] += data.clean(k, p);
  for (std::size_t k = 0; k < 10; ++k)
    if (k != 1) EXPECT_GT(pixels[k], pixels[1]);
  for (std::size_t k = 0; k < 10; ++k)
    if (k != 8) EXPECT_LT(pixels[k], pixels[8]);

  // Digit 1 lights exactly the two right-hand segments.
  const auto seg = digit_segments();
  for (std::size_t s = 0; s < 7; ++s) EXPECT_EQ(seg(1, s), (s == 1 || s == 2) ? 1 : 0);
}

TEST(CalculatorDigits, SegmentsAreDisjointBars) {
  const auto seg = segment_bitmaps(17, 10);
  for (std::size_t p = 0; p < 170; ++p) {
    int owners = 0;
    for (std::size_t s = 0; s < 7; ++s) owners += seg(s, p);
    EXPECT_LE(owners, 1);
  }
  // Top bar: row 0, columns 1..8.
  for (std::size_t c = 0; c < 10; ++c) EXPECT_EQ(seg(0, c), (c >= 1 && c <= 8) ? 1 : 0);
  EXPECT_THROW(segment_bitmaps(4, 3), std::invalid_argument);
  EXPECT_THROW(segment_bitmaps(5, 2), std::invalid_argument);
  EXPECT_NO_THROW(segment_bitmaps(5, 3));
}

TEST(CalculatorDigits, LandscapeTransposesEachImage) {
  const auto port = calculator_digits(1, 0.0, 17, 10, 0, DigitOrientation::portrait);
  const auto land = calculator_digits(1, 0.0, 17, 10, 0, DigitOrientation::landscape);
  for (std::size_t k = 0; k < 10; ++k)
    for (std::size_t r = 0; r < 17; ++r)
      for (std::size_t c = 0; c < 10; ++c) EXPECT_EQ(port.clean(k, r * 10 + c), land.clean(k, c * 17 + r));
}

TEST(CalculatorDigits, CopiesAndNoise) {
  const auto data = calculator_digits(5, 0.1, 17, 10, 4);
  EXPECT_EQ(data.x.rows(), 50u);
  EXPECT_EQ(data.labels[23], 3);
  std::size_t flipped = 0;
  for (std::size_t n = 0; n < 50; ++n)
    for (std::size_t p = 0; p < 170; ++p) flipped += data.x(n, p) != to_signed(data.clean(n, p));
  EXPECT_NEAR(flipped / 8500.0, 0.1, 0.02);
}

TEST(EmpiricalBayes, ClampedPrior) {
  EXPECT_NEAR(empirical_bayes_prior(ObservedMatrix(2, 2, {-1, -1, -1, -1}), 3).p(), 0.001, 1e-12);
  EXPECT_NEAR(empirical_bayes_prior(ObservedMatrix(2, 2, {1, 1, 1, 1}), 3).p(), 0.999, 1e-12);
  const auto p = empirical_bayes_prior(ObservedMatrix(2, 2, {1, -1, 0, 0}), 1).p();
  EXPECT_NEAR(p, std::sqrt(0.5), 1e-12);
}
