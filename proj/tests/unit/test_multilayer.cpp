#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "ormachine/datagen.hpp"
#include "ormachine/multilayer.hpp"

using namespace ormachine;

namespace {

RealMatrix as_real(const BinaryMatrix& b) {
  RealMatrix r(b.rows(), b.cols());
  for (std::size_t i = 0; i < b.size(); ++i) r.cells()[i] = b.cells()[i];
  return r;
}

PosteriorSummary fixed_layer(const BinaryMatrix& codes, double lambda) {
  PosteriorSummary s;
  s.u_mean = as_real(codes);
  s.u_map = codes;
  s.lambda = lambda;
  return s;
}

}  // namespace

TEST(Architecture, Validation) {
  Architecture a;
  EXPECT_THROW(a.validate(), std::invalid_argument);
  a.widths = {3, 2};
  a.code_priors = {BernoulliPrior(0.5)};
  EXPECT_THROW(a.validate(), std::invalid_argument);
  a.code_priors.push_back(BernoulliPrior(0.2));
  EXPECT_NO_THROW(a.validate());
  a.widths[1] = 0;
  EXPECT_THROW(a.validate(), std::invalid_argument);
}

TEST(TrainStack, SingleLayerIsPlainRun) {
  std::mt19937_64 gen(1);
  const auto x = oracle::random_observed(25, 20, 0.2, gen);
  SamplerConfig cfg;
  cfg.burn_in = 15;
  cfg.samples = 10;
  cfg.seed = 4;
  cfg.prior_u = BernoulliPrior(0.3);
  Architecture arch{{3}, {BernoulliPrior(0.3)}, {}};
  const auto stack = train_stack(x, arch, cfg);
  const auto single = run(x, 3, cfg);
  ASSERT_EQ(stack.depth(), 1u);
  EXPECT_EQ(stack.layers[0].z_mean, single.z_mean);
  EXPECT_EQ(stack.layers[0].u_mean, single.u_mean);
  EXPECT_EQ(stack.layers[0].lambda_trace, single.lambda_trace);
}

TEST(TrainStack, ShapesTelescope) {
  const auto digits = calculator_digits(2, 0.0);
  Architecture arch{{7, 4, 2}, {BernoulliPrior(0.01), BernoulliPrior(0.05), BernoulliPrior(0.2)}, {}};
  SamplerConfig cfg;
  cfg.burn_in = 10;
  cfg.samples = 5;
  const auto stack = train_stack(digits.x, arch, cfg);
  ASSERT_EQ(stack.depth(), 3u);
  EXPECT_EQ(stack.layers[0].u_mean.rows(), 170u);
  for (std::size_t k = 1; k < 3; ++k) {
    EXPECT_EQ(stack.layers[k].u_mean.rows(), arch.widths[k - 1]);
    EXPECT_EQ(stack.layers[k].z_mean.rows(), 20u);
  }
  EXPECT_EQ(stack.lambdas().size(), 3u);
}

TEST(TrainStack, AllMissingBottomRevertsToPrior) {
  const ObservedMatrix x(40, 30);
  Architecture arch{{3, 2}, {BernoulliPrior(0.3), BernoulliPrior(0.3)}, {}};
  SamplerConfig cfg;
  cfg.burn_in = 20;
  cfg.samples = 300;
  cfg.prior_z = BernoulliPrior(0.3);
  const auto stack = train_stack(x, arch, cfg);
  double um = 0.0;
  for (double v : stack.layers[0].u_mean.cells()) um += v;
  EXPECT_NEAR(um / stack.layers[0].u_mean.cells().size(), 0.3, 0.03);
}

TEST(FeedForward, DeterministicSingleLayerReturnsCode) {
  const BinaryMatrix codes(5, 2, {1, 0, 0, 1, 1, 1, 0, 0, 1, 0});
  StackSummary stack;
  stack.layers.push_back(fixed_layer(codes, kDefaultLambdaMax));
  const auto out = feed_forward(stack, 0, 0);
  for (std::size_t d = 0; d < 5; ++d) EXPECT_NEAR(out[d], codes(d, 0), 1e-5);
  EXPECT_THROW(feed_forward(stack, 1, 0), std::out_of_range);
  EXPECT_THROW(feed_forward(stack, 0, 2), std::out_of_range);
}

TEST(FeedForward, EmptyCodeGivesNoiseFloor) {
  const BinaryMatrix codes(4, 2, {1, 0, 1, 0, 0, 0, 1, 0});
  StackSummary stack;
  stack.layers.push_back(fixed_layer(codes, 1.2));
  for (double p : feed_forward(stack, 0, 1)) EXPECT_NEAR(p, 1.0 - sigmoid(1.2), 1e-12);
}

TEST(FeedForward, TwoLayerChainMatchesForwardSimulation) {
  const BinaryMatrix bottom(6, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 0, 0, 1, 1, 0, 0, 0});
  const BinaryMatrix top(3, 2, {1, 0, 1, 1, 0, 1});
  const double lambda0 = 1.5, lambda1 = 0.8;
  StackSummary stack;
  stack.layers.push_back(fixed_layer(bottom, lambda0));
  stack.layers.push_back(fixed_layer(top, lambda1));

  std::mt19937_64 gen(11);
  std::bernoulli_distribution keep0(sigmoid(lambda0)), keep1(sigmoid(lambda1));
  for (std::size_t unit = 0; unit < 2; ++unit) {
    const auto mf = feed_forward(stack, 1, unit);
    std::vector<double> freq(6, 0.0);
    const int draws = 100000;
    for (int t = 0; t < draws; ++t) {
      std::vector<int> mid(3);
      for (std::size_t l = 0; l < 3; ++l) {
        const int clean = top(l, unit);
        mid[l] = keep1(gen) ? clean : 1 - clean;
      }
      for (std::size_t d = 0; d < 6; ++d) {
        int clean = 0;
        for (std::size_t l = 0; l < 3; ++l) clean |= mid[l] & bottom(d, l);
        freq[d] += keep0(gen) ? clean : 1 - clean;
      }
    }
    for (std::size_t d = 0; d < 6; ++d) EXPECT_NEAR(mf[d], freq[d] / draws, 0.02) << "unit " << unit << " d " << d;
  }
}

TEST(FeedForward, OutputWithinDispersionBounds) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> unif;
  StackSummary stack;
  for (auto [rows, cols, lambda] : {std::tuple{9, 4, 0.7}, std::tuple{4, 3, 2.0}}) {
    PosteriorSummary s;
    s.u_mean = RealMatrix(rows, cols);
    for (double& v : s.u_mean.cells()) v = unif(gen);
    s.lambda = lambda;
    stack.layers.push_back(s);
  }
  const double hi = sigmoid(0.7);
  for (std::size_t unit = 0; unit < 3; ++unit)
    for (double p : feed_forward(stack, 1, unit)) {
      EXPECT_GE(p, 1.0 - hi - 1e-12);
      EXPECT_LE(p, hi + 1e-12);
    }
}

TEST(Impute, NoMissingGivesEmptyReport) {
  const auto digits = calculator_digits(1);
  Architecture arch{{7}, {BernoulliPrior(0.1)}, {}};
  SamplerConfig cfg;
  cfg.burn_in = 5;
  cfg.samples = 5;
  const auto stack = train_stack(digits.x, arch, cfg);
  EXPECT_TRUE(impute(stack, digits.x).cells.empty());
  EXPECT_THROW(impute(stack, ObservedMatrix(3, 3)), std::invalid_argument);
}

TEST(Impute, DuplicatedDigitsFillHeldOutOnes) {
  // Each digit appears five times; hide a few cells of one copy and recover
  // them from the others.
  const auto digits = calculator_digits(5);
  ObservedMatrix x = digits.x;
  std::vector<Cell> hidden;
  for (std::size_t n = 0; n < 10; ++n)
    for (std::size_t p = n; p < 170; p += 17) {
      x.set(n, p, kMissing);
      hidden.push_back({n, p});
    }
  Architecture arch{{7}, {BernoulliPrior(0.1)}, {}};
  SamplerConfig cfg;
  cfg.burn_in = 300;
  cfg.samples = 100;
  cfg.seed = 2;
  const auto report = impute(train_stack(x, arch, cfg), x);
  ASSERT_EQ(report.cells.size(), hidden.size());
  std::size_t ones = 0, recovered = 0;
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    const auto c = report.cells[i];
    if (!digits.clean(c.row, c.col)) continue;
    ++ones;
    recovered += report.probabilities[i] >= 0.9;
  }
  ASSERT_GT(ones, 0u);
  EXPECT_GE(static_cast<double>(recovered) / ones, 0.9);
}
