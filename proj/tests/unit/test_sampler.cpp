#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ormachine/datagen.hpp"
#include "ormachine/error.hpp"
#include "ormachine/sampler.hpp"
#include "packed.hpp"

using namespace ormachine;

namespace {

SamplerConfig fixed_lambda_config(double lambda, double pz, double pu, std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.lambda_update = false;
  cfg.lambda_init = lambda;
  cfg.prior_z = BernoulliPrior(pz);
  cfg.prior_u = BernoulliPrior(pu);
  cfg.seed = seed;
  return cfg;
}

// Empirical state frequencies of a fixed-lambda chain.
std::vector<double> chain_frequencies(const ObservedMatrix& x, std::size_t width, const SamplerConfig& cfg,
                                      std::size_t burn, std::size_t sweeps) {
  SamplerState state(x, width, cfg);
  PosteriorTrace trace = state.make_trace();
  std::vector<double> freq(std::size_t{1} << ((x.rows() + x.cols()) * width), 0.0);
  for (std::size_t s = 0; s < burn; ++s) state.sweep(trace, false);
  for (std::size_t s = 0; s < sweeps; ++s) {
    state.sweep(trace, false);
    freq[oracle::state_index(state.latent(), state.codes())] += 1.0;
    if (trace.lambda_trace.size() > 4096) trace.lambda_trace.clear();
  }
  for (double& f : freq) f /= static_cast<double>(sweeps);
  return freq;
}

}  // namespace

TEST(ConditionalScore, EmptyCodeGivesZero) {
  std::mt19937_64 gen(1);
  const auto x = oracle::random_observed(4, 6, 0.0, gen);
  auto z = oracle::random_binary(4, 3, 0.5, gen);
  auto u = oracle::random_binary(6, 3, 0.5, gen);
  for (std::size_t d = 0; d < 6; ++d) u(d, 1) = 0;
  for (std::size_t n = 0; n < 4; ++n) EXPECT_EQ(conditional_score(n, 1, z, u, x), 0);
}

TEST(ConditionalScore, CancellingEvidence) {
  const ObservedMatrix x(1, 2, {1, -1});
  const BinaryMatrix z(1, 1, {0});
  const BinaryMatrix u(2, 1, {1, 1});
  EXPECT_EQ(conditional_score(0, 0, z, u, x), 0);
}

TEST(ConditionalScore, MatchesNaiveSummandOnRandomInstances) {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + gen() % 30, d = 1 + gen() % 30, l = 1 + gen() % 5;
    const auto x = oracle::random_observed(n, d, 0.2, gen);
    const auto z = oracle::random_binary(n, l, 0.4, gen);
    const auto u = oracle::random_binary(d, l, 0.4, gen);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < l; ++k) {
        const int a = conditional_score(i, k, z, u, x);
        ASSERT_EQ(a, oracle::naive_latent_summand(i, k, z, u, x));
        ASSERT_LE(std::abs(a), static_cast<int>(d));
      }
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < l; ++k)
        ASSERT_EQ(code_conditional_score(j, k, z, u, x), oracle::naive_code_summand(j, k, z, u, x));
  }
}

TEST(ConditionalScore, IndependentOfCurrentValue) {
  std::mt19937_64 gen(5);
  const auto x = oracle::random_observed(8, 8, 0.1, gen);
  auto z = oracle::random_binary(8, 3, 0.5, gen);
  const auto u = oracle::random_binary(8, 3, 0.5, gen);
  for (std::size_t n = 0; n < 8; ++n)
    for (std::size_t l = 0; l < 3; ++l) {
      const int before = conditional_score(n, l, z, u, x);
      z(n, l) ^= 1;
      EXPECT_EQ(conditional_score(n, l, z, u, x), before);
    }
}

TEST(ConditionalScore, CodeScoreIsLatentScoreOfTransposedProblem) {
  std::mt19937_64 gen(6);
  const auto x = oracle::random_observed(9, 7, 0.2, gen);
  const auto z = oracle::random_binary(9, 3, 0.5, gen);
  const auto u = oracle::random_binary(7, 3, 0.5, gen);
  const auto xt = x.transposed();
  for (std::size_t d = 0; d < 7; ++d)
    for (std::size_t l = 0; l < 3; ++l)
      EXPECT_EQ(code_conditional_score(d, l, z, u, x), conditional_score(d, l, u, z, xt));
}

TEST(ConditionalScore, AppendingEmptyCodeChangesNothing) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = oracle::random_observed(10, 12, 0.2, gen);
    const auto z = oracle::random_binary(10, 3, 0.5, gen);
    const auto u = oracle::random_binary(12, 3, 0.5, gen);
    auto z2 = oracle::random_binary(10, 4, 0.5, gen);
    for (std::size_t n = 0; n < 10; ++n)
      for (std::size_t l = 0; l < 3; ++l) z2(n, l) = z(n, l);
    const auto u2 = u.with_zero_columns(1);
    for (std::size_t n = 0; n < 10; ++n)
      for (std::size_t l = 0; l < 3; ++l) EXPECT_EQ(conditional_score(n, l, z, u, x), conditional_score(n, l, z2, u2, x));
  }
}

TEST(ConditionalScore, PackedKernelAgrees) {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + gen() % 70, d = 1 + gen() % 140, l = 1 + gen() % 6;
    const auto x = oracle::random_observed(n, d, 0.3, gen);
    const auto z = oracle::random_binary(n, l, 0.3, gen);
    const auto u = oracle::random_binary(d, l, 0.3, gen);
    const auto rows = detail::pack_rows(x);
    const auto cols = detail::pack_cols(x);
    const auto umask = detail::pack_factor(u);
    const auto zmask = detail::pack_factor(z);
    std::vector<const std::uint64_t*> scratch(l);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < l; ++k)
        ASSERT_EQ(detail::packed_score(rows.pos_row(i), rows.neg_row(i), umask, z.row(i), k, scratch.data()),
                  conditional_score(i, k, z, u, x));
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < l; ++k)
        ASSERT_EQ(detail::packed_score(cols.pos_row(j), cols.neg_row(j), zmask, u.row(j), k, scratch.data()),
                  code_conditional_score(j, k, z, u, x));
    EXPECT_EQ(detail::packed_correct(rows, z, umask, 1), count_correct(x, z, u));
  }
}

TEST(FlipProbability, Examples) {
  EXPECT_DOUBLE_EQ(flip_probability(0, 0, 3.0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(flip_probability(0, 1, 3.0, 0.0), 1.0);
  const double ln3 = std::log(3.0);
  EXPECT_DOUBLE_EQ(flip_probability(1, 0, ln3, 0.0), 1.0);
  EXPECT_NEAR(flip_probability(1, 1, ln3, 0.0), 1.0 / 3.0, 1e-15);
  // Prior only.
  EXPECT_NEAR(flip_probability(0, 1, 0.0, ln3), 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(flip_probability(0, 0, 0.0, ln3), 1.0);
}

TEST(FlipProbability, IsRatioOfFullConditionals) {
  for (int a : {-5, -1, 0, 2, 7})
    for (double lambda : {0.0, 0.4, 2.0})
      for (double eta : {-1.0, 0.0, 0.8}) {
        const double p1 = sigmoid(lambda * a + eta);
        EXPECT_NEAR(flip_probability(a, 0, lambda, eta), std::min(1.0, p1 / (1.0 - p1)), 1e-12);
        EXPECT_NEAR(flip_probability(a, 1, lambda, eta), std::min(1.0, (1.0 - p1) / p1), 1e-12);
      }
}

TEST(UpdateLambda, Examples) {
  EXPECT_DOUBLE_EQ(update_lambda(500, 1000), 0.0);
  EXPECT_DOUBLE_EQ(update_lambda(1000, 1000), kDefaultLambdaMax);
  EXPECT_NEAR(update_lambda(731, 1000), 1.0, 1e-3);
  EXPECT_NEAR(update_lambda(731, 1000), logit(0.731), 1e-12);
  EXPECT_DOUBLE_EQ(update_lambda(100, 1000), 0.0);
  EXPECT_THROW(update_lambda(0, 0), DegenerateError);
  EXPECT_THROW(update_lambda(5, 4), std::invalid_argument);
}

TEST(UpdateLambda, IsGridMaximiser) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = oracle::random_observed(15, 15, 0.1, gen);
    const auto z = oracle::random_binary(15, 2, 0.5, gen);
    const auto u = oracle::random_binary(15, 2, 0.5, gen);
    const double best = update_lambda(count_correct(x, z, u), x.observed_count());
    const double at_best = log_likelihood(x, z, u, best);
    for (int i = 0; i < 100; ++i) {
      const double grid = kDefaultLambdaMax * i / 99.0;
      EXPECT_GE(at_best, log_likelihood(x, z, u, grid) - 1e-9 * std::abs(at_best));
    }
  }
}

TEST(UpdateRow, SingleCellMatchesEnumeration) {
  const ObservedMatrix x(1, 1, {1});
  const double lambda = 2.0;
  const auto exact = oracle::exact_posterior(x, 1, lambda, 0.5, 0.5);
  double exact_z = 0.0;
  BinaryMatrix z(1, 1), u(1, 1);
  for (std::size_t s = 0; s < exact.size(); ++s) {
    oracle::decode_state(s, z, u);
    exact_z += z(0, 0) * exact[s];
  }
  const auto freq = chain_frequencies(x, 1, fixed_lambda_config(lambda, 0.5, 0.5, 3), 100, 200000);
  double emp_z = 0.0;
  for (std::size_t s = 0; s < freq.size(); ++s) {
    oracle::decode_state(s, z, u);
    emp_z += z(0, 0) * freq[s];
    EXPECT_NEAR(freq[s], exact[s], 0.01) << "state " << s;
  }
  EXPECT_NEAR(emp_z, exact_z, 0.01);
}

TEST(UpdateRow, ThreeByThreeMarginalsMatchEnumeration) {
  const ObservedMatrix x(3, 3, {1, 1, -1, 1, 0, -1, -1, -1, 1});
  const double lambda = 1.5;
  const auto exact = oracle::exact_posterior(x, 2, lambda, 0.4, 0.4);
  const auto freq = chain_frequencies(x, 2, fixed_lambda_config(lambda, 0.4, 0.4, 11), 1000, 20000);
  BinaryMatrix z(3, 2), u(3, 2);
  std::vector<double> exact_m(6, 0.0), emp_m(6, 0.0);
  for (std::size_t s = 0; s < exact.size(); ++s) {
    oracle::decode_state(s, z, u);
    for (std::size_t i = 0; i < 6; ++i) {
      exact_m[i] += z.cells()[i] * exact[s];
      emp_m[i] += z.cells()[i] * freq[s];
    }
  }
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(emp_m[i], exact_m[i], 0.03) << "z entry " << i;
}

TEST(UpdateRow, ZeroDispersionAndFlatPriorAlwaysFlips) {
  std::mt19937_64 gen(4);
  const auto x = oracle::random_observed(5, 5, 0.0, gen);
  SamplerConfig cfg = fixed_lambda_config(0.0, 0.5, 0.5, 1);
  cfg.lambda_init = 0.0;
  SamplerState state(x, 3, cfg);
  const BinaryMatrix before = state.latent();
  state.update_latent_row(2);
  for (std::size_t l = 0; l < 3; ++l) EXPECT_NE(state.latent()(2, l), before(2, l));
  EXPECT_EQ(state.latent()(1, 0), before(1, 0));
}

TEST(Sweep, ZeroSweepsLeaveStateUnchanged) {
  std::mt19937_64 gen(12);
  const auto x = oracle::random_observed(6, 6, 0.0, gen);
  SamplerConfig cfg;
  cfg.burn_in = 0;
  cfg.samples = 1;
  const SamplerState a(x, 2, cfg);
  const SamplerState b(x, 2, cfg);
  EXPECT_EQ(a.latent(), b.latent());
  EXPECT_EQ(a.codes(), b.codes());
  EXPECT_EQ(a.sweep_index(), 0u);
}

TEST(Sweep, NoiselessStateIsStableAtLambdaMax) {
  SyntheticSpec spec;
  spec.rows = 200;
  spec.cols = 150;
  spec.width = 4;
  spec.seed = 3;
  const auto data = gen_random_boolean(spec);
  SamplerConfig cfg;
  cfg.lambda_update = false;
  cfg.lambda_init = kDefaultLambdaMax;
  SamplerState state(ObservedMatrix::from_binary(data.clean), data.z, data.u, kDefaultLambdaMax, cfg);
  PosteriorTrace trace = state.make_trace();
  state.sweep(trace, false);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < data.z.size(); ++i) changed += data.z.cells()[i] != state.latent().cells()[i];
  for (std::size_t i = 0; i < data.u.size(); ++i) changed += data.u.cells()[i] != state.codes().cells()[i];
  EXPECT_LT(static_cast<double>(changed), 0.01 * static_cast<double>(data.z.size() + data.u.size()));
}

TEST(Sweep, ParallelMatchesSerialBitForBit) {
  SyntheticSpec spec;
  spec.rows = 300;
  spec.cols = 260;
  spec.width = 5;
  spec.seed = 9;
  const auto x = ObservedMatrix::from_binary(apply_bitflip_noise(gen_random_boolean(spec).clean, 0.1, 4));
  SamplerConfig cfg;
  cfg.burn_in = 5;
  cfg.samples = 5;
  cfg.seed = 123;
  cfg.threads = 1;
  const auto serial = run(x, 5, cfg);
  for (unsigned threads : {2u, 3u, 4u}) {
    cfg.threads = threads;
    const auto parallel = run(x, 5, cfg);
    EXPECT_EQ(parallel.z_mean, serial.z_mean);
    EXPECT_EQ(parallel.u_mean, serial.u_mean);
    EXPECT_EQ(parallel.lambda_trace, serial.lambda_trace);
  }
}

TEST(Run, AllMissingRevertsToPrior) {
  const ObservedMatrix x(40, 30);
  SamplerConfig cfg;
  cfg.burn_in = 20;
  cfg.samples = 400;
  cfg.prior_z = BernoulliPrior(0.3);
  cfg.prior_u = BernoulliPrior(0.7);
  const auto s = run(x, 3, cfg);
  double zm = 0.0, um = 0.0;
  for (double v : s.z_mean.cells()) zm += v;
  for (double v : s.u_mean.cells()) um += v;
  EXPECT_NEAR(zm / s.z_mean.cells().size(), 0.3, 0.02);
  EXPECT_NEAR(um / s.u_mean.cells().size(), 0.7, 0.02);
}

TEST(Run, RankOneNoiselessIsReconstructed) {
  // z = (1,1,0), u = (1,0,1).
  const BinaryMatrix z(3, 1, {1, 1, 0});
  const BinaryMatrix u(3, 1, {1, 0, 1});
  const BinaryMatrix truth = boolean_product(z, u);
  // The generating pair is a posterior mode: it is the unique perfect fit at width 1.
  const auto post = oracle::exact_posterior(ObservedMatrix::from_binary(truth), 1, 3.0, 0.5, 0.5);
  const auto mode = std::max_element(post.begin(), post.end()) - post.begin();
  EXPECT_EQ(static_cast<std::size_t>(mode), oracle::state_index(z, u));

  SamplerConfig cfg;
  cfg.burn_in = 50;
  cfg.samples = 50;
  cfg.seed = 5;
  const auto s = run(ObservedMatrix::from_binary(truth), 1, cfg);
  EXPECT_EQ(boolean_product(s.z_map, s.u_map), truth);
}

TEST(Run, LambdaTraceIsDeterministic) {
  std::mt19937_64 gen(3);
  const auto x = oracle::random_observed(40, 50, 0.2, gen);
  SamplerConfig cfg;
  cfg.burn_in = 10;
  cfg.samples = 10;
  cfg.seed = 77;
  const auto a = run(x, 3, cfg);
  const auto b = run(x, 3, cfg);
  EXPECT_EQ(a.lambda_trace, b.lambda_trace);
  EXPECT_EQ(a.lambda_trace.size(), 20u);
  cfg.seed = 78;
  EXPECT_NE(run(x, 3, cfg).lambda_trace, a.lambda_trace);
}

TEST(Run, LambdaAfterEverySweepIsTheMle) {
  SyntheticSpec spec;
  spec.rows = 60;
  spec.cols = 60;
  spec.width = 3;
  spec.seed = 1;
  const auto x = ObservedMatrix::from_binary(apply_bitflip_noise(gen_random_boolean(spec).clean, 0.2, 2));
  SamplerConfig cfg;
  cfg.seed = 4;
  SamplerState state(x, 3, cfg);
  PosteriorTrace trace = state.make_trace();
  for (int s = 0; s < 20; ++s) {
    state.sweep(trace, false);
    const double at_hat = log_likelihood(x, state.latent(), state.codes(), state.lambda());
    for (int i = 0; i < 100; ++i) {
      const double grid = cfg.lambda_max * i / 99.0;
      ASSERT_GE(at_hat, log_likelihood(x, state.latent(), state.codes(), grid) - 1e-9 * std::abs(at_hat));
    }
  }
}

TEST(Run, SingleSampleSummaryIsLastState) {
  std::mt19937_64 gen(13);
  const auto x = oracle::random_observed(20, 15, 0.1, gen);
  SamplerConfig cfg;
  cfg.burn_in = 3;
  cfg.samples = 1;
  cfg.seed = 2;
  SamplerState state(x, 2, cfg);
  const auto s = run(state);
  EXPECT_EQ(s.z_map, state.latent());
  EXPECT_EQ(s.u_map, state.codes());
  EXPECT_EQ(s.n_samples, 1u);
  for (double v : s.z_mean.cells()) EXPECT_TRUE(v == 0.0 || v == 1.0);
}

TEST(Run, MeansAreFrequencies) {
  std::mt19937_64 gen(14);
  const auto x = oracle::random_observed(10, 10, 0.3, gen);
  SamplerConfig cfg;
  cfg.burn_in = 2;
  cfg.samples = 7;
  cfg.retain_every = 1;
  const auto s = run(x, 2, cfg);
  ASSERT_EQ(s.samples.size(), 7u);
  for (std::size_t i = 0; i < s.z_mean.cells().size(); ++i) {
    double count = 0.0;
    for (const auto& sample : s.samples) count += sample.z.cells()[i];
    EXPECT_DOUBLE_EQ(s.z_mean.cells()[i], count / 7.0);
  }
}

TEST(Run, EarlyStopShortensBurnIn) {
  SyntheticSpec spec;
  spec.rows = 80;
  spec.cols = 80;
  spec.width = 3;
  spec.seed = 6;
  const auto x = ObservedMatrix::from_binary(gen_random_boolean(spec).clean);
  SamplerConfig cfg;
  cfg.burn_in = 500;
  cfg.samples = 5;
  cfg.convergence_tol = 1e-3;
  cfg.convergence_patience = 3;
  const auto s = run(x, 3, cfg);
  EXPECT_LT(s.burn_in_sweeps, 500u);
  EXPECT_EQ(s.lambda_trace.size(), s.burn_in_sweeps + 5);
}

TEST(Run, FrozenCodesStayFixed) {
  std::mt19937_64 gen(21);
  const auto x = oracle::random_observed(30, 20, 0.1, gen);
  const auto u = oracle::random_binary(20, 3, 0.4, gen);
  SamplerConfig cfg;
  cfg.freeze_codes = true;
  cfg.burn_in = 5;
  cfg.samples = 5;
  SamplerState state(x, oracle::random_binary(30, 3, 0.5, gen), u, 1.0, cfg);
  const auto s = run(state);
  EXPECT_EQ(state.codes(), u);
  EXPECT_EQ(s.u_map, u);
}

TEST(Run, RejectsInvalidInput) {
  const ObservedMatrix x(3, 3);
  SamplerConfig cfg;
  EXPECT_THROW(run(x, 0, cfg), std::invalid_argument);
  cfg.samples = 0;
  EXPECT_THROW(run(x, 2, cfg), std::invalid_argument);
  cfg.samples = 1;
  cfg.lambda_init = -1.0;
  EXPECT_THROW(run(x, 2, cfg), std::invalid_argument);
  EXPECT_THROW(SamplerState(x, BinaryMatrix(3, 2), BinaryMatrix(4, 2), 1.0, SamplerConfig{}), std::invalid_argument);
}
