#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "ormachine/ormachine.hpp"
#include "packed.hpp"

using namespace ormachine;

namespace {

// 1000 digits of 50 x 34 pixels at L = 7.
const DigitsData& large_digits() {
  static const DigitsData d = calculator_digits(100, 0.05, 50, 34, 9);
  return d;
}

void BM_Sweep(benchmark::State& st) {
  SamplerConfig cfg;
  cfg.threads = static_cast<unsigned>(st.range(0));
  SamplerState state(large_digits().x, 7, cfg);
  PosteriorTrace trace = state.make_trace();
  state.sweep(trace, false);
  for (auto _ : st) {
    state.sweep(trace, false);
    if (trace.lambda_trace.size() > 4096) trace.lambda_trace.clear();
  }
  st.counters["cells/s"] = benchmark::Counter(static_cast<double>(large_digits().x.size()) * st.iterations(),
                                              benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Sweep)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

struct ScoreInstance {
  ObservedMatrix x;
  BinaryMatrix z, u;
};

ScoreInstance score_instance(std::size_t n) {
  std::mt19937_64 gen(42);
  return {oracle::random_observed(n, n, 0.3, gen), oracle::random_binary(n, 7, 0.3, gen),
          oracle::random_binary(n, 7, 0.3, gen)};
}

void BM_ScoreNaive(benchmark::State& st) {
  const auto in = score_instance(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st)
    for (std::size_t k = 0; k < 7; ++k) benchmark::DoNotOptimize(oracle::naive_latent_summand(0, k, in.z, in.u, in.x));
}
BENCHMARK(BM_ScoreNaive)->Arg(100)->Arg(1000);

void BM_ScoreSkipRules(benchmark::State& st) {
  const auto in = score_instance(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st)
    for (std::size_t k = 0; k < 7; ++k) benchmark::DoNotOptimize(conditional_score(0, k, in.z, in.u, in.x));
}
BENCHMARK(BM_ScoreSkipRules)->Arg(100)->Arg(1000);

void BM_ScorePacked(benchmark::State& st) {
  const auto in = score_instance(static_cast<std::size_t>(st.range(0)));
  const auto planes = detail::pack_rows(in.x);
  const auto masks = detail::pack_factor(in.u);
  std::vector<const std::uint64_t*> scratch(7);
  for (auto _ : st)
    for (std::size_t k = 0; k < 7; ++k)
      benchmark::DoNotOptimize(
          detail::packed_score(planes.pos_row(0), planes.neg_row(0), masks, in.z.row(0), k, scratch.data()));
}
BENCHMARK(BM_ScorePacked)->Arg(100)->Arg(1000);

void BM_CountCorrect(benchmark::State& st) {
  SamplerState state(large_digits().x, 7, SamplerConfig{});
  for (auto _ : st) benchmark::DoNotOptimize(count_correct(large_digits().x, state.latent(), state.codes()));
}
BENCHMARK(BM_CountCorrect)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
