#include <benchmark/benchmark.h>

#include <numbers>

#include "steer/assemblage.hpp"
#include "steer/expsim.hpp"
#include "steer/source.hpp"
#include "steer/witnesses.hpp"

namespace {

using namespace steer;

PreparedState state(double alpha, double mu) {
  SourceConfig c;
  c.alpha = alpha;
  c.indistinguishability = mu;
  return prepare(c);
}

void BM_Prepare(benchmark::State& s) {
  SourceConfig c;
  c.indistinguishability = 0.8;
  for (auto _ : s) benchmark::DoNotOptimize(prepare(c));
}
BENCHMARK(BM_Prepare);

void BM_BosonicOracle(benchmark::State& s) {
  SourceConfig c;
  c.indistinguishability = 0.8;
  for (auto _ : s) benchmark::DoNotOptimize(bosonic_oracle(c));
}
BENCHMARK(BM_BosonicOracle);

void BM_Qfi(benchmark::State& s) {
  const auto rho = condition(state(0.3, 0.8).rho, MeasurementSetting::x()).branches[0].state;
  const auto y = MeasurementSetting::y();
  for (auto _ : s) benchmark::DoNotOptimize(qfi(rho, y));
}
BENCHMARK(BM_Qfi);

void BM_OptimizeFisher(benchmark::State& s) {
  const auto rho = state(0.3, 0.8).rho;
  for (auto _ : s) benchmark::DoNotOptimize(optimize_fisher(rho, MeasurementSetting::y()));
}
BENCHMARK(BM_OptimizeFisher)->Unit(benchmark::kMillisecond);

void BM_FitFringe(benchmark::State& s) {
  const auto probs = scan_probabilities(state(0.42, 0.8), ScanConfig{});
  const auto data = sample_counts(probs, static_cast<std::uint64_t>(s.range(0)), 1);
  for (auto _ : s) benchmark::DoNotOptimize(fit_fringe(data, 0));
}
BENCHMARK(BM_FitFringe)->Arg(1000)->Arg(100000);

void BM_ConditionalFisherEstimate(benchmark::State& s) {
  const auto st = state(0.42, 0.8);
  ScanConfig c;
  for (auto _ : s) {
    c.seed++;
    benchmark::DoNotOptimize(conditional_fisher_estimate(st, c));
  }
}
BENCHMARK(BM_ConditionalFisherEstimate)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
