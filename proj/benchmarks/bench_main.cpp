#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "faircredit/dataset.hpp"
#include "faircredit/diagnostics.hpp"
#include "faircredit/predictors.hpp"
#include "faircredit/probmodel.hpp"
#include "faircredit/sampler.hpp"

namespace {

using namespace faircredit;

const ModelParams kTheta{0.5, -1.0, 0.8, 1.5, -0.5, 0.7, -1.2, 1.2, -0.5, 0.4, 1.0, 1.5};

ModelConfig with_intercept() {
  ModelConfig mc;
  mc.include_credit_intercept = true;
  return mc;
}

void BM_LogPosterior(benchmark::State& state) {
  const auto mc = with_intercept();
  const auto syn = generate_synthetic(kTheta, mc, static_cast<std::size_t>(state.range(0)), 3);
  const LatentState latents{syn.true_latents};
  for (auto _ : state) benchmark::DoNotOptimize(log_posterior(kTheta, latents, syn.data, mc));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogPosterior)->Arg(200)->Arg(800)->Arg(3200);

void BM_SamplerSweeps(benchmark::State& state) {
  const auto mc = with_intercept();
  const auto syn = generate_synthetic(kTheta, mc, static_cast<std::size_t>(state.range(0)), 3);
  SamplerConfig sc;
  sc.iterations = 200;
  sc.burn_in = 100;
  for (auto _ : state) benchmark::DoNotOptimize(run_chain(syn.data, mc, sc));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sc.iterations));
}
BENCHMARK(BM_SamplerSweeps)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_ForestFit(benchmark::State& state) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> nd;
  std::vector<double> c(800), y(800);
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i] = nd(gen);
    y[i] = 3000 + 800 * c[i] + 400 * nd(gen);
  }
  ForestConfig fc;
  fc.n_trees = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_forest(c, y, fc));
}
BENCHMARK(BM_ForestFit)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_EssBulk(benchmark::State& state) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  double v = 0;
  for (auto& e : x) e = v = 0.9 * v + nd(gen);
  for (auto _ : state) benchmark::DoNotOptimize(ess_bulk(x));
}
BENCHMARK(BM_EssBulk)->Arg(4000)->Arg(16000);

}  // namespace

BENCHMARK_MAIN();
