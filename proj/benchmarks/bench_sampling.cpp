#include <benchmark/benchmark.h>

#include "difflab/denoiser.hpp"
#include "difflab/diffusion.hpp"

using namespace difflab;

namespace {

DenoiserModel make_model(int steps) {
  DenoiserConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_dims = {64, 64};
  cfg.time_embed_dim = 32;
  ScheduleSpec sched;
  sched.steps = steps;
  DenoiserModel m = DenoiserModel::init(cfg, Parameterization::DataPrediction, sched, 7);
  Rng rng(8);
  for (auto& p : m.params) p = mul(randn(p.shape(), rng), 0.3);
  return m;
}

}  // namespace

static void BM_ancestral_sample(benchmark::State& state) {
  const int steps = static_cast<int>(state.range(0));
  DenoiserModel model = make_model(steps);
  NoiseSchedule sched = NoiseSchedule::build(model.schedule);
  std::uint64_t i = 0;
  for (auto _ : state) {
    Rng rng(i++);
    Tensor x = ancestral_sample(model, Tensor(), sched, rng);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_ancestral_sample)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

static void BM_ancestral_sample_batch(benchmark::State& state) {
  const int steps = static_cast<int>(state.range(0));
  DenoiserModel model = make_model(steps);
  NoiseSchedule sched = NoiseSchedule::build(model.schedule);
  std::uint64_t i = 0;
  for (auto _ : state) {
    Rng rng(i++);
    Tensor x = ancestral_sample_batch(model, Tensor(), 256, sched, rng);
    benchmark::DoNotOptimize(x);
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_ancestral_sample_batch)->Arg(2)->Arg(8);

BENCHMARK_MAIN();
