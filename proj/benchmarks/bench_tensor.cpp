#include <benchmark/benchmark.h>

#include "difflab/rng.hpp"
#include "difflab/tensor.hpp"

using namespace difflab;

static void BM_matmul(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(1);
  Tensor a = randn({n, n}, rng);
  Tensor b = randn({n, n}, rng);
  for (auto _ : state) {
    Tensor c = matmul(a, b);
    benchmark::DoNotOptimize(c);
  }
  state.SetItemsProcessed(state.iterations() * 2l * n * n * n);
}
BENCHMARK(BM_matmul)->Arg(16)->Arg(64)->Arg(128);

static void BM_mlp_train_step(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  Rng rng(2);
  Tensor w1 = randn({32, 64}, rng);
  Tensor b1 = randn({64}, rng);
  Tensor w2 = randn({64, 2}, rng);
  Tensor b2 = randn({2}, rng);
  Tensor x = randn({batch, 32}, rng);
  Tensor y = randn({batch, 2}, rng);
  AdamState adam;
  std::vector<Tensor> params{w1, b1, w2, b2};
  for (auto _ : state) {
    Tape tape;
    auto tracked = tape.watch_all(params);
    Tensor h = swish(add_rowwise(matmul(x, tracked[0]), tracked[1]));
    Tensor out = add_rowwise(matmul(h, tracked[2]), tracked[3]);
    Tensor d = sub(out, y);
    Tensor loss = mean(mul(d, d));
    tape.backward(loss);
    std::vector<Tensor> grads;
    for (const auto& p : tracked) grads.push_back(tape.grad(p));
    adam_step(params, grads, adam);
    benchmark::DoNotOptimize(params);
  }
}
BENCHMARK(BM_mlp_train_step)->Arg(16)->Arg(64);
