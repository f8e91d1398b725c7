#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "difflab/diffusion.hpp"
#include "difflab/schedule.hpp"
#include "difflab/tensor.hpp"

namespace difflab {

enum class Activation { Swish, Relu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Feed-forward denoiser shape. The network sees [x_t, time embedding,
// condition] concatenated and emits input_dim values.
struct DenoiserConfig {
  int input_dim = 2;
  int condition_dim = 0;
  std::vector<int> hidden_dims = {64, 64};
  int time_embed_dim = 32;
  Activation activation = Activation::Swish;

  void validate() const;
  // Shapes of w0, b0, w1, b1, ..., in parameter order.
  std::vector<std::vector<int>> param_shapes() const;
  std::vector<std::string> param_names() const;
};

// Sinusoidal step embedding: entry 2k = sin(t * w_k), entry 2k+1 =
// cos(t * w_k) with w_k = 10000^(-2k/dim). dim must be even; 0 <= t <= max_step.
Tensor time_embedding(int t, int dim, int max_step);

// Time-conditioned MLP f(x_t | t, c) plus everything a checkpoint needs to
// reproduce it: schedule descriptor, parameterization tag, init/run seed.
// A distilled model keeps the base schedule descriptor with stride > 1 and
// feeds t * stride to the embedding, so its time inputs stay on the scale it
// was trained on.
struct DenoiserModel {
  DenoiserConfig config;
  Parameterization parameterization = Parameterization::DataPrediction;
  ScheduleSpec schedule;
  std::uint64_t seed = 0;
  std::vector<Tensor> params;
  std::vector<std::string> param_names;

  // Weights ~ N(0, 1/fan_in), biases zero, final layer fully zeroed so the
  // untrained model predicts 0.
  static DenoiserModel init(DenoiserConfig cfg, Parameterization param, ScheduleSpec sched,
                            std::uint64_t seed);

  int effective_steps() const { return schedule.effective_steps(); }

  Tensor forward(const Tensor& x_t, int t, const Tensor& condition = {}) const;
  Tensor forward_batch(const Tensor& xs, std::span<const int> ts,
                       const Tensor& conditions = {}) const;
  // Same computation with caller-supplied (typically tape-tracked) parameters.
  Tensor forward_batch_with(std::span<const Tensor> p, const Tensor& xs, std::span<const int> ts,
                            const Tensor& conditions = {}) const;
};

// JSON checkpoint, bit-exact over save/load round trips.
void save_checkpoint(const DenoiserModel& model, const std::string& path);
DenoiserModel load_checkpoint(const std::string& path);

}  // namespace difflab
