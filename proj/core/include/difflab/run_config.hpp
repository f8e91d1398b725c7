#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "difflab/datagen.hpp"
#include "difflab/diffusion.hpp"
#include "difflab/training.hpp"

namespace difflab {

struct MetricConfig {
  int bins = 8;
  double alpha = 0.05;
  int n_generated = 5000;
  std::uint64_t kmeans_seed = 7;

  void validate() const;
};

struct CompareConfig {
  std::vector<int> step_counts = {2, 4, 8, 16, 32, 64};
  std::vector<Parameterization> parameterizations = {Parameterization::EpsilonPrediction,
                                                     Parameterization::DataPrediction};
};

struct ChainConfig {
  std::string teacher_checkpoint;
  int target_steps = 2;
};

// Complete declarative description of one run, parsed from a JSON file.
// Validation is strict: unknown keys are rejected, everything is checked
// before any compute starts.
struct RunConfig {
  DatasetSpec dataset;
  ScheduleSpec schedule;
  DenoiserConfig denoiser;
  // train section
  TrainMode mode = TrainMode::Generator;
  int batch_size = 64;
  int steps = 20000;
  double learning_rate = 2e-4;
  LossWeights weights;
  std::uint64_t seed = 0;
  bool condition_on_labels = false;
  int log_every = 100;
  int checkpoint_every = 1000;
  int plateau_patience = 0;
  std::string teacher_checkpoint;

  MetricConfig metrics;
  CompareConfig compare;
  ChainConfig chain;
  std::string output_dir = "run";

  TrainConfig to_train_config() const;
};

RunConfig parse_run_config_file(const std::string& path);
RunConfig parse_run_config_text(const std::string& text);

// Canonical JSON echo of the config (keys sorted), used for manifests.
std::string run_config_to_json(const RunConfig& cfg);

// FNV-1a over the canonical echo.
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace difflab
