// Run-directory plumbing shared by the CLI commands: manifests, CSV writers,
// sample/metric serialization.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "difflab/datagen.hpp"
#include "difflab/metrics.hpp"
#include "difflab/run_config.hpp"
#include "difflab/tensor.hpp"
#include "difflab/training.hpp"

namespace difflab::cli {

struct CommonArgs {
  std::string config_path;
  std::string checkpoint_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;  // 0 = library default (single thread per task)
};

// Resolves the effective output directory: --out flag > DIFFLAB_OUT env >
// config value.
std::filesystem::path resolve_out_dir(const CommonArgs& args, const std::string& config_dir);

int resolve_threads(const CommonArgs& args);

void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const RunConfig& cfg, std::uint64_t seed);

// Manifest for commands that run from a checkpoint rather than a config.
void write_checkpoint_manifest(const std::filesystem::path& dir, const std::string& command,
                               const std::string& checkpoint, std::uint64_t seed, int n);

void write_runlog(const std::filesystem::path& path, const RunLog& log);

// `dim` fixes the header width even when `samples` is empty (n = 0 runs).
void write_samples_csv(const std::filesystem::path& path, const Tensor& samples, int dim);

void write_timings_csv(const std::filesystem::path& path, const std::vector<double>& seconds);

void write_metrics_csv(const std::filesystem::path& dir, const MetricsReport& report,
                       int n_train, int n_generated, int bins, double alpha);

// Converts sampler output (model space) back to data space: images map
// [-1, 1] -> [0, 1], points pass through.
Tensor to_data_space(const Tensor& samples, bool image);

}  // namespace difflab::cli
