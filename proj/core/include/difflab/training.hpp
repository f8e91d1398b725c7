#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "difflab/datagen.hpp"
#include "difflab/denoiser.hpp"
#include "difflab/losses.hpp"
#include "difflab/schedule.hpp"

namespace difflab {

enum class TrainMode { Gradient, Generator, Distill };

std::string to_string(TrainMode m);
TrainMode train_mode_from_string(const std::string& s);

struct TrainConfig {
  TrainMode mode = TrainMode::Generator;
  ScheduleSpec schedule;
  DenoiserConfig denoiser;
  DatasetSpec dataset;
  int batch_size = 64;
  int steps = 20000;
  double learning_rate = 2e-4;
  LossWeights weights;
  std::uint64_t seed = 0;
  bool condition_on_labels = false;
  int log_every = 100;
  int checkpoint_every = 1000;
  // > 0 enables early stop: quit when the smoothed loss has not improved
  // for this many log intervals.
  int plateau_patience = 0;
  std::string teacher_checkpoint;  // distill mode only

  void validate() const;
};

struct RunLog {
  struct Entry {
    std::int64_t step;
    double loss_recon;
    double loss_ssim;
    double grad_norm;
    double seconds;  // wall time since training started
  };
  std::vector<Entry> entries;

  static const char* csv_header();  // "step,loss_recon,loss_ssim,grad_norm,seconds"
  void write_csv(std::ostream& out) const;
};

// Invoked at every checkpoint cadence and once more at the end
// (final = true). On a NaN abort the sink receives the last good parameters
// before the NumericError is thrown.
using CheckpointSink = std::function<void(std::int64_t step, const DenoiserModel&, bool final)>;

// Noise-prediction training: minimize the epsilon-space MSE of
// eps_hat(alpha_t x0 + sigma_t eps) against eps, t uniform on {1..T}.
DenoiserModel train_gradient(const TrainConfig& cfg, RunLog* log = nullptr,
                             const CheckpointSink& sink = {});

// Clean-data prediction training: the same loop minimizing the data-space
// MSE of x0_hat against x0.
DenoiserModel train_generator(const TrainConfig& cfg, RunLog* log = nullptr,
                              const CheckpointSink& sink = {});

// Knowledge distillation: the student starts as a copy of the teacher on the
// halved schedule and regresses onto two-teacher-DDIM-step targets. The
// teacher must be a data-prediction model.
DenoiserModel train_distilled(const TrainConfig& cfg, const DenoiserModel& teacher,
                              RunLog* log = nullptr, const CheckpointSink& sink = {});

// Dispatch by cfg.mode; distill mode loads cfg.teacher_checkpoint.
DenoiserModel train(const TrainConfig& cfg, RunLog* log = nullptr,
                    const CheckpointSink& sink = {});

}  // namespace difflab
