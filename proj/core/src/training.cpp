#include "difflab/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>

#include "difflab/diffusion.hpp"
#include "difflab/distill.hpp"
#include "difflab/rng.hpp"

namespace difflab {

std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::Gradient: return "gradient";
    case TrainMode::Generator: return "generator";
    case TrainMode::Distill: return "distill";
  }
  return "?";
}

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "gradient") return TrainMode::Gradient;
  if (s == "generator") return TrainMode::Generator;
  if (s == "distill") return TrainMode::Distill;
  throw ConfigError("train: unknown mode '" + s + "'");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (steps < 0) throw ConfigError("train: steps must be >= 0");
  if (learning_rate <= 0.0) throw ConfigError("train: learning_rate must be > 0");
  if (weights.recon < 0.0 || weights.ssim < 0.0) {
    throw ConfigError("train: loss weights must be >= 0");
  }
  if (log_every < 1) throw ConfigError("train: log_every must be >= 1");
  if (checkpoint_every < 1) throw ConfigError("train: checkpoint_every must be >= 1");
  if (mode == TrainMode::Distill && teacher_checkpoint.empty()) {
    throw ConfigError("train: distill mode requires a teacher checkpoint");
  }
}

const char* RunLog::csv_header() { return "step,loss_recon,loss_ssim,grad_norm,seconds"; }

void RunLog::write_csv(std::ostream& out) const {
  out << csv_header() << "\n";
  char buf[160];
  for (const Entry& e : entries) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.6f",
                  static_cast<long long>(e.step), e.loss_recon, e.loss_ssim, e.grad_norm,
                  e.seconds);
    out << buf << "\n";
  }
}

namespace {

struct BatchData {
  Tensor x0;          // [B, d], model space
  Tensor x_t;         // [B, d]
  Tensor eps;         // [B, d]
  Tensor conditions;  // [B, c] or undefined
  std::vector<int> ts;
};

// Images live in [0, 1] on disk and in [-1, 1] inside the diffusion.
double to_model_space(double v, bool image) { return image ? 2.0 * v - 1.0 : v; }

BatchData draw_batch(const Dataset& data, const NoiseSchedule& sched, int batch, int step_stride,
                     int n_classes, int label_offset, bool conditioned, Rng& rng) {
  const int d = data.dim();
  const bool image = data.is_image();
  std::vector<double> x0(static_cast<std::size_t>(batch) * d);
  std::vector<double> eps(static_cast<std::size_t>(batch) * d);
  std::vector<double> xt(static_cast<std::size_t>(batch) * d);
  std::vector<double> cond;
  if (conditioned) cond.assign(static_cast<std::size_t>(batch) * n_classes, 0.0);
  BatchData out;
  out.ts.resize(static_cast<std::size_t>(batch));
  auto sv = data.samples.values();
  const int t_eff = sched.steps() / step_stride;
  for (int b = 0; b < batch; ++b) {
    const int idx = rng.uniform_int(0, data.count() - 1);
    const int t = step_stride * rng.uniform_int(1, t_eff);
    out.ts[static_cast<std::size_t>(b)] = t;
    const double a = sched.alpha(t);
    const double s = sched.sigma(t);
    for (int j = 0; j < d; ++j) {
      const double x = to_model_space(sv[static_cast<std::size_t>(idx) * d + j], image);
      const double e = rng.normal();
      x0[static_cast<std::size_t>(b) * d + j] = x;
      eps[static_cast<std::size_t>(b) * d + j] = e;
      xt[static_cast<std::size_t>(b) * d + j] = a * x + s * e;
    }
    if (conditioned) {
      const int cls = data.labels[static_cast<std::size_t>(idx)] - label_offset;
      cond[static_cast<std::size_t>(b) * n_classes + cls] = 1.0;
    }
  }
  out.x0 = Tensor({batch, d}, std::move(x0));
  out.eps = Tensor({batch, d}, std::move(eps));
  out.x_t = Tensor({batch, d}, std::move(xt));
  if (conditioned) out.conditions = Tensor({batch, n_classes}, std::move(cond));
  return out;
}

// Mean SSIM loss over a batch of flattened image rows. `pred` may be tape
// tracked; `ref` is a constant. Both live in model space [-1, 1] and are
// mapped to the unit interval with the fixed affine (x + 1) / 2; a dynamic
// per-pair min-max would make the loss non-differentiable at the extremes.
Tensor batch_ssim_loss(const Tensor& pred, const Tensor& ref, int h, int w) {
  const int batch = pred.shape()[0];
  Tensor acc = Tensor::scalar(0.0);
  for (int b = 0; b < batch; ++b) {
    Tensor a_img = mul(add(reshape(take_row(pred, b), {h, w}), 1.0), 0.5);
    Tensor b_img = mul(add(reshape(take_row(ref, b), {h, w}), 1.0), 0.5);
    acc = add(acc, loss_ssim(a_img, b_img));
  }
  return mul(acc, 1.0 / batch);
}

struct LoopSetup {
  DenoiserModel model;
  NoiseSchedule noise_sched;      // schedule that builds x_t (teacher-effective in distill)
  int step_stride = 1;            // t is drawn as stride * Unif{1..T_eff}
  const DenoiserModel* teacher = nullptr;
  DistillPlan plan;
};

DenoiserModel run_loop(const TrainConfig& cfg, LoopSetup setup, RunLog* log,
                       const CheckpointSink& sink) {
  const Dataset data = generate(cfg.dataset);
  DenoiserModel& model = setup.model;
  if (model.config.input_dim != data.dim()) {
    throw ConfigError("train: denoiser input_dim " + std::to_string(model.config.input_dim) +
                      " does not match dataset dim " + std::to_string(data.dim()));
  }
  const int n_classes = cfg.condition_on_labels ? condition_classes(cfg.dataset) : 0;
  const int label_offset = cfg.condition_on_labels ? condition_label_offset(cfg.dataset) : 0;
  if (model.config.condition_dim != n_classes) {
    throw ConfigError("train: condition_dim " + std::to_string(model.config.condition_dim) +
                      " does not match " + std::to_string(n_classes) + " label classes");
  }
  // SSIM only applies to image-shaped data; for points the weight is forced
  // to zero.
  const bool use_ssim = data.is_image() && cfg.weights.ssim > 0.0;

  AdamState adam;
  adam.learning_rate = cfg.learning_rate;
  Rng rng(cfg.seed);
  // Parameters that produced the most recent finite loss. Tensor handles
  // share buffers, so the snapshot is O(1).
  std::vector<Tensor> last_good = model.params;
  std::int64_t last_good_step = 0;

  double best_loss = std::numeric_limits<double>::infinity();
  int stale_intervals = 0;
  const auto started = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };

  for (int step = 1; step <= cfg.steps; ++step) {
    BatchData batch = draw_batch(data, setup.noise_sched, cfg.batch_size, setup.step_stride,
                                 n_classes, label_offset, cfg.condition_on_labels, rng);

    // Distillation target: two teacher DDIM steps per unique t.
    Tensor target;
    if (cfg.mode == TrainMode::Distill) {
      const int d = data.dim();
      std::vector<double> tgt(static_cast<std::size_t>(cfg.batch_size) * d);
      std::map<int, std::vector<int>> by_t;
      for (int b = 0; b < cfg.batch_size; ++b) by_t[batch.ts[static_cast<std::size_t>(b)]].push_back(b);
      for (const auto& [t, rows] : by_t) {
        const int m = static_cast<int>(rows.size());
        std::vector<double> sub(static_cast<std::size_t>(m) * d);
        std::vector<double> sub_cond;
        if (cfg.condition_on_labels) sub_cond.resize(static_cast<std::size_t>(m) * n_classes);
        for (int r = 0; r < m; ++r) {
          for (int j = 0; j < d; ++j) {
            sub[static_cast<std::size_t>(r) * d + j] = batch.x_t.at(rows[static_cast<std::size_t>(r)], j);
          }
          if (cfg.condition_on_labels) {
            for (int j = 0; j < n_classes; ++j) {
              sub_cond[static_cast<std::size_t>(r) * n_classes + j] =
                  batch.conditions.at(rows[static_cast<std::size_t>(r)], j);
            }
          }
        }
        Tensor sub_x({m, d}, std::move(sub));
        Tensor sub_c;
        if (cfg.condition_on_labels) sub_c = Tensor({m, n_classes}, std::move(sub_cond));
        Tensor got = distill_target(*setup.teacher, sub_x, t, sub_c, setup.noise_sched, setup.plan);
        for (int r = 0; r < m; ++r) {
          for (int j = 0; j < d; ++j) {
            tgt[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)]) * d + j] = got.at(r, j);
          }
        }
      }
      target = Tensor({cfg.batch_size, d}, std::move(tgt));
    }

    Tape tape;
    std::vector<Tensor> tracked = tape.watch_all(model.params);
    std::vector<int> ts_model(batch.ts);
    if (cfg.mode == TrainMode::Distill) {
      for (auto& t : ts_model) t /= setup.step_stride;
    }
    Tensor pred = model.forward_batch_with(tracked, batch.x_t, ts_model, batch.conditions);

    Tensor recon;
    Tensor x0_implied;
    switch (cfg.mode) {
      case TrainMode::Gradient: {
        recon = loss_eps(pred, batch.eps);
        if (use_ssim) {
          std::vector<double> inv_alpha(static_cast<std::size_t>(cfg.batch_size));
          std::vector<double> sigmas(static_cast<std::size_t>(cfg.batch_size));
          for (int b = 0; b < cfg.batch_size; ++b) {
            inv_alpha[static_cast<std::size_t>(b)] =
                1.0 / setup.noise_sched.alpha(batch.ts[static_cast<std::size_t>(b)]);
            sigmas[static_cast<std::size_t>(b)] =
                setup.noise_sched.sigma(batch.ts[static_cast<std::size_t>(b)]);
          }
          x0_implied = scale_rows(sub(batch.x_t, scale_rows(pred, sigmas)), inv_alpha);
        }
        break;
      }
      case TrainMode::Generator:
        recon = loss_x0(pred, batch.x0);
        x0_implied = pred;
        break;
      case TrainMode::Distill:
        recon = loss_x0(pred, target);
        x0_implied = pred;
        break;
    }

    Tensor total = mul(recon, cfg.weights.recon);
    double ssim_val = 0.0;
    if (use_ssim) {
      const Tensor& ref = cfg.mode == TrainMode::Distill ? target : batch.x0;
      Tensor ssim_term = batch_ssim_loss(x0_implied, ref, data.image_height, data.image_width);
      ssim_val = ssim_term.item();
      total = add(total, mul(ssim_term, cfg.weights.ssim));
    }

    const double loss_val = total.item();
    if (!std::isfinite(loss_val)) {
      model.params = last_good;
      if (sink) sink(last_good_step, model, false);
      throw NumericError("train: non-finite loss at step " + std::to_string(step) +
                             " (last good checkpoint at step " + std::to_string(last_good_step) + ")",
                         step);
    }
    last_good = model.params;
    last_good_step = step - 1;

    tape.backward(total);
    std::vector<Tensor> grads;
    grads.reserve(tracked.size());
    double grad_sq = 0.0;
    for (const Tensor& p : tracked) {
      Tensor g = tape.grad(p);
      for (double v : g.values()) grad_sq += v * v;
      grads.push_back(std::move(g));
    }
    adam_step(model.params, grads, adam, model.param_names);

    if (log && (step % cfg.log_every == 0 || step == cfg.steps)) {
      log->entries.push_back({step, recon.item(), ssim_val, std::sqrt(grad_sq), elapsed()});
    }
    if (sink && step % cfg.checkpoint_every == 0) {
      sink(step, model, false);
    }
    if (cfg.plateau_patience > 0 && step % cfg.log_every == 0) {
      if (loss_val < best_loss * (1.0 - 1e-3)) {
        best_loss = loss_val;
        stale_intervals = 0;
      } else if (++stale_intervals >= cfg.plateau_patience) {
        break;
      }
    }
  }
  if (sink) sink(cfg.steps, model, true);
  return model;
}

}  // namespace

DenoiserModel train_gradient(const TrainConfig& cfg, RunLog* log, const CheckpointSink& sink) {
  cfg.validate();
  if (cfg.mode != TrainMode::Gradient) throw ConfigError("train_gradient: mode mismatch");
  LoopSetup setup;
  setup.model = DenoiserModel::init(cfg.denoiser, Parameterization::EpsilonPrediction,
                                    cfg.schedule, cfg.seed);
  setup.noise_sched = NoiseSchedule::build(cfg.schedule);
  return run_loop(cfg, std::move(setup), log, sink);
}

DenoiserModel train_generator(const TrainConfig& cfg, RunLog* log, const CheckpointSink& sink) {
  cfg.validate();
  if (cfg.mode != TrainMode::Generator) throw ConfigError("train_generator: mode mismatch");
  LoopSetup setup;
  setup.model = DenoiserModel::init(cfg.denoiser, Parameterization::DataPrediction, cfg.schedule,
                                    cfg.seed);
  setup.noise_sched = NoiseSchedule::build(cfg.schedule);
  return run_loop(cfg, std::move(setup), log, sink);
}

DenoiserModel train_distilled(const TrainConfig& cfg, const DenoiserModel& teacher, RunLog* log,
                              const CheckpointSink& sink) {
  if (cfg.mode != TrainMode::Distill) throw ConfigError("train_distilled: mode mismatch");
  if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (teacher.parameterization != Parameterization::DataPrediction) {
    throw ConfigError(
        "train_distilled: teacher must be a data-prediction model; "
        "gradient-based teachers cannot be distilled");
  }
  LoopSetup setup;
  setup.plan = DistillPlan::halving(teacher.effective_steps());
  // The student is a copy of the teacher on the halved schedule; architecture
  // and base schedule come from the teacher, not the config.
  setup.model = teacher;
  setup.model.schedule.stride *= 2;
  setup.model.seed = cfg.seed;
  setup.teacher = &teacher;
  setup.noise_sched = NoiseSchedule::build(teacher.schedule);
  setup.step_stride = setup.plan.stride();
  return run_loop(cfg, std::move(setup), log, sink);
}

DenoiserModel train(const TrainConfig& cfg, RunLog* log, const CheckpointSink& sink) {
  cfg.validate();
  switch (cfg.mode) {
    case TrainMode::Gradient: return train_gradient(cfg, log, sink);
    case TrainMode::Generator: return train_generator(cfg, log, sink);
    case TrainMode::Distill: {
      DenoiserModel teacher = load_checkpoint(cfg.teacher_checkpoint);
      return train_distilled(cfg, teacher, log, sink);
    }
  }
  throw ConfigError("train: bad mode");
}

}  // namespace difflab
