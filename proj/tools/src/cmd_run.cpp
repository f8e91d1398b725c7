// train, sample, eval, and distill-chain subcommands.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "commands.hpp"
#include "difflab/csv.hpp"
#include "difflab/diffusion.hpp"
#include "difflab/distill.hpp"

namespace difflab::cli {

namespace fs = std::filesystem;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

RunConfig load_config(const CommonArgs& args) {
  if (args.config_path.empty()) throw ConfigError("missing --config");
  RunConfig cfg = parse_run_config_file(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  return cfg;
}

// Uniform random one-hot conditions for a conditional model.
Tensor draw_conditions(int n, int classes, Rng& rng) {
  std::vector<double> data(static_cast<std::size_t>(n) * classes, 0.0);
  for (int i = 0; i < n; ++i) {
    data[static_cast<std::size_t>(i) * classes + rng.uniform_int(0, classes - 1)] = 1.0;
  }
  return Tensor({n, classes}, std::move(data));
}

Tensor sample_batch_from(const DenoiserModel& model, int n, std::uint64_t seed,
                         SampleTrace* trace = nullptr) {
  NoiseSchedule sched = NoiseSchedule::build(model.schedule);
  Rng rng(seed);
  Tensor conds;
  if (model.config.condition_dim > 0) {
    Rng crng = rng.stream(0x636f6e64);  // distinct stream for condition draws
    conds = draw_conditions(n, model.config.condition_dim, crng);
  }
  return ancestral_sample_batch(model, conds, n, sched, rng, trace);
}

void eval_model_against(const RunConfig& cfg, const DenoiserModel* model, const fs::path& out,
                        int threads) {
  Dataset train = generate(cfg.dataset);
  const bool image = train.is_image();

  Tensor generated;
  if (model) {
    Tensor raw = sample_batch_from(*model, cfg.metrics.n_generated, cfg.seed + 1);
    generated = to_data_space(raw, image);
  } else {
    DatasetSpec eval_spec = cfg.dataset;
    eval_spec.count = cfg.metrics.n_generated;
    generated = generate_split(eval_spec, "eval").samples;
  }

  MetricsReport report = evaluate_samples(train.samples, generated, cfg.metrics.bins,
                                          cfg.metrics.alpha, cfg.metrics.kmeans_seed, threads);
  write_metrics_csv(out, report, train.count(), cfg.metrics.n_generated, cfg.metrics.bins,
                    cfg.metrics.alpha);

  // Per-iteration quality curve: energy distance of the evolving state and
  // of the clean-data prediction after each reverse step.
  if (model) {
    const int n_curve = std::min(cfg.metrics.n_generated, 1024);
    SampleTrace tr;
    sample_batch_from(*model, n_curve, cfg.seed + 2, &tr);
    std::ofstream curve(out / "per_step_quality.csv");
    curve << "t,energy_state,energy_pred\n";
    for (const auto& step : tr.steps) {
      if (!step.x0_pred.defined()) continue;
      const double e_state =
          energy_distance(train.samples, to_data_space(step.x, image), threads);
      const double e_pred =
          energy_distance(train.samples, to_data_space(step.x0_pred, image), threads);
      curve << step.t << ',' << fmt_double(e_state) << ',' << fmt_double(e_pred) << "\n";
    }
  }
  std::cout << "eval: ndb=" << report.ndb << " js=" << report.js
            << " energy=" << report.energy_distance << "\n";
}

}  // namespace

int cmd_train(const CommonArgs& args) {
  RunConfig cfg = load_config(args);
  const fs::path out = resolve_out_dir(args, cfg.output_dir);
  fs::create_directories(out);
  write_manifest(out, "train", cfg, cfg.seed);

  Dataset data = generate(cfg.dataset);
  if (data.is_image()) {
    save_images_raw(data, (out / "dataset_images").string());
  } else {
    save_points_csv(data, (out / "dataset.csv").string());
  }

  RunLog log;
  CheckpointSink sink = [&](std::int64_t step, const DenoiserModel& m, bool final) {
    if (final) {
      save_checkpoint(m, (out / "checkpoint.json").string());
    } else {
      save_checkpoint(m, (out / ("checkpoint_step" + std::to_string(step) + ".json")).string());
    }
  };
  DenoiserModel model = train(cfg.to_train_config(), &log, sink);
  write_runlog(out / "runlog.csv", log);
  std::cout << "train: mode=" << to_string(cfg.mode) << " steps=" << cfg.steps
            << " checkpoint=" << (out / "checkpoint.json").string() << "\n";
  return 0;
}

int cmd_sample(const CommonArgs& args, int n, bool trace) {
  if (args.checkpoint_path.empty()) throw ConfigError("missing --checkpoint");
  if (n < 0) throw ConfigError("sample: n must be >= 0");
  DenoiserModel model = load_checkpoint(args.checkpoint_path);
  const fs::path out = args.out_dir.empty() ? fs::path(".") : fs::path(args.out_dir);
  fs::create_directories(out);
  NoiseSchedule sched = NoiseSchedule::build(model.schedule);
  const std::uint64_t seed = args.seed_set ? args.seed : model.seed;
  write_checkpoint_manifest(out, "sample", args.checkpoint_path, seed, n);

  Rng base(seed);
  Rng cond_rng = base.stream(0x636f6e64);
  std::vector<double> rows;
  rows.reserve(static_cast<std::size_t>(n) * model.config.input_dim);
  std::vector<double> timings(static_cast<std::size_t>(n), 0.0);
  std::ofstream traj;
  if (trace) {
    traj.open(out / "trajectory.csv");
    traj << "sample,t";
    for (int j = 0; j < model.config.input_dim; ++j) traj << ",x" << j;
    traj << "\n";
  }
  for (int i = 0; i < n; ++i) {
    Tensor cond;
    if (model.config.condition_dim > 0) {
      cond = take_row(draw_conditions(1, model.config.condition_dim, cond_rng), 0);
    }
    Rng chain_rng = base.stream(static_cast<std::uint64_t>(i));
    SampleTrace tr;
    const double t0 = now_seconds();
    Tensor x = ancestral_sample(model, cond, sched, chain_rng, trace ? &tr : nullptr);
    timings[static_cast<std::size_t>(i)] = now_seconds() - t0;
    for (double v : x.values()) rows.push_back(v);
    if (trace) {
      for (const auto& step : tr.steps) {
        traj << i << ',' << step.t;
        for (double v : step.x.values()) traj << ',' << fmt_double(v);
        traj << "\n";
      }
    }
  }
  Tensor samples = n > 0 ? Tensor({n, model.config.input_dim}, std::move(rows)) : Tensor();
  write_samples_csv(out / "samples.csv", samples, model.config.input_dim);
  write_timings_csv(out / "timings.csv", timings);
  std::cout << "sample: n=" << n << " steps=" << model.effective_steps() << " -> "
            << (out / "samples.csv").string() << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& args) {
  RunConfig cfg = load_config(args);
  const fs::path out = resolve_out_dir(args, cfg.output_dir);
  fs::create_directories(out);
  write_manifest(out, "eval", cfg, cfg.seed);
  const int threads = resolve_threads(args);
  if (args.checkpoint_path.empty()) {
    // Self mode: a fresh draw of the data distribution plays the generator.
    eval_model_against(cfg, nullptr, out, threads);
  } else {
    DenoiserModel model = load_checkpoint(args.checkpoint_path);
    eval_model_against(cfg, &model, out, threads);
  }
  return 0;
}

int cmd_distill_chain(const CommonArgs& args) {
  RunConfig cfg = load_config(args);
  if (cfg.chain.teacher_checkpoint.empty()) {
    throw ConfigError("distill-chain: config needs chain.teacher_checkpoint");
  }
  const fs::path out = resolve_out_dir(args, cfg.output_dir);
  fs::create_directories(out);
  write_manifest(out, "distill-chain", cfg, cfg.seed);
  const int threads = resolve_threads(args);

  DenoiserModel teacher = load_checkpoint(cfg.chain.teacher_checkpoint);
  TrainConfig round_cfg = cfg.to_train_config();
  round_cfg.mode = TrainMode::Distill;
  round_cfg.teacher_checkpoint = cfg.chain.teacher_checkpoint;

  Dataset train_data = generate(cfg.dataset);
  const bool image = train_data.is_image();
  std::ofstream table(out / "chain_metrics.csv");
  table << "round,steps,js,ndb,energy_distance,train_seconds\n";

  auto eval_row = [&](int round, const DenoiserModel& m, double train_seconds) {
    Tensor gen = to_data_space(sample_batch_from(m, cfg.metrics.n_generated, cfg.seed + 1), image);
    MetricsReport r = evaluate_samples(train_data.samples, gen, cfg.metrics.bins,
                                       cfg.metrics.alpha, cfg.metrics.kmeans_seed, threads);
    table << round << ',' << m.effective_steps() << ',' << fmt_double(r.js) << ',' << r.ndb
          << ',' << fmt_double(r.energy_distance) << ',' << fmt_double(train_seconds) << "\n";
    table.flush();
  };

  eval_row(0, teacher, 0.0);
  double round_started = now_seconds();
  auto on_round = [&](int round, const DenoiserModel& m, const RunLog& log) {
    save_checkpoint(m, (out / ("checkpoint_T" + std::to_string(m.effective_steps()) + ".json"))
                           .string());
    std::ofstream rl(out / ("runlog_round" + std::to_string(round) + ".csv"));
    log.write_csv(rl);
    eval_row(round, m, now_seconds() - round_started);
    round_started = now_seconds();
  };
  auto rounds = halving_chain(teacher, cfg.chain.target_steps, round_cfg, on_round);
  std::cout << "distill-chain: " << rounds.size() << " round(s) -> " << out.string() << "\n";
  return 0;
}

}  // namespace difflab::cli
