// The parameterization-by-steps comparison grid.
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "commands.hpp"
#include "difflab/csv.hpp"
#include "difflab/diffusion.hpp"

namespace difflab::cli {

namespace fs = std::filesystem;

namespace {

struct CellResult {
  Parameterization param;
  int steps = 0;
  bool ok = false;
  std::string error;
  double js = 0.0;
  int ndb = 0;
  double ndb_fraction = 0.0;
  double energy = 0.0;
  double train_seconds = 0.0;
  double sample_seconds = 0.0;  // median per-sample wall clock, batch 1
};

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

// Median per-sample cost over 5 repetitions after 1 warmup, batch size 1.
double time_sampling(const DenoiserModel& model, std::uint64_t seed, int samples_per_rep) {
  NoiseSchedule sched = NoiseSchedule::build(model.schedule);
  auto run_once = [&](std::uint64_t s) {
    Rng rng(s);
    const double t0 = now_seconds();
    for (int i = 0; i < samples_per_rep; ++i) {
      Rng chain = rng.stream(static_cast<std::uint64_t>(i));
      ancestral_sample(model, Tensor(), sched, chain);
    }
    return (now_seconds() - t0) / samples_per_rep;
  };
  run_once(seed);  // warmup
  std::vector<double> reps;
  for (int r = 0; r < 5; ++r) reps.push_back(run_once(seed + 1 + static_cast<std::uint64_t>(r)));
  std::sort(reps.begin(), reps.end());
  return reps[2];
}

}  // namespace

int cmd_compare(const CommonArgs& args) {
  if (args.config_path.empty()) throw ConfigError("missing --config");
  RunConfig cfg = parse_run_config_file(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  if (cfg.condition_on_labels) {
    throw ConfigError("compare: label conditioning is not part of the comparison grid");
  }
  const fs::path out = resolve_out_dir(args, cfg.output_dir);
  fs::create_directories(out);
  write_manifest(out, "compare", cfg, cfg.seed);
  const int threads = resolve_threads(args);

  Dataset train_data = generate(cfg.dataset);
  const bool image = train_data.is_image();

  std::vector<CellResult> cells;
  for (Parameterization p : cfg.compare.parameterizations) {
    for (int steps : cfg.compare.step_counts) {
      CellResult c;
      c.param = p;
      c.steps = steps;
      cells.push_back(c);
    }
  }

  Rng seed_rng(cfg.seed);
  std::vector<std::uint64_t> cell_seeds;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    cell_seeds.push_back(seed_rng.stream(i).next_u64());
  }

  auto run_cell = [&](std::size_t idx) {
    CellResult& cell = cells[idx];
    const fs::path cell_dir =
        out / (to_string(cell.param) + "_T" + std::to_string(cell.steps));
    fs::create_directories(cell_dir);
    try {
      TrainConfig tc = cfg.to_train_config();
      tc.mode = cell.param == Parameterization::EpsilonPrediction ? TrainMode::Gradient
                                                                  : TrainMode::Generator;
      tc.schedule.steps = cell.steps;
      tc.schedule.stride = 1;
      tc.seed = cell_seeds[idx];
      RunLog log;
      const double t0 = now_seconds();
      DenoiserModel model = train(tc, &log);
      cell.train_seconds = now_seconds() - t0;
      save_checkpoint(model, (cell_dir / "checkpoint.json").string());
      {
        std::ofstream rl(cell_dir / "runlog.csv");
        log.write_csv(rl);
      }
      NoiseSchedule sched = NoiseSchedule::build(model.schedule);
      Rng rng(cell_seeds[idx] + 1);
      Tensor gen = to_data_space(
          ancestral_sample_batch(model, Tensor(), cfg.metrics.n_generated, sched, rng), image);
      MetricsReport r = evaluate_samples(train_data.samples, gen, cfg.metrics.bins,
                                         cfg.metrics.alpha, cfg.metrics.kmeans_seed, 1);
      cell.js = r.js;
      cell.ndb = r.ndb;
      cell.ndb_fraction = r.ndb_fraction;
      cell.energy = r.energy_distance;
      cell.sample_seconds = time_sampling(model, cell_seeds[idx] + 2, 64);
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  };

  // Cells across worker threads, each cell single-threaded with its own seed
  // substream and its own output subdirectory.
  if (threads > 1 && cells.size() > 1) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= cells.size()) return;
        run_cell(i);
      }
    };
    std::vector<std::thread> pool;
    const int n_workers = std::min<int>(threads, static_cast<int>(cells.size()));
    for (int i = 1; i < n_workers; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
  } else {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  }

  std::ofstream table(out / "table.csv");
  table << "parameterization,steps,js,ndb,ndb_fraction,energy_distance,train_seconds,"
           "sample_seconds,status,error\n";
  for (const CellResult& c : cells) {
    table << to_string(c.param) << ',' << c.steps << ',' << fmt_double(c.js) << ',' << c.ndb
          << ',' << fmt_double(c.ndb_fraction) << ',' << fmt_double(c.energy) << ','
          << fmt_double(c.train_seconds) << ',' << fmt_double(c.sample_seconds) << ','
          << (c.ok ? "ok" : "error") << ',' << c.error << "\n";
  }
  std::cout << "compare: " << cells.size() << " cells -> " << (out / "table.csv").string()
            << "\n";
  return 0;
}

}  // namespace difflab::cli
