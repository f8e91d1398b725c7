#include "artifacts.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "difflab/csv.hpp"
#include "difflab/version.hpp"

namespace difflab::cli {

namespace fs = std::filesystem;

fs::path resolve_out_dir(const CommonArgs& args, const std::string& config_dir) {
  if (!args.out_dir.empty()) return args.out_dir;
  if (const char* env = std::getenv("DIFFLAB_OUT"); env && *env) return env;
  return config_dir;
}

int resolve_threads(const CommonArgs& args) {
  if (args.threads > 0) return args.threads;
  if (const char* env = std::getenv("DIFFLAB_THREADS"); env && *env) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& cfg,
                    std::uint64_t seed) {
  std::ofstream out(dir / "manifest.json");
  if (!out) throw ConfigError("cannot write manifest in '" + dir.string() + "'");
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  out << "{\n"
      << "  \"tool\": \"difflab\",\n"
      << "  \"version\": \"" << kVersion << "\",\n"
      << "  \"command\": \"" << command << "\",\n"
      << "  \"config_hash\": \"" << hash_hex << "\",\n"
      << "  \"seed\": " << seed << ",\n"
      << "  \"config\": " << run_config_to_json(cfg) << "\n"
      << "}\n";
}

void write_checkpoint_manifest(const fs::path& dir, const std::string& command,
                               const std::string& checkpoint, std::uint64_t seed, int n) {
  std::ofstream out(dir / "manifest.json");
  if (!out) throw ConfigError("cannot write manifest in '" + dir.string() + "'");
  out << "{\n"
      << "  \"tool\": \"difflab\",\n"
      << "  \"version\": \"" << kVersion << "\",\n"
      << "  \"command\": \"" << command << "\",\n"
      << "  \"checkpoint\": \"" << checkpoint << "\",\n"
      << "  \"seed\": " << seed << ",\n"
      << "  \"n\": " << n << "\n"
      << "}\n";
}

void write_runlog(const fs::path& path, const RunLog& log) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  log.write_csv(out);
}

void write_samples_csv(const fs::path& path, const Tensor& samples, int dim) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << "index";
  for (int j = 0; j < dim; ++j) out << ",x" << j;
  out << "\n";
  if (!samples.defined() || samples.rank() != 2) return;
  for (int i = 0; i < samples.shape()[0]; ++i) {
    out << i;
    for (int j = 0; j < dim; ++j) out << ',' << fmt_double(samples.at(i, j));
    out << "\n";
  }
}

void write_timings_csv(const fs::path& path, const std::vector<double>& seconds) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << "index,seconds\n";
  for (std::size_t i = 0; i < seconds.size(); ++i) {
    out << i << ',' << fmt_double(seconds[i]) << "\n";
  }
}

void write_metrics_csv(const fs::path& dir, const MetricsReport& report, int n_train,
                       int n_generated, int bins, double alpha) {
  {
    std::ofstream out(dir / "metrics.csv");
    if (!out) throw ConfigError("cannot write metrics.csv");
    out << "ndb,ndb_fraction,js,energy_distance,bins,alpha,n_train,n_generated\n";
    out << report.ndb << ',' << fmt_double(report.ndb_fraction) << ',' << fmt_double(report.js)
        << ',' << fmt_double(report.energy_distance) << ',' << bins << ',' << fmt_double(alpha)
        << ',' << n_train << ',' << n_generated << "\n";
  }
  std::ofstream out(dir / "bins.csv");
  if (!out) throw ConfigError("cannot write bins.csv");
  out << "bin,p_train,p_gen,z,significant\n";
  for (std::size_t i = 0; i < report.bins.size(); ++i) {
    const BinStat& b = report.bins[i];
    out << i << ',' << fmt_double(b.p_train) << ',' << fmt_double(b.p_gen) << ','
        << fmt_double(b.z) << ',' << (b.significant ? 1 : 0) << "\n";
  }
}

Tensor to_data_space(const Tensor& samples, bool image) {
  if (!image) return samples;
  return mul(add(samples, 1.0), 0.5);
}

}  // namespace difflab::cli
