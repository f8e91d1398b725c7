// CSV -> SVG plotting: 2-D scatter overlays, loss curves, per-iteration
// quality curves, and comparison tables.
#include <filesystem>
#include <iostream>
#include <map>

#include "commands.hpp"
#include "difflab/csv.hpp"
#include "svg.hpp"

namespace difflab::cli {

namespace fs = std::filesystem;

namespace {

const char* kScatterColors[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377"};

std::vector<double> column_values(const CsvTable& t, int col) {
  std::vector<double> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) out.push_back(std::stod(row[static_cast<std::size_t>(col)]));
  return out;
}

}  // namespace

int cmd_plot(const CommonArgs& args, const std::vector<std::string>& inputs) {
  if (inputs.empty()) throw ConfigError("plot: no input CSVs given");
  const fs::path out = args.out_dir.empty() ? fs::path(".") : fs::path(args.out_dir);
  fs::create_directories(out);

  std::vector<Series> scatter;
  int written = 0;
  int color_idx = 0;
  for (const std::string& input : inputs) {
    CsvTable t = read_csv(input);
    if (t.rows.empty()) {
      throw ConfigError("plot: '" + input + "' has no data rows");
    }
    const std::string stem = fs::path(input).stem().string();

    if (t.column("step") >= 0 && t.column("loss_recon") >= 0) {
      // Training log.
      std::vector<Series> series;
      Series recon{"loss_recon", "#4477aa", column_values(t, t.column("step")),
                   column_values(t, t.column("loss_recon")), true};
      series.push_back(recon);
      if (t.column("loss_ssim") >= 0) {
        series.push_back({"loss_ssim", "#ee6677", recon.x,
                          column_values(t, t.column("loss_ssim")), true});
      }
      const std::string path = (out / ("loss_" + stem + ".svg")).string();
      write_svg_chart(path, "training loss: " + stem, "step", "loss", series, true);
      ++written;
    } else if (t.column("t") >= 0 && t.column("energy_pred") >= 0) {
      // Per-iteration quality curve.
      std::vector<Series> series{{"state", "#4477aa", column_values(t, t.column("t")),
                                  column_values(t, t.column("energy_state")), true},
                                 {"prediction", "#ee6677", column_values(t, t.column("t")),
                                  column_values(t, t.column("energy_pred")), true}};
      const std::string path = (out / ("quality_" + stem + ".svg")).string();
      write_svg_chart(path, "per-step energy distance: " + stem, "t (reverse step reached)",
                      "energy distance", series);
      ++written;
    } else if (t.column("parameterization") >= 0 && t.column("js") >= 0) {
      // Comparison table: one JS-vs-steps line per parameterization.
      std::map<std::string, Series> by_param;
      const int pcol = t.column("parameterization");
      const int scol = t.column("steps");
      const int jcol = t.column("js");
      const int okcol = t.column("status");
      int ci = 0;
      for (const auto& row : t.rows) {
        if (okcol >= 0 && row[static_cast<std::size_t>(okcol)] != "ok") continue;
        const std::string& p = row[static_cast<std::size_t>(pcol)];
        auto [it, fresh] = by_param.try_emplace(p);
        if (fresh) {
          it->second.name = p;
          it->second.color = kScatterColors[ci++ % 6];
          it->second.line = true;
        }
        it->second.x.push_back(std::stod(row[static_cast<std::size_t>(scol)]));
        it->second.y.push_back(std::stod(row[static_cast<std::size_t>(jcol)]));
      }
      std::vector<Series> series;
      for (auto& [name, s] : by_param) series.push_back(std::move(s));
      const std::string path = (out / ("compare_js_" + stem + ".svg")).string();
      write_svg_chart(path, "JS divergence vs steps", "diffusion steps", "JS", series, true);
      ++written;
    } else if (t.column("x0") >= 0 && t.column("x1") >= 0) {
      // 2-D points (dataset or samples); overlaid into one scatter.
      Series s;
      s.name = stem;
      s.color = kScatterColors[color_idx++ % 6];
      s.line = false;
      s.x = column_values(t, t.column("x0"));
      s.y = column_values(t, t.column("x1"));
      scatter.push_back(std::move(s));
    } else {
      throw ConfigError("plot: unrecognized CSV schema in '" + input + "'");
    }
  }
  if (!scatter.empty()) {
    const std::string path = (out / "scatter.svg").string();
    write_svg_chart(path, "samples", "x0", "x1", scatter);
    ++written;
  }
  std::cout << "plot: wrote " << written << " file(s) to " << out.string() << "\n";
  return 0;
}

}  // namespace difflab::cli
