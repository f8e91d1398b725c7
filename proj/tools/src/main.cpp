#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "difflab/errors.hpp"
#include "difflab/version.hpp"

int main(int argc, char** argv) {
  using namespace difflab;
  using namespace difflab::cli;

  CLI::App app{"difflab: a desk-scale diffusion model laboratory"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonArgs args;
  int n_samples = 100;
  bool trace = false;
  std::vector<std::string> plot_inputs;

  auto add_common = [&](CLI::App* sub, bool with_config, bool with_checkpoint) {
    if (with_config) sub->add_option("--config", args.config_path, "run-config JSON file");
    if (with_checkpoint) sub->add_option("--checkpoint", args.checkpoint_path, "model checkpoint");
    sub->add_option("--out", args.out_dir, "output directory (overrides config and DIFFLAB_OUT)");
    sub->add_option("--threads", args.threads, "worker threads (overrides DIFFLAB_THREADS)");
    sub->add_option("--seed", args.seed, "seed override")->each([&](const std::string&) {
      args.seed_set = true;
    });
  };

  CLI::App* train = app.add_subcommand("train", "train a model from a run config");
  add_common(train, true, false);

  CLI::App* sample = app.add_subcommand("sample", "draw samples from a checkpoint");
  add_common(sample, false, true);
  sample->add_option("--n", n_samples, "number of samples");
  sample->add_flag("--trace", trace, "dump per-step trajectories");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint (or the data against itself)");
  add_common(eval, true, true);

  CLI::App* compare = app.add_subcommand("compare", "parameterization x steps comparison table");
  add_common(compare, true, false);

  CLI::App* chain = app.add_subcommand("distill-chain", "progressive halving distillation");
  add_common(chain, true, false);

  CLI::App* plot = app.add_subcommand("plot", "render CSV outputs as SVG charts");
  add_common(plot, false, false);
  plot->add_option("inputs", plot_inputs, "input CSV files")->required();

  CLI::App* selftest = app.add_subcommand("selftest", "run the invariant suite");
  (void)selftest;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) return cmd_train(args);
    if (sample->parsed()) return cmd_sample(args, n_samples, trace);
    if (eval->parsed()) return cmd_eval(args);
    if (compare->parsed()) return cmd_compare(args);
    if (chain->parsed()) return cmd_distill_chain(args);
    if (plot->parsed()) return cmd_plot(args, plot_inputs);
    if (selftest->parsed()) return cmd_selftest();
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
