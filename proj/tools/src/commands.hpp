#pragma once

#include <string>
#include <vector>

#include "artifacts.hpp"

namespace difflab::cli {

int cmd_train(const CommonArgs& args);
int cmd_sample(const CommonArgs& args, int n, bool trace);
int cmd_eval(const CommonArgs& args);
int cmd_compare(const CommonArgs& args);
int cmd_distill_chain(const CommonArgs& args);
int cmd_plot(const CommonArgs& args, const std::vector<std::string>& inputs);
int cmd_selftest();

}  // namespace difflab::cli
