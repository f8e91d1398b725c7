#pragma once

#include <optional>
#include <string>
#include <vector>

#include "difflab/errors.hpp"

namespace difflab {

enum class ScheduleKind { Linear, PaperCosine, AlphabarCosine };

std::string to_string(ScheduleKind k);
ScheduleKind schedule_kind_from_string(const std::string& s);

// Declarative description of a discrete noise schedule; serializes with run
// configs and checkpoints. `stride` > 1 denotes the coarse sub-chain that a
// distilled model walks: the base schedule sampled every `stride` steps.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::Linear;
  int steps = 4;            // T of the base schedule
  double beta_min = 1e-4;   // linear
  double beta_max = 0.6;    // linear
  double offset = 0.008;    // alphabar-cosine shift
  int stride = 1;

  int effective_steps() const { return steps / stride; }
};

struct StepConstants {
  double alpha;
  double sigma;
  std::optional<double> beta;  // absent at t = 0
};

// Precomputed per-step constants of the discrete diffusion chain:
// beta[1..T] in (0,1), alpha[t] = prod_{i<=t} sqrt(1 - beta_i) with
// alpha[0] = 1, sigma[t] = sqrt(1 - alpha[t]^2) with sigma[0] = 0.
// Immutable after construction; safe for concurrent reads.
class NoiseSchedule {
 public:
  static NoiseSchedule build(const ScheduleSpec& spec);

  int steps() const { return static_cast<int>(alpha_.size()) - 1; }

  double alpha(int t) const { return alpha_[check(t)]; }
  double sigma(int t) const { return sigma_[check(t)]; }
  double beta(int t) const;
  StepConstants lookup(int t) const;

  // Coarse sub-chain visiting every `factor`-th step of this schedule.
  // alpha/sigma values at the kept steps are carried over exactly; beta is
  // rederived from consecutive alpha ratios.
  NoiseSchedule strided(int factor) const;

  // Default instance is the trivial T = 0 chain (alpha = 1, sigma = 0).
  NoiseSchedule() : alpha_{1.0}, sigma_{0.0}, beta_{0.0} {}

 private:
  std::size_t check(int t) const;
  std::vector<double> alpha_;  // index 0..T
  std::vector<double> sigma_;  // index 0..T
  std::vector<double> beta_;   // index 1..T (slot 0 unused)
};

}  // namespace difflab
