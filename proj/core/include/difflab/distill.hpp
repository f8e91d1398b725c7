#pragma once

#include <functional>
#include <vector>

#include "difflab/denoiser.hpp"
#include "difflab/schedule.hpp"
#include "difflab/tensor.hpp"

namespace difflab {

struct TrainConfig;
struct RunLog;

// One halving round: a T1-step teacher taught to a T2 = T1/2 step student.
// Only stride-2 halving is supported, so intermediate times stay integral.
struct DistillPlan {
  int teacher_steps = 4;  // T1 on the teacher's effective schedule
  int student_steps = 2;  // T2

  static DistillPlan halving(int teacher_steps);
  int stride() const { return 2; }
};

// The training target of one distillation example: run two teacher DDIM
// steps t -> t-1 -> t-2 from x_t, then solve for the x0 a single student
// DDIM step t -> t-2 needs to land on the same point. The teacher runs
// outside any gradient tape and the result is detached.
//
// `x_t` is a single sample (rank 1) or a batch sharing the step (rank 2);
// `t` is on the teacher's effective scale and must be a multiple of the
// stride. `s` is the teacher's effective schedule.
Tensor distill_target(const DenoiserModel& teacher, const Tensor& x_t, int t,
                      const Tensor& condition, const NoiseSchedule& s, const DistillPlan& plan);

// Repeated halving 2^k * target_steps -> ... -> target_steps. Each round's
// student becomes the next round's teacher; every round trains with the full
// budget in `cfg`. Returns the produced students in order (empty when the
// teacher already runs at target_steps). `on_round(round, model, log)` fires
// after each round when given.
std::vector<DenoiserModel> halving_chain(
    const DenoiserModel& teacher, int target_steps, const TrainConfig& cfg,
    const std::function<void(int, const DenoiserModel&, const RunLog&)>& on_round = {});

}  // namespace difflab
