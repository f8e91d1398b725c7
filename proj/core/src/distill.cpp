#include "difflab/distill.hpp"

#include <cmath>

#include "difflab/diffusion.hpp"
#include "difflab/training.hpp"

namespace difflab {

DistillPlan DistillPlan::halving(int teacher_steps) {
  if (teacher_steps < 2 || teacher_steps % 2 != 0) {
    throw ConfigError("distill: teacher steps must be even and >= 2, got " +
                      std::to_string(teacher_steps));
  }
  DistillPlan p;
  p.teacher_steps = teacher_steps;
  p.student_steps = teacher_steps / 2;
  return p;
}

Tensor distill_target(const DenoiserModel& teacher, const Tensor& x_t, int t,
                      const Tensor& condition, const NoiseSchedule& s, const DistillPlan& plan) {
  const int S = plan.stride();
  if (s.steps() != plan.teacher_steps) {
    throw std::invalid_argument("distill_target: schedule has " + std::to_string(s.steps()) +
                                " steps, plan expects " + std::to_string(plan.teacher_steps));
  }
  if (t % S != 0 || t < S || t > plan.teacher_steps) {
    throw std::invalid_argument("distill_target: t = " + std::to_string(t) +
                                " is not a stride multiple in [" + std::to_string(S) + ", " +
                                std::to_string(plan.teacher_steps) + "]");
  }
  const int t_mid = t - S / 2;
  const int t_lo = t - S;

  NoGrad frozen;  // teacher outputs never reach the student's tape
  const bool batched = x_t.rank() == 2;
  auto teach = [&](const Tensor& x, int step) {
    if (!batched) return teacher.forward(x.detach(), step, condition);
    std::vector<int> ts(static_cast<std::size_t>(x.shape()[0]), step);
    return teacher.forward_batch(x.detach(), ts, condition);
  };

  Tensor x = x_t.detach();
  Tensor x_mid = ddim_step(x, teach(x, t), t, t_mid, s);
  Tensor x_lo = ddim_step(x_mid, teach(x_mid, t_mid), t_mid, t_lo, s);

  const double ratio = s.sigma(t_lo) / s.sigma(t);
  const double denom = s.alpha(t_lo) - ratio * s.alpha(t);
  if (std::abs(denom) < 1e-12) {
    throw NumericError("distill_target: degenerate denominator at t = " + std::to_string(t), t);
  }
  return mul(sub(x_lo, mul(x, ratio)), 1.0 / denom);
}

std::vector<DenoiserModel> halving_chain(
    const DenoiserModel& teacher, int target_steps, const TrainConfig& cfg,
    const std::function<void(int, const DenoiserModel&, const RunLog&)>& on_round) {
  const int t1 = teacher.effective_steps();
  if (target_steps < 1 || t1 < target_steps || t1 % target_steps != 0) {
    throw ConfigError("distill: cannot reach " + std::to_string(target_steps) +
                      " steps from a " + std::to_string(t1) + "-step teacher");
  }
  int ratio = t1 / target_steps;
  if ((ratio & (ratio - 1)) != 0) {
    throw ConfigError("distill: teacher/target step ratio " + std::to_string(ratio) +
                      " is not a power of two");
  }
  std::vector<DenoiserModel> rounds;
  DenoiserModel current = teacher;
  int round = 0;
  while (current.effective_steps() > target_steps) {
    ++round;
    RunLog log;
    DenoiserModel student = train_distilled(cfg, current, &log);
    if (on_round) on_round(round, student, log);
    rounds.push_back(student);
    current = rounds.back();
  }
  return rounds;
}

}  // namespace difflab
