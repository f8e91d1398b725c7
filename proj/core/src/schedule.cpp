#include "difflab/schedule.hpp"

#include <cmath>

namespace difflab {
namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> make_betas(const ScheduleSpec& spec) {
  const int T = spec.steps;
  std::vector<double> beta(static_cast<std::size_t>(T) + 1, 0.0);
  switch (spec.kind) {
    case ScheduleKind::Linear: {
      for (int t = 1; t <= T; ++t) {
        beta[static_cast<std::size_t>(t)] =
            T == 1 ? spec.beta_min
                   : spec.beta_min + (spec.beta_max - spec.beta_min) * (t - 1) / (T - 1);
      }
      break;
    }
    case ScheduleKind::PaperCosine: {
      // cos(0.5*pi*t) with the argument normalized to t/(T+1) so every beta
      // lands inside (0, 1).
      for (int t = 1; t <= T; ++t) {
        beta[static_cast<std::size_t>(t)] =
            std::cos(0.5 * kPi * static_cast<double>(t) / (T + 1));
      }
      break;
    }
    case ScheduleKind::AlphabarCosine: {
      const double s = spec.offset;
      auto abar = [&](double t) {
        const double f = std::cos((t / T + s) / (1.0 + s) * kPi / 2.0);
        return f * f;
      };
      const double abar0 = abar(0.0);
      double prev = 1.0;
      for (int t = 1; t <= T; ++t) {
        const double cur = abar(static_cast<double>(t)) / abar0;
        double b = 1.0 - cur / prev;
        if (b > 0.999) b = 0.999;
        beta[static_cast<std::size_t>(t)] = b;
        prev = cur;
      }
      break;
    }
  }
  return beta;
}

}  // namespace

std::string to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::Linear: return "linear";
    case ScheduleKind::PaperCosine: return "paper-cosine";
    case ScheduleKind::AlphabarCosine: return "alphabar-cosine";
  }
  return "?";
}

ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "linear") return ScheduleKind::Linear;
  if (s == "paper-cosine") return ScheduleKind::PaperCosine;
  if (s == "alphabar-cosine") return ScheduleKind::AlphabarCosine;
  throw ConfigError("schedule: unknown kind '" + s + "'");
}

NoiseSchedule NoiseSchedule::build(const ScheduleSpec& spec) {
  if (spec.steps < 1) {
    throw ConfigError("schedule: step count must be >= 1, got " + std::to_string(spec.steps));
  }
  if (spec.stride < 1 || spec.steps % spec.stride != 0) {
    throw ConfigError("schedule: stride " + std::to_string(spec.stride) +
                      " does not divide T = " + std::to_string(spec.steps));
  }
  NoiseSchedule s;
  s.beta_ = make_betas(spec);
  const int T = spec.steps;
  s.alpha_.resize(static_cast<std::size_t>(T) + 1);
  s.sigma_.resize(static_cast<std::size_t>(T) + 1);
  s.alpha_[0] = 1.0;
  s.sigma_[0] = 0.0;
  for (int t = 1; t <= T; ++t) {
    const double b = s.beta_[static_cast<std::size_t>(t)];
    if (!(b > 0.0 && b < 1.0)) {
      throw ConfigError("schedule: beta[" + std::to_string(t) + "] = " + std::to_string(b) +
                        " outside (0, 1)");
    }
    s.alpha_[static_cast<std::size_t>(t)] =
        s.alpha_[static_cast<std::size_t>(t - 1)] * std::sqrt(1.0 - b);
    s.sigma_[static_cast<std::size_t>(t)] =
        std::sqrt(1.0 - s.alpha_[static_cast<std::size_t>(t)] * s.alpha_[static_cast<std::size_t>(t)]);
  }
  if (spec.stride > 1) return s.strided(spec.stride);
  return s;
}

std::size_t NoiseSchedule::check(int t) const {
  if (t < 0 || t > steps()) {
    throw std::out_of_range("schedule: step " + std::to_string(t) + " outside [0, " +
                            std::to_string(steps()) + "]");
  }
  return static_cast<std::size_t>(t);
}

double NoiseSchedule::beta(int t) const {
  check(t);
  if (t == 0) throw std::out_of_range("schedule: beta is undefined at t = 0");
  return beta_[static_cast<std::size_t>(t)];
}

StepConstants NoiseSchedule::lookup(int t) const {
  check(t);
  StepConstants c{alpha_[static_cast<std::size_t>(t)], sigma_[static_cast<std::size_t>(t)], {}};
  if (t > 0) c.beta = beta_[static_cast<std::size_t>(t)];
  return c;
}

NoiseSchedule NoiseSchedule::strided(int factor) const {
  const int T = steps();
  if (factor < 1 || T % factor != 0) {
    throw ConfigError("schedule: stride " + std::to_string(factor) + " does not divide T = " +
                      std::to_string(T));
  }
  const int Tc = T / factor;
  NoiseSchedule out;
  out.alpha_.resize(static_cast<std::size_t>(Tc) + 1);
  out.sigma_.resize(static_cast<std::size_t>(Tc) + 1);
  out.beta_.resize(static_cast<std::size_t>(Tc) + 1, 0.0);
  for (int k = 0; k <= Tc; ++k) {
    out.alpha_[static_cast<std::size_t>(k)] = alpha_[static_cast<std::size_t>(k) * factor];
    out.sigma_[static_cast<std::size_t>(k)] = sigma_[static_cast<std::size_t>(k) * factor];
  }
  for (int k = 1; k <= Tc; ++k) {
    const double r = out.alpha_[static_cast<std::size_t>(k)] / out.alpha_[static_cast<std::size_t>(k - 1)];
    out.beta_[static_cast<std::size_t>(k)] = 1.0 - r * r;
  }
  return out;
}

}  // namespace difflab
