#include <doctest.h>

#include <cmath>

#include "difflab/schedule.hpp"

using namespace difflab;

namespace {

ScheduleSpec linear_spec(int T, double lo, double hi) {
  ScheduleSpec s;
  s.kind = ScheduleKind::Linear;
  s.steps = T;
  s.beta_min = lo;
  s.beta_max = hi;
  return s;
}

void check_identities(const NoiseSchedule& s) {
  CHECK(s.alpha(0) == 1.0);
  CHECK(s.sigma(0) == 0.0);
  for (int t = 1; t <= s.steps(); ++t) {
    const double a = s.alpha(t);
    const double sg = s.sigma(t);
    CHECK(std::abs(a * a + sg * sg - 1.0) < 1e-12);
    CHECK(std::abs(a - s.alpha(t - 1) * std::sqrt(1.0 - s.beta(t))) < 1e-12);
    CHECK(a < s.alpha(t - 1));
    CHECK(sg >= s.sigma(t - 1));
    // Strict until sigma saturates at 1.0 in double precision (alpha below
    // ~3e-9 rounds 1 - alpha^2 to 1).
    if (sg < 1.0) CHECK(sg > s.sigma(t - 1));
  }
}

}  // namespace

TEST_SUITE("schedule") {

TEST_CASE("hand-evaluated linear schedule, T = 2") {
  NoiseSchedule s = NoiseSchedule::build(linear_spec(2, 0.75, 0.75));
  CHECK(s.alpha(0) == 1.0);
  CHECK(s.alpha(1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.alpha(2) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(s.sigma(0) == 0.0);
  CHECK(s.sigma(1) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-12));
  CHECK(s.sigma(2) == doctest::Approx(std::sqrt(0.9375)).epsilon(1e-12));
}

TEST_CASE("product formula for constant beta, T = 4") {
  NoiseSchedule s = NoiseSchedule::build(linear_spec(4, 0.5, 0.5));
  CHECK(s.alpha(4) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("identities hold for every kind and size") {
  for (int T : {2, 4, 8, 64}) {
    check_identities(NoiseSchedule::build(linear_spec(T, 1e-4, 0.6)));
    ScheduleSpec pc;
    pc.kind = ScheduleKind::PaperCosine;
    pc.steps = T;
    check_identities(NoiseSchedule::build(pc));
    ScheduleSpec ac;
    ac.kind = ScheduleKind::AlphabarCosine;
    ac.steps = T;
    check_identities(NoiseSchedule::build(ac));
  }
}

TEST_CASE("lookup returns stored constants and hides beta at t = 0") {
  NoiseSchedule s = NoiseSchedule::build(linear_spec(2, 0.75, 0.75));
  StepConstants c0 = s.lookup(0);
  CHECK(c0.alpha == 1.0);
  CHECK(c0.sigma == 0.0);
  CHECK_FALSE(c0.beta.has_value());
  StepConstants c2 = s.lookup(2);
  CHECK(c2.alpha == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(c2.sigma == doctest::Approx(std::sqrt(0.9375)).epsilon(1e-12));
  CHECK(c2.beta.value() == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("lookup rejects out-of-range steps") {
  NoiseSchedule s = NoiseSchedule::build(linear_spec(2, 0.1, 0.2));
  CHECK_THROWS_AS(s.lookup(-1), std::out_of_range);
  CHECK_THROWS_AS(s.lookup(3), std::out_of_range);
  CHECK_THROWS_AS(s.beta(0), std::out_of_range);
}

TEST_CASE("defining recurrence alpha(t)/alpha(t-1) = sqrt(1 - beta_t)") {
  NoiseSchedule s = NoiseSchedule::build(linear_spec(8, 1e-4, 0.6));
  for (int t = 1; t <= 8; ++t) {
    CHECK(std::abs(s.alpha(t) / s.alpha(t - 1) - std::sqrt(1.0 - s.beta(t))) < 1e-12);
  }
}

TEST_CASE("construction rejects beta outside (0, 1) naming the step") {
  try {
    NoiseSchedule::build(linear_spec(3, 0.5, 1.5));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("beta[") != std::string::npos);
  }
  CHECK_THROWS_AS(NoiseSchedule::build(linear_spec(0, 0.1, 0.2)), ConfigError);
}

TEST_CASE("strided sub-chain keeps alpha values and identities") {
  NoiseSchedule base = NoiseSchedule::build(linear_spec(8, 1e-4, 0.6));
  NoiseSchedule coarse = base.strided(2);
  CHECK(coarse.steps() == 4);
  for (int k = 0; k <= 4; ++k) {
    CHECK(coarse.alpha(k) == base.alpha(2 * k));
    CHECK(coarse.sigma(k) == base.sigma(2 * k));
  }
  check_identities(coarse);
  // Building from a spec with stride folds the same way.
  ScheduleSpec spec = linear_spec(8, 1e-4, 0.6);
  spec.stride = 2;
  NoiseSchedule via_spec = NoiseSchedule::build(spec);
  for (int k = 0; k <= 4; ++k) CHECK(via_spec.alpha(k) == coarse.alpha(k));
  CHECK_THROWS_AS(base.strided(3), ConfigError);
}

}  // TEST_SUITE
