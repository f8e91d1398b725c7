#include <doctest.h>

#include <cmath>
#include <vector>

#include "difflab/diffusion.hpp"
#include "difflab/schedule.hpp"
#include "oracles.hpp"

using namespace difflab;

namespace {

NoiseSchedule linear_sched(int T, double lo, double hi) {
  ScheduleSpec s;
  s.steps = T;
  s.beta_min = lo;
  s.beta_max = hi;
  return NoiseSchedule::build(s);
}

}  // namespace

TEST_SUITE("diffusion") {

TEST_CASE("forward diffusion boundary and hand-evaluated cases") {
  NoiseSchedule s = linear_sched(2, 0.75, 0.75);
  Tensor x0({1}, {2.0});
  Tensor eps({1}, {1.0});

  Tensor same = forward_diffuse(x0, 0, eps, s);
  CHECK(same[0] == 2.0);

  Tensor no_noise = forward_diffuse(x0, 2, Tensor::zeros({1}), s);
  CHECK(no_noise[0] == doctest::Approx(0.25 * 2.0).epsilon(1e-12));

  Tensor noisy = forward_diffuse(x0, 2, eps, s);
  CHECK(noisy[0] == doctest::Approx(0.25 * 2.0 + std::sqrt(0.9375)).epsilon(1e-12));

  CHECK_THROWS_AS(forward_diffuse(x0, 1, Tensor::zeros({2}), s), DimError);
}

TEST_CASE("iterated chain matches closed-form moments") {
  NoiseSchedule s = linear_sched(3, 0.2, 0.5);
  const int n = 20000;
  Rng rng(99);
  Tensor x0({1}, {1.5});
  for (int t = 1; t <= 3; ++t) {
    std::vector<double> finals(n);
    for (int i = 0; i < n; ++i) finals[static_cast<std::size_t>(i)] = iterate_chain(x0, t, s, rng)[0];
    const double want_mean = s.alpha(t) * 1.5;
    const double want_var = s.sigma(t) * s.sigma(t);
    const double se = s.sigma(t) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(oracles::mean_of(finals) - want_mean) < 3.5 * se);
    CHECK(std::abs(oracles::variance_of(finals) - want_var) / want_var < 0.06);
  }
}

TEST_CASE("near-zero beta leaves the chain at x0") {
  ScheduleSpec spec;
  spec.steps = 3;
  spec.beta_min = 1e-300;
  spec.beta_max = 1e-300;
  NoiseSchedule s = NoiseSchedule::build(spec);
  Rng rng(1);
  Tensor x0({2}, {0.5, -0.25});
  Tensor out = iterate_chain(x0, 3, s, rng);
  CHECK(std::abs(out[0] - 0.5) < 1e-100);
  CHECK(std::abs(out[1] + 0.25) < 1e-100);
}

TEST_CASE("posterior at t = 1 collapses onto x0") {
  NoiseSchedule s = linear_sched(4, 0.1, 0.4);
  Tensor x_t({2}, {0.3, -0.8});
  Tensor x0({2}, {1.0, 2.0});
  PosteriorParams p = posterior(x_t, x0, 1, s);
  CHECK(p.variance == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(p.mean[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.mean[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(posterior(x_t, x0, 0, s), std::invalid_argument);
}

TEST_CASE("posterior matches the grid-quadrature Bayes oracle") {
  NoiseSchedule s = linear_sched(2, 0.3, 0.3);
  const double x_t = 0.7, x0 = 1.2;
  PosteriorParams p = posterior(Tensor({1}, {x_t}), Tensor({1}, {x0}), 2, s);
  const auto grid = oracles::grid_bayes_posterior(x_t, x0, s.beta(2), s.alpha(1), s.sigma(1));
  CHECK(std::abs(p.mean[0] - grid.mean) < 1e-3);
  CHECK(std::abs(p.variance - grid.variance) < 1e-3);
}

TEST_CASE("posterior coefficients recover alpha_{t-1} on the noiseless pair") {
  NoiseSchedule s = linear_sched(6, 1e-4, 0.6);
  for (int t = 1; t <= 6; ++t) {
    const double x0 = 0.9;
    Tensor mean = posterior(Tensor({1}, {s.alpha(t) * x0}), Tensor({1}, {x0}), t, s).mean;
    CHECK(mean[0] == doctest::Approx(s.alpha(t - 1) * x0).epsilon(1e-12));
  }
}

TEST_CASE("ddim boundary, substitution, and composition") {
  NoiseSchedule s = linear_sched(6, 1e-4, 0.6);
  Rng rng(5);
  Tensor x0({3}, {0.4, -1.0, 0.2});
  Tensor eps = randn({3}, rng);

  Tensor x_t = forward_diffuse(x0, 4, eps, s);
  // Exact x0 estimate: a DDIM step reproduces the closed form at t_next.
  Tensor stepped = ddim_step(x_t, x0, 4, 2, s);
  Tensor direct = forward_diffuse(x0, 2, eps, s);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(stepped[i] - direct[i]) < 1e-12);

  Tensor to_zero = ddim_step(x_t, x0, 4, 0, s);
  for (int i = 0; i < 3; ++i) CHECK(to_zero[i] == doctest::Approx(x0[i]).epsilon(1e-12));

  // Semigroup with the x0 estimate held fixed.
  Tensor guess = randn({3}, rng);
  Tensor two_hop = ddim_step(ddim_step(x_t, guess, 4, 3, s), guess, 3, 1, s);
  Tensor one_hop = ddim_step(x_t, guess, 4, 1, s);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(two_hop[i] - one_hop[i]) < 1e-12);

  CHECK_THROWS_AS(ddim_step(x_t, x0, 2, 2, s), std::invalid_argument);
  CHECK_THROWS_AS(ddim_step(x_t, x0, 2, 3, s), std::invalid_argument);
}

TEST_CASE("epsilon / x0 / score conversions are consistent") {
  NoiseSchedule s = linear_sched(4, 0.05, 0.5);
  Rng rng(17);
  Tensor x0 = randn({5}, rng);
  Tensor eps = randn({5}, rng);
  for (int t = 1; t <= 4; ++t) {
    Tensor x_t = forward_diffuse(x0, t, eps, s);
    Tensor x0_rec = eps_to_x0(x_t, eps, t, s);
    for (int i = 0; i < 5; ++i) CHECK(std::abs(x0_rec[i] - x0[i]) < 1e-12);

    Tensor eps_rec = x0_to_eps(x_t, x0_rec, t, s);
    for (int i = 0; i < 5; ++i) CHECK(std::abs(eps_rec[i] - eps[i]) < 1e-12);

    Tensor sc = score_from_eps(eps, t, s);
    for (int i = 0; i < 5; ++i) {
      CHECK(sc[i] == doctest::Approx(-eps[i] / s.sigma(t)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(eps_to_x0(x0, eps, 0, s), std::invalid_argument);
  CHECK_THROWS_AS(x0_to_eps(x0, eps, 0, s), std::invalid_argument);
  CHECK_THROWS_AS(score_from_eps(eps, 0, s), std::invalid_argument);
}

TEST_CASE("one-step sampler with a constant denoiser is deterministic") {
  NoiseSchedule s = linear_sched(1, 0.5, 0.5);
  Rng rng(3);
  Tensor mu({2}, {0.25, -0.75});
  DenoiseFn fn = [&](const Tensor&, int) { return mu; };
  Tensor out = ancestral_sample(fn, Parameterization::DataPrediction, s, {2}, rng);
  CHECK(out[0] == mu[0]);
  CHECK(out[1] == mu[1]);
}

TEST_CASE("perfect point-mass denoiser reproduces the target exactly") {
  Tensor star({2}, {1.0, -2.0});
  DenoiseFn fn = [&](const Tensor&, int) { return star; };
  for (int T : {1, 2, 4, 8}) {
    NoiseSchedule s = linear_sched(T, 1e-4, 0.6);
    Rng rng(41 + T);
    Tensor out = ancestral_sample(fn, Parameterization::DataPrediction, s, {2}, rng);
    CHECK(out[0] == doctest::Approx(star[0]).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(star[1]).epsilon(1e-12));
  }
}

TEST_CASE("sampler aborts on non-finite denoiser output with the step index") {
  NoiseSchedule s = linear_sched(3, 0.1, 0.5);
  Rng rng(4);
  DenoiseFn fn = [&](const Tensor& x, int t) {
    if (t == 2) return Tensor({2}, {std::nan(""), 0.0});
    return Tensor::zeros(x.shape());
  };
  try {
    ancestral_sample(fn, Parameterization::DataPrediction, s, {2}, rng);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.step == 2);
  }
}

TEST_CASE("langevin with zero steps or zero score behaves as documented") {
  Rng rng(8);
  Tensor x0({2}, {0.1, 0.2});
  auto zero_score = [](const Tensor& x) { return Tensor::zeros(x.shape()); };

  Tensor unchanged = langevin_sample(zero_score, x0, 0.1, 0, rng);
  CHECK(unchanged[0] == x0[0]);
  CHECK(unchanged[1] == x0[1]);

  // Pure random walk: Var = eta * n_steps per coordinate.
  const double eta = 0.01;
  const int steps = 400;
  const int reps = 4000;
  std::vector<double> finals(reps);
  for (int r = 0; r < reps; ++r) {
    finals[static_cast<std::size_t>(r)] = langevin_sample(zero_score, Tensor::zeros({1}), eta, steps, rng)[0];
  }
  const double var = oracles::variance_of(finals);
  CHECK(std::abs(var - eta * steps) / (eta * steps) < 0.1);
}

TEST_CASE("langevin aborts when the chain diverges") {
  Rng rng(9);
  auto exploding = [](const Tensor& x) { return mul(x, 1e9); };
  CHECK_THROWS_AS(
      langevin_sample(exploding, Tensor({1}, {1.0}), 1.0, 50, rng, 1e6), NumericError);
  CHECK_THROWS_AS(langevin_sample(exploding, Tensor({1}, {1.0}), -0.1, 5, rng),
                  std::invalid_argument);
}

}  // TEST_SUITE
