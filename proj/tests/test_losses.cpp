#include <doctest.h>

#include <cmath>

#include "difflab/losses.hpp"
#include "difflab/rng.hpp"
#include "oracles.hpp"

using namespace difflab;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  std::vector<double> data(static_cast<std::size_t>(n));
  for (auto& v : data) v = 2.0 * rng.uniform() - 1.0;
  return Tensor(std::move(shape), std::move(data));
}

NoiseSchedule default_sched(int T) {
  ScheduleSpec s;
  s.steps = T;
  return NoiseSchedule::build(s);
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("epsilon loss zero case and loop oracle") {
  Rng rng(2);
  Tensor e = random_tensor({4, 3}, rng);
  CHECK(loss_eps(e, e).item() == 0.0);

  Tensor zero = Tensor::zeros({4, 3});
  CHECK(loss_eps(zero, e).item() == doctest::Approx(oracles::mse_loop(zero.values(), e.values()))
                                        .epsilon(1e-12));

  Tensor p = random_tensor({4, 3}, rng);
  CHECK(std::abs(loss_eps(p, e).item() - oracles::mse_loop(p.values(), e.values())) < 1e-12);
  CHECK_THROWS_AS(loss_eps(p, Tensor::zeros({3, 4})), DimError);
}

TEST_CASE("x0 loss detaches its target") {
  Rng rng(3);
  Tensor x0 = random_tensor({5}, rng);
  Tape tape;
  Tensor pred = tape.watch(random_tensor({5}, rng));
  Tensor target = tape.watch(x0);
  Tensor loss = loss_x0(pred, target.detach());
  tape.backward(loss);
  Tensor g_target = tape.grad(target);
  for (int i = 0; i < 5; ++i) CHECK(g_target[i] == 0.0);
  Tensor g_pred = tape.grad(pred);
  bool any = false;
  for (int i = 0; i < 5; ++i) any = any || g_pred[i] != 0.0;
  CHECK(any);
}

TEST_CASE("score-matching loss agrees with the epsilon loss up to 1/sigma^2") {
  Rng rng(5);
  NoiseSchedule s = default_sched(6);
  for (int t = 1; t <= 6; ++t) {
    Tensor eps = random_tensor({8}, rng);
    Tensor score = random_tensor({8}, rng);
    const double sig = s.sigma(t);
    const double lhs = loss_score_matching(score, eps, t, s).item();
    const double rhs = loss_eps(mul(neg(score), sig), eps).item() / (sig * sig);
    CHECK(std::abs(lhs - rhs) < 1e-10);

    Tensor exact = mul(eps, -1.0 / sig);
    CHECK(loss_score_matching(exact, eps, t, s).item() == doctest::Approx(0.0).epsilon(1e-15));
  }
  Tensor z = Tensor::zeros({4});
  CHECK(loss_score_matching(z, z, 3, s).item() == 0.0);
  CHECK_THROWS_AS(loss_score_matching(z, z, 0, s), std::invalid_argument);
}

TEST_CASE("ssim of an image with itself is exactly 1") {
  Rng rng(7);
  Tensor img = random_tensor({10, 9}, rng);
  CHECK(ssim(img, img).item() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(loss_ssim(img, img).item() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("ssim is symmetric") {
  Rng rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    Tensor a = random_tensor({9, 9}, rng);
    Tensor b = random_tensor({9, 9}, rng);
    CHECK(std::abs(ssim(a, b).item() - ssim(b, a).item()) < 1e-12);
  }
}

TEST_CASE("constant images follow the closed form") {
  Tensor a = Tensor::full({8, 8}, 0.3);
  Tensor b = Tensor::full({8, 8}, 0.7);
  SsimOptions opt;
  const double c1 = opt.c1;
  const double want = (2.0 * 0.3 * 0.7 + c1) / (0.3 * 0.3 + 0.7 * 0.7 + c1);
  CHECK(std::abs(ssim(a, b, opt).item() - want) < 1e-9);
}

TEST_CASE("ssim rejects oversized windows") {
  Tensor a = Tensor::zeros({5, 5});
  SsimOptions opt;
  opt.window = 7;
  CHECK_THROWS_AS(ssim(a, a, opt), ConfigError);
}

TEST_CASE("ssim gradient matches finite differences") {
  Rng rng(13);
  Tensor a0 = random_tensor({8, 8}, rng);
  Tensor b = random_tensor({8, 8}, rng);

  Tape tape;
  Tensor a = tape.watch(a0);
  Tensor loss = loss_ssim(a, b);
  tape.backward(loss);
  Tensor analytic = tape.grad(a);

  auto eval = [&](std::span<const double> flat) {
    Tensor cand({8, 8}, std::vector<double>(flat.begin(), flat.end()));
    return loss_ssim(cand, b).item();
  };
  std::vector<double> base(a0.values().begin(), a0.values().end());
  const auto fd = oracles::finite_diff(base, eval);
  for (std::size_t i = 0; i < fd.size(); ++i) {
    CHECK(oracles::rel_err(analytic[static_cast<std::int64_t>(i)], fd[i]) < 1e-4);
  }
}

TEST_CASE("gaussian window keeps the self-similarity contract") {
  Rng rng(17);
  Tensor img = random_tensor({9, 9}, rng);
  SsimOptions opt;
  opt.gaussian_window = true;
  CHECK(ssim(img, img, opt).item() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pair rescaling lands in the unit interval") {
  Rng rng(19);
  Tensor a = mul(random_tensor({6, 6}, rng), 3.0);
  Tensor b = add(mul(random_tensor({6, 6}, rng), 2.0), 1.0);
  auto [ua, ub] = rescale_pair_unit(a, b);
  double lo = 1e9, hi = -1e9;
  for (double v : ua.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : ub.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo >= 0.0);
  CHECK(hi <= 1.0);
  CHECK(hi == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lo == doctest::Approx(0.0).epsilon(1e-12));
}

}  // TEST_SUITE
