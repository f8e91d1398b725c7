// `selftest` runs the library's mathematical invariants end to end and
// prints one line per check.
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>

#include "commands.hpp"
#include "difflab/diffusion.hpp"
#include "difflab/distill.hpp"
#include "difflab/losses.hpp"
#include "difflab/metrics.hpp"

namespace difflab::cli {

namespace {

struct Harness {
  int failures = 0;

  void run(const char* name, const std::function<bool()>& check) {
    bool ok = false;
    std::string detail;
    try {
      ok = check();
    } catch (const std::exception& e) {
      detail = e.what();
    }
    std::printf("[%s] %s%s%s\n", ok ? "ok" : "FAIL", name, detail.empty() ? "" : ": ",
                detail.c_str());
    if (!ok) ++failures;
  }
};

NoiseSchedule default_linear(int T) {
  ScheduleSpec s;
  s.steps = T;
  return NoiseSchedule::build(s);
}

DenoiserModel random_model(int T, std::uint64_t seed) {
  DenoiserConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_dims = {8, 8};
  cfg.time_embed_dim = 8;
  ScheduleSpec sched;
  sched.steps = T;
  DenoiserModel m = DenoiserModel::init(cfg, Parameterization::DataPrediction, sched, seed);
  Rng rng(seed * 31 + 7);
  for (auto& p : m.params) p = mul(randn(p.shape(), rng), 0.4);
  return m;
}

}  // namespace

int cmd_selftest() {
  Harness h;

  h.run("schedule identities (all kinds, T in {2,4,8,64})", [] {
    for (int T : {2, 4, 8, 64}) {
      for (ScheduleKind kind :
           {ScheduleKind::Linear, ScheduleKind::PaperCosine, ScheduleKind::AlphabarCosine}) {
        ScheduleSpec spec;
        spec.kind = kind;
        spec.steps = T;
        NoiseSchedule s = NoiseSchedule::build(spec);
        for (int t = 1; t <= T; ++t) {
          if (std::abs(s.alpha(t) * s.alpha(t) + s.sigma(t) * s.sigma(t) - 1.0) > 1e-12) {
            return false;
          }
          if (std::abs(s.alpha(t) - s.alpha(t - 1) * std::sqrt(1.0 - s.beta(t))) > 1e-12) {
            return false;
          }
        }
      }
    }
    return true;
  });

  h.run("forward chain moments match the closed form", [] {
    NoiseSchedule s = default_linear(3);
    Rng rng(12);
    const int n = 20000;
    Tensor x0({1}, {1.25});
    for (int t = 1; t <= 3; ++t) {
      double sum = 0.0, sum2 = 0.0;
      for (int i = 0; i < n; ++i) {
        const double v = iterate_chain(x0, t, s, rng)[0];
        sum += v;
        sum2 += v * v;
      }
      const double mean = sum / n;
      const double var = sum2 / n - mean * mean;
      const double want_mean = s.alpha(t) * 1.25;
      const double want_var = s.sigma(t) * s.sigma(t);
      if (std::abs(mean - want_mean) > 3.5 * s.sigma(t) / std::sqrt(1.0 * n)) return false;
      if (std::abs(var - want_var) / want_var > 0.06) return false;
    }
    return true;
  });

  h.run("posterior collapses to x0 at t = 1 and recovers alpha_{t-1}", [] {
    NoiseSchedule s = default_linear(4);
    Tensor x0({1}, {0.8});
    PosteriorParams p1 = posterior(Tensor({1}, {0.1}), x0, 1, s);
    if (std::abs(p1.mean[0] - 0.8) > 1e-12 || p1.variance > 1e-15) return false;
    for (int t = 1; t <= 4; ++t) {
      Tensor mean = posterior(Tensor({1}, {s.alpha(t) * 0.8}), x0, t, s).mean;
      if (std::abs(mean[0] - s.alpha(t - 1) * 0.8) > 1e-12) return false;
    }
    return true;
  });

  h.run("ddim steps compose (semigroup)", [] {
    NoiseSchedule s = default_linear(6);
    Rng rng(5);
    Tensor x = randn({3}, rng);
    Tensor guess = randn({3}, rng);
    Tensor two = ddim_step(ddim_step(x, guess, 6, 3, s), guess, 3, 1, s);
    Tensor one = ddim_step(x, guess, 6, 1, s);
    for (int i = 0; i < 3; ++i) {
      if (std::abs(two[i] - one[i]) > 1e-12) return false;
    }
    return true;
  });

  h.run("epsilon/x0/score conversions are mutually consistent", [] {
    NoiseSchedule s = default_linear(4);
    Rng rng(6);
    Tensor x0 = randn({4}, rng);
    Tensor eps = randn({4}, rng);
    for (int t = 1; t <= 4; ++t) {
      Tensor x_t = forward_diffuse(x0, t, eps, s);
      Tensor back = eps_to_x0(x_t, x0_to_eps(x_t, x0, t, s), t, s);
      for (int i = 0; i < 4; ++i) {
        if (std::abs(back[i] - x0[i]) > 1e-12) return false;
      }
      Tensor sc = score_from_eps(eps, t, s);
      for (int i = 0; i < 4; ++i) {
        if (std::abs(sc[i] + eps[i] / s.sigma(t)) > 1e-12) return false;
      }
    }
    return true;
  });

  h.run("distill target matches two teacher ddim steps", [] {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      DenoiserModel teacher = random_model(8, 100 + seed);
      NoiseSchedule s = NoiseSchedule::build(teacher.schedule);
      DistillPlan plan = DistillPlan::halving(8);
      Rng rng(200 + seed);
      for (int t : {2, 4, 6, 8}) {
        Tensor x_t = randn({2}, rng);
        Tensor x_mid = ddim_step(x_t, teacher.forward(x_t, t), t, t - 1, s);
        Tensor x_lo = ddim_step(x_mid, teacher.forward(x_mid, t - 1), t - 1, t - 2, s);
        Tensor target = distill_target(teacher, x_t, t, {}, s, plan);
        Tensor hop = ddim_step(x_t, target, t, t - 2, s);
        for (int i = 0; i < 2; ++i) {
          if (std::abs(hop[i] - x_lo[i]) > 1e-9) return false;
        }
      }
    }
    return true;
  });

  h.run("denoiser gradient matches finite differences", [] {
    DenoiserModel m = random_model(4, 17);
    Tensor x({1, 2}, {0.3, -0.6});
    std::vector<int> ts{2};
    Tape tape;
    std::vector<Tensor> tracked = tape.watch_all(m.params);
    Tensor loss = sum(mul(m.forward_batch_with(tracked, x, ts), 1.0));
    tape.backward(loss);
    const double h = 1e-5;
    for (std::size_t pi = 0; pi < m.params.size(); ++pi) {
      Tensor g = tape.grad(tracked[pi]);
      auto vals = m.params[pi].values();
      for (std::size_t j = 0; j < std::min<std::size_t>(vals.size(), 3); ++j) {
        auto eval = [&](double delta) {
          std::vector<Tensor> probe = m.params;
          std::vector<double> data(vals.begin(), vals.end());
          data[j] += delta;
          probe[pi] = Tensor(m.params[pi].shape(), std::move(data));
          Tensor o = m.forward_batch_with(probe, x, ts);
          double sum = 0.0;
          for (double v : o.values()) sum += v;
          return sum;
        };
        const double fd = (eval(h) - eval(-h)) / (2 * h);
        const double denom = std::max({std::abs(fd), std::abs(g[static_cast<std::int64_t>(j)]), 1e-8});
        if (std::abs(fd - g[static_cast<std::int64_t>(j)]) / denom > 1e-4) return false;
      }
    }
    return true;
  });

  h.run("ssim contract (self = 1, symmetric, closed form)", [] {
    Rng rng(9);
    Tensor a = add(mul(randn({8, 8}, rng), 0.2), 0.5);
    Tensor b = add(mul(randn({8, 8}, rng), 0.2), 0.5);
    if (std::abs(ssim(a, a).item() - 1.0) > 1e-12) return false;
    if (std::abs(ssim(a, b).item() - ssim(b, a).item()) > 1e-12) return false;
    Tensor ca = Tensor::full({8, 8}, 0.3);
    Tensor cb = Tensor::full({8, 8}, 0.7);
    const double want = (2 * 0.3 * 0.7 + 1e-4) / (0.09 + 0.49 + 1e-4);
    return std::abs(ssim(ca, cb).item() - want) < 1e-9;
  });

  h.run("score/eps loss equivalence", [] {
    NoiseSchedule s = default_linear(4);
    Rng rng(11);
    for (int t = 1; t <= 4; ++t) {
      Tensor eps = randn({6}, rng);
      Tensor score = randn({6}, rng);
      const double sig = s.sigma(t);
      const double lhs = loss_score_matching(score, eps, t, s).item();
      const double rhs = loss_eps(mul(neg(score), sig), eps).item() / (sig * sig);
      if (std::abs(lhs - rhs) > 1e-10) return false;
    }
    return true;
  });

  h.run("adam with zero gradients is the identity", [] {
    std::vector<Tensor> params{Tensor({3}, {1.0, -2.0, 0.5})};
    std::vector<Tensor> grads{Tensor::zeros({3})};
    AdamState st;
    for (int i = 0; i < 3; ++i) adam_step(params, grads, st);
    return params[0][0] == 1.0 && params[0][1] == -2.0 && params[0][2] == 0.5;
  });

  h.run("energy distance is zero on identical sets", [] {
    Rng rng(13);
    Tensor a = randn({50, 2}, rng);
    return energy_distance(a, a) == 0.0;
  });

  h.run("point-mass sampler reproduces the target exactly", [] {
    Tensor star({2}, {0.5, -1.5});
    DenoiseFn fn = [&](const Tensor&, int) { return star; };
    for (int T : {1, 2, 4}) {
      NoiseSchedule s = default_linear(T);
      Rng rng(21 + static_cast<std::uint64_t>(T));
      Tensor out = ancestral_sample(fn, Parameterization::DataPrediction, s, {2}, rng);
      if (std::abs(out[0] - 0.5) > 1e-12 || std::abs(out[1] + 1.5) > 1e-12) return false;
    }
    return true;
  });

  h.run("time embeddings are pairwise distinct (dim 8, T 64)", [] {
    for (int a = 0; a <= 64; ++a) {
      for (int b = a + 1; b <= 64; ++b) {
        Tensor ea = time_embedding(a, 8, 64);
        Tensor eb = time_embedding(b, 8, 64);
        double d2 = 0.0;
        for (int i = 0; i < 8; ++i) d2 += (ea[i] - eb[i]) * (ea[i] - eb[i]);
        if (std::sqrt(d2) <= 1e-6) return false;
      }
    }
    return true;
  });

  if (h.failures == 0) {
    std::printf("selftest: all checks passed\n");
    return 0;
  }
  std::printf("selftest: %d check(s) FAILED\n", h.failures);
  return 3;
}

}  // namespace difflab::cli
