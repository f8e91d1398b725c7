#include "difflab/diffusion.hpp"

#include <cmath>

#include "difflab/denoiser.hpp"

namespace difflab {
namespace {

void check_step_range(int t, int lo, int hi, const char* who) {
  if (t < lo || t > hi) {
    throw std::invalid_argument(std::string(who) + ": step " + std::to_string(t) +
                                " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

}  // namespace

std::string to_string(Parameterization p) {
  return p == Parameterization::EpsilonPrediction ? "epsilon" : "data";
}

Parameterization parameterization_from_string(const std::string& s) {
  if (s == "epsilon") return Parameterization::EpsilonPrediction;
  if (s == "data") return Parameterization::DataPrediction;
  throw ConfigError("parameterization: unknown tag '" + s + "'");
}

Tensor forward_diffuse(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& s) {
  if (x0.shape() != eps.shape()) {
    throw DimError("forward_diffuse: x0 and eps shapes differ");
  }
  check_step_range(t, 0, s.steps(), "forward_diffuse");
  return add(mul(x0, s.alpha(t)), mul(eps, s.sigma(t)));
}

Tensor iterate_chain(const Tensor& x0, int t, const NoiseSchedule& s, Rng& rng) {
  check_step_range(t, 1, s.steps(), "iterate_chain");
  Tensor x = x0;
  for (int i = 1; i <= t; ++i) {
    const double b = s.beta(i);
    Tensor z = randn(x0.shape(), rng);
    x = add(mul(x, std::sqrt(1.0 - b)), mul(z, std::sqrt(b)));
  }
  return x;
}

PosteriorParams posterior(const Tensor& x_t, const Tensor& x0, int t, const NoiseSchedule& s) {
  if (x_t.shape() != x0.shape()) throw DimError("posterior: x_t and x0 shapes differ");
  check_step_range(t, 1, s.steps(), "posterior");
  if (t == 1) {
    // sigma_0 = 0 and sigma_1^2 = beta_1 collapse the posterior onto x0.
    return {x0, 0.0};
  }
  const double beta = s.beta(t);
  const double sig_t2 = s.sigma(t) * s.sigma(t);
  const double sig_p2 = s.sigma(t - 1) * s.sigma(t - 1);
  const double coef_x0 = s.alpha(t - 1) * beta / sig_t2;
  const double coef_xt = std::sqrt(1.0 - beta) * sig_p2 / sig_t2;
  PosteriorParams out;
  out.mean = add(mul(x0, coef_x0), mul(x_t, coef_xt));
  out.variance = sig_p2 / sig_t2 * beta;
  return out;
}

Tensor ddim_step(const Tensor& x_t, const Tensor& x0_pred, int t, int t_next,
                 const NoiseSchedule& s) {
  if (x_t.shape() != x0_pred.shape()) throw DimError("ddim_step: shapes differ");
  check_step_range(t, 1, s.steps(), "ddim_step");
  if (t_next < 0 || t_next >= t) {
    throw std::invalid_argument("ddim_step: t_next = " + std::to_string(t_next) +
                                " must satisfy 0 <= t_next < t = " + std::to_string(t));
  }
  const double ratio = s.sigma(t_next) / s.sigma(t);
  // alpha_next * x0 + (sigma_next / sigma_t) * (x_t - alpha_t * x0)
  return add(mul(x0_pred, s.alpha(t_next)), mul(sub(x_t, mul(x0_pred, s.alpha(t))), ratio));
}

Tensor eps_to_x0(const Tensor& x_t, const Tensor& eps_pred, int t, const NoiseSchedule& s) {
  if (x_t.shape() != eps_pred.shape()) throw DimError("eps_to_x0: shapes differ");
  check_step_range(t, 1, s.steps(), "eps_to_x0");
  return mul(sub(x_t, mul(eps_pred, s.sigma(t))), 1.0 / s.alpha(t));
}

Tensor x0_to_eps(const Tensor& x_t, const Tensor& x0_pred, int t, const NoiseSchedule& s) {
  if (x_t.shape() != x0_pred.shape()) throw DimError("x0_to_eps: shapes differ");
  check_step_range(t, 1, s.steps(), "x0_to_eps");
  return mul(sub(x_t, mul(x0_pred, s.alpha(t))), 1.0 / s.sigma(t));
}

Tensor score_from_eps(const Tensor& eps_pred, int t, const NoiseSchedule& s) {
  check_step_range(t, 1, s.steps(), "score_from_eps");
  return mul(eps_pred, -1.0 / s.sigma(t));
}

Tensor ancestral_sample(const DenoiseFn& denoise, Parameterization param, const NoiseSchedule& s,
                        const std::vector<int>& shape, Rng& rng, SampleTrace* trace) {
  Tensor x = randn(shape, rng);
  if (trace) trace->steps.push_back({s.steps(), x, Tensor()});
  for (int t = s.steps(); t >= 1; --t) {
    Tensor pred = denoise(x, t);
    if (!all_finite(pred)) {
      throw NumericError("ancestral_sample: non-finite denoiser output at t = " + std::to_string(t),
                         t);
    }
    Tensor x0_hat =
        param == Parameterization::DataPrediction ? pred : eps_to_x0(x, pred, t, s);
    PosteriorParams post = posterior(x, x0_hat, t, s);
    if (post.variance > 0.0) {
      Tensor z = randn(shape, rng);
      x = add(post.mean, mul(z, std::sqrt(post.variance)));
    } else {
      x = post.mean;
    }
    if (trace) trace->steps.push_back({t - 1, x, x0_hat});
  }
  return x;
}

Tensor ancestral_sample(const DenoiserModel& model, const Tensor& condition, const NoiseSchedule& s,
                        Rng& rng, SampleTrace* trace) {
  DenoiseFn fn = [&](const Tensor& x, int t) { return model.forward(x, t, condition); };
  return ancestral_sample(fn, model.parameterization, s, {model.config.input_dim}, rng, trace);
}

Tensor ancestral_sample_batch(const DenoiserModel& model, const Tensor& conditions, int n,
                              const NoiseSchedule& s, Rng& rng, SampleTrace* trace) {
  const int d = model.config.input_dim;
  if (conditions.defined() && (conditions.rank() != 2 || conditions.shape()[0] != n)) {
    throw DimError("ancestral_sample_batch: conditions must be [n, condition_dim]");
  }
  if (n < 0) throw std::invalid_argument("ancestral_sample_batch: n < 0");
  // Row i draws from its own keyed substream, so sample i is the same
  // whatever n is.
  std::vector<double> x0_data(static_cast<std::size_t>(n) * d);
  std::vector<Rng> streams;
  streams.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) streams.push_back(rng.stream(static_cast<std::uint64_t>(i)));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x0_data[static_cast<std::size_t>(i) * d + j] = streams[i].normal();
  }
  Tensor x({n, d}, std::move(x0_data));
  if (trace) trace->steps.push_back({s.steps(), x, Tensor()});
  std::vector<int> ts(static_cast<std::size_t>(n));
  for (int t = s.steps(); t >= 1; --t) {
    std::fill(ts.begin(), ts.end(), t);
    Tensor pred = model.forward_batch(x, ts, conditions);
    if (!all_finite(pred)) {
      throw NumericError("ancestral_sample_batch: non-finite denoiser output at t = " +
                             std::to_string(t),
                         t);
    }
    Tensor x0_hat = model.parameterization == Parameterization::DataPrediction
                        ? pred
                        : eps_to_x0(x, pred, t, s);
    PosteriorParams post = posterior(x, x0_hat, t, s);
    if (post.variance > 0.0) {
      std::vector<double> z(static_cast<std::size_t>(n) * d);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) z[static_cast<std::size_t>(i) * d + j] = streams[i].normal();
      }
      x = add(post.mean, mul(Tensor({n, d}, std::move(z)), std::sqrt(post.variance)));
    } else {
      x = post.mean;
    }
    if (trace) trace->steps.push_back({t - 1, x, x0_hat});
  }
  return x;
}

Tensor langevin_sample(const std::function<Tensor(const Tensor&)>& score_fn, const Tensor& x_init,
                       double eta, int n_steps, Rng& rng, double max_abs) {
  if (eta <= 0.0) throw std::invalid_argument("langevin_sample: eta must be > 0");
  if (n_steps < 0) throw std::invalid_argument("langevin_sample: n_steps < 0");
  Tensor x = x_init;
  const double sqrt_eta = std::sqrt(eta);
  for (int i = 0; i < n_steps; ++i) {
    Tensor z = randn(x.shape(), rng);
    x = add(add(x, mul(score_fn(x), eta / 2.0)), mul(z, sqrt_eta));
    for (double v : x.values()) {
      if (!(std::abs(v) <= max_abs)) {
        throw NumericError("langevin_sample: diverged at iteration " + std::to_string(i), i);
      }
    }
  }
  return x;
}

}  // namespace difflab
