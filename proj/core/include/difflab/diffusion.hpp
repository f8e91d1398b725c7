#pragma once

#include <functional>
#include <string>
#include <vector>

#include "difflab/rng.hpp"
#include "difflab/schedule.hpp"
#include "difflab/tensor.hpp"

namespace difflab {

struct DenoiserModel;

// What the denoising network's output means. Fixed per trained model and
// recorded in checkpoints.
enum class Parameterization { EpsilonPrediction, DataPrediction };

std::string to_string(Parameterization p);
Parameterization parameterization_from_string(const std::string& s);

// Gaussian q(x_{t-1} | x_t, x_0): mean tensor plus scalar variance.
// Variance is exactly 0 at t = 1 because sigma_0 = 0.
struct PosteriorParams {
  Tensor mean;
  double variance = 0.0;
};

// Closed form of the diffusion process: alpha_t * x0 + sigma_t * eps.
Tensor forward_diffuse(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& s);

// Step-by-step Markov chain q(x_i | x_{i-1}) for i = 1..t. Distributionally
// equal to forward_diffuse with fresh noise; kept as the slow reference path.
Tensor iterate_chain(const Tensor& x0, int t, const NoiseSchedule& s, Rng& rng);

// Bayes posterior of the forward chain given endpoints, 1 <= t <= T.
PosteriorParams posterior(const Tensor& x_t, const Tensor& x0, int t, const NoiseSchedule& s);

// Deterministic DDIM update from step t to t_next < t given an x0 estimate.
Tensor ddim_step(const Tensor& x_t, const Tensor& x0_pred, int t, int t_next,
                 const NoiseSchedule& s);

// epsilon / x0 / score conversions; require t >= 1 (sigma_t > 0).
Tensor eps_to_x0(const Tensor& x_t, const Tensor& eps_pred, int t, const NoiseSchedule& s);
Tensor x0_to_eps(const Tensor& x_t, const Tensor& x0_pred, int t, const NoiseSchedule& s);
Tensor score_from_eps(const Tensor& eps_pred, int t, const NoiseSchedule& s);

// Optional per-step capture of a sampling run, for CSV dumps and
// per-iteration quality curves. Works for single samples and batches.
struct SampleTrace {
  struct Step {
    int t;          // step the chain has arrived at
    Tensor x;       // state after the transition into `t`
    Tensor x0_pred; // denoiser's clean-data estimate used for that transition
  };
  std::vector<Step> steps;
};

using DenoiseFn = std::function<Tensor(const Tensor& x, int t)>;

// Ancestral sampling: draw x_T ~ N(0, I), then for t = T..1 estimate x0 and
// resample from the posterior. The t = 1 step is deterministic (variance 0).
Tensor ancestral_sample(const DenoiseFn& denoise, Parameterization param, const NoiseSchedule& s,
                        const std::vector<int>& shape, Rng& rng, SampleTrace* trace = nullptr);

// Same, bound to a trained model (the model handles its own time indexing).
Tensor ancestral_sample(const DenoiserModel& model, const Tensor& condition, const NoiseSchedule& s,
                        Rng& rng, SampleTrace* trace = nullptr);

// n samples as rows of an [n, d] tensor. Each row uses its own keyed
// substream of `rng`, so sample i does not depend on n. `conditions` is
// either undefined (unconditional) or an [n, condition_dim] matrix.
Tensor ancestral_sample_batch(const DenoiserModel& model, const Tensor& conditions, int n,
                              const NoiseSchedule& s, Rng& rng, SampleTrace* trace = nullptr);

// Langevin dynamics: x <- x + (eta/2) * score(x) + sqrt(eta) * z.
// Aborts when any coordinate exceeds `max_abs` in magnitude.
Tensor langevin_sample(const std::function<Tensor(const Tensor&)>& score_fn, const Tensor& x_init,
                       double eta, int n_steps, Rng& rng, double max_abs = 1e6);

}  // namespace difflab
