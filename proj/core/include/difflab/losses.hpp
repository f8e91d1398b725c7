#pragma once

#include <utility>

#include "difflab/schedule.hpp"
#include "difflab/tensor.hpp"

namespace difflab {

struct LossWeights {
  double recon = 1.0;
  double ssim = 1.0;
};

// Mean squared error in noise space. Scalar, differentiable.
Tensor loss_eps(const Tensor& eps_pred, const Tensor& eps_true);

// Mean squared error in data space; also the distillation loss when `target`
// is a (detached) teacher output.
Tensor loss_x0(const Tensor& x0_pred, const Tensor& target);

// Denoising score-matching objective: mean || score_pred + eps_true/sigma_t ||^2.
// Equals loss_eps / sigma_t^2 under score = -eps/sigma_t.
Tensor loss_score_matching(const Tensor& score_pred, const Tensor& eps_true, int t,
                           const NoiseSchedule& s);

struct SsimOptions {
  int window = 7;
  double c1 = 1e-4;   // (0.01 * L)^2 with L = 1
  double c2 = 9e-4;   // (0.03 * L)^2
  bool gaussian_window = false;  // sigma = 1.5 when enabled
};

// Structural similarity over sliding windows of two same-shape 2-D images,
// both expected in [0, 1]. Returns a scalar in [-1, 1]; differentiable.
Tensor ssim(const Tensor& a, const Tensor& b, const SsimOptions& opt = {});

// 1 - ssim(a, b).
Tensor loss_ssim(const Tensor& a, const Tensor& b, const SsimOptions& opt = {});

// Joint min-max rescale of a pair to [0, 1], for comparing images of
// arbitrary range at evaluation time. The bounds are data-dependent, so this
// is not a smooth function of its inputs; training paths map model space to
// the unit interval with a fixed affine instead.
std::pair<Tensor, Tensor> rescale_pair_unit(const Tensor& a, const Tensor& b);

}  // namespace difflab
