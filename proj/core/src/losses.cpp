#include "difflab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace difflab {
namespace {

Tensor mse(const Tensor& a, const Tensor& b, const char* who) {
  if (a.shape() != b.shape()) {
    throw DimError(std::string(who) + ": shapes differ");
  }
  Tensor d = sub(a, b);
  return mean(mul(d, d));
}

// Banded sliding-window averaging matrix, rows = output positions.
Tensor window_matrix(int size, int window, const std::vector<double>& weights) {
  const int out = size - window + 1;
  std::vector<double> m(static_cast<std::size_t>(out) * size, 0.0);
  for (int i = 0; i < out; ++i) {
    for (int u = 0; u < window; ++u) {
      m[static_cast<std::size_t>(i) * size + i + u] = weights[static_cast<std::size_t>(u)];
    }
  }
  return Tensor({out, size}, std::move(m));
}

std::vector<double> window_weights(int window, bool gaussian) {
  std::vector<double> w(static_cast<std::size_t>(window));
  if (!gaussian) {
    std::fill(w.begin(), w.end(), 1.0 / window);
    return w;
  }
  const double sigma = 1.5;
  const double mid = (window - 1) / 2.0;
  double total = 0.0;
  for (int u = 0; u < window; ++u) {
    w[static_cast<std::size_t>(u)] = std::exp(-(u - mid) * (u - mid) / (2.0 * sigma * sigma));
    total += w[static_cast<std::size_t>(u)];
  }
  for (auto& v : w) v /= total;
  return w;
}

}  // namespace

Tensor loss_eps(const Tensor& eps_pred, const Tensor& eps_true) {
  return mse(eps_pred, eps_true, "loss_eps");
}

Tensor loss_x0(const Tensor& x0_pred, const Tensor& target) {
  return mse(x0_pred, target, "loss_x0");
}

Tensor loss_score_matching(const Tensor& score_pred, const Tensor& eps_true, int t,
                           const NoiseSchedule& s) {
  if (t < 1 || t > s.steps()) {
    throw std::invalid_argument("loss_score_matching: t = " + std::to_string(t) +
                                " must be in [1, T]");
  }
  Tensor target = mul(eps_true, -1.0 / s.sigma(t));
  return mse(score_pred, target, "loss_score_matching");
}

Tensor ssim(const Tensor& a, const Tensor& b, const SsimOptions& opt) {
  if (a.rank() != 2 || a.shape() != b.shape()) {
    throw DimError("ssim: expected two rank-2 tensors of the same shape");
  }
  const int h = a.shape()[0];
  const int w = a.shape()[1];
  if (opt.window < 1 || opt.window > std::min(h, w)) {
    throw ConfigError("ssim: window " + std::to_string(opt.window) + " larger than image " +
                      std::to_string(h) + "x" + std::to_string(w));
  }
  const auto weights = window_weights(opt.window, opt.gaussian_window);
  Tensor row_avg = window_matrix(h, opt.window, weights);  // [hout, h]
  // Column pass as a right-multiplication by the transposed averaging matrix.
  const int wout = w - opt.window + 1;
  std::vector<double> tr(static_cast<std::size_t>(w) * wout, 0.0);
  {
    Tensor col_avg = window_matrix(w, opt.window, weights);  // [wout, w]
    auto cv = col_avg.values();
    for (int i = 0; i < wout; ++i) {
      for (int j = 0; j < w; ++j) {
        tr[static_cast<std::size_t>(j) * wout + i] = cv[static_cast<std::size_t>(i) * w + j];
      }
    }
  }
  Tensor col_avg_t({w, wout}, std::move(tr));
  auto windowed = [&](const Tensor& x) { return matmul(matmul(row_avg, x), col_avg_t); };

  Tensor mu_a = windowed(a);
  Tensor mu_b = windowed(b);
  Tensor mu_aa = windowed(mul(a, a));
  Tensor mu_bb = windowed(mul(b, b));
  Tensor mu_ab = windowed(mul(a, b));
  Tensor var_a = sub(mu_aa, mul(mu_a, mu_a));
  Tensor var_b = sub(mu_bb, mul(mu_b, mu_b));
  Tensor cov = sub(mu_ab, mul(mu_a, mu_b));

  Tensor num = mul(add(mul(mul(mu_a, mu_b), 2.0), opt.c1), add(mul(cov, 2.0), opt.c2));
  Tensor den = mul(add(add(mul(mu_a, mu_a), mul(mu_b, mu_b)), opt.c1),
                   add(add(var_a, var_b), opt.c2));
  return mean(div(num, den));
}

Tensor loss_ssim(const Tensor& a, const Tensor& b, const SsimOptions& opt) {
  return sub(Tensor::scalar(1.0), ssim(a, b, opt));
}

std::pair<Tensor, Tensor> rescale_pair_unit(const Tensor& a, const Tensor& b) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : a.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : b.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = std::max(hi - lo, 1e-12);
  auto rescale = [&](const Tensor& t) { return mul(add(t, -lo), 1.0 / span); };
  return {rescale(a), rescale(b)};
}

}  // namespace difflab
