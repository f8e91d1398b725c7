#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "difflab/rng.hpp"
#include "difflab/tensor.hpp"
#include "oracles.hpp"

using namespace difflab;

namespace {

Tensor uniform_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  std::vector<double> data(static_cast<std::size_t>(n));
  for (auto& v : data) v = lo + (hi - lo) * rng.uniform();
  return Tensor(std::move(shape), std::move(data));
}

// Analytic gradient of sum(op(w) * r) vs central finite differences.
void check_unary_grad(const Tensor& w0, const std::function<Tensor(const Tensor&)>& op,
                      Rng& rng) {
  Tensor probe;
  {
    NoGrad off;
    probe = uniform_tensor(op(w0).shape(), rng);
  }
  Tape tape;
  Tensor w = tape.watch(w0);
  Tensor loss = sum(mul(op(w), probe));
  tape.backward(loss);
  Tensor analytic = tape.grad(w);

  auto eval = [&](std::span<const double> flat) {
    NoGrad off;
    Tensor cand(w0.shape(), std::vector<double>(flat.begin(), flat.end()));
    Tensor out = mul(op(cand), probe);
    double s = 0.0;
    for (double v : out.values()) s += v;
    return s;
  };
  std::vector<double> base(w0.values().begin(), w0.values().end());
  const auto fd = oracles::finite_diff(base, eval);
  for (std::size_t i = 0; i < fd.size(); ++i) {
    CHECK(oracles::rel_err(analytic[static_cast<std::int64_t>(i)], fd[i]) < 1e-4);
  }
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("matmul identity and projector") {
  Tensor eye({2, 2}, {1, 0, 0, 1});
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor prod = matmul(eye, a);
  for (int i = 0; i < 4; ++i) CHECK(prod[i] == a[i]);

  Tensor proj({2, 2}, {1, 0, 0, 0});
  Tensor v({2, 1}, {5, 7});
  Tensor out = matmul(proj, v);
  CHECK(out[0] == 5.0);
  CHECK(out[1] == 0.0);
}

TEST_CASE("matmul matches the triple-loop oracle") {
  Rng rng(7);
  Tensor a = uniform_tensor({3, 4}, rng);
  Tensor b = uniform_tensor({4, 2}, rng);
  Tensor c = matmul(a, b);
  const auto want = oracles::matmul_naive(a.values(), 3, 4, b.values(), 2);
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(std::abs(c[static_cast<std::int64_t>(i)] - want[i]) < 1e-12);
  }
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  Tensor a({2, 3});
  Tensor b({4, 2});
  CHECK_THROWS_AS(matmul(a, b), DimError);
}

TEST_CASE("matmul associativity on random conforming triples") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor a = uniform_tensor({3, 4}, rng);
    Tensor b = uniform_tensor({4, 5}, rng);
    Tensor c = uniform_tensor({5, 2}, rng);
    Tensor left = matmul(matmul(a, b), c);
    Tensor right = matmul(a, matmul(b, c));
    for (std::int64_t i = 0; i < left.size(); ++i) {
      CHECK(std::abs(left[i] - right[i]) < 1e-9);
    }
  }
}

TEST_CASE("backward on a quadratic") {
  Tape tape;
  Tensor w = tape.watch(Tensor({3}, {1, 2, 3}));
  Tensor loss = sum(mul(w, w));
  tape.backward(loss);
  Tensor g = tape.grad(w);
  CHECK(g[0] == 2.0);
  CHECK(g[1] == 4.0);
  CHECK(g[2] == 6.0);
}

TEST_CASE("backward through a matmul chain matches finite differences") {
  Rng rng(23);
  Tensor x = uniform_tensor({2, 3}, rng);
  Tensor w1_0 = uniform_tensor({3, 4}, rng);
  Tensor w2_0 = uniform_tensor({4, 2}, rng);
  Tensor probe = uniform_tensor({2, 2}, rng);

  Tape tape;
  Tensor w1 = tape.watch(w1_0);
  Tensor w2 = tape.watch(w2_0);
  Tensor loss = sum(mul(matmul(matmul(x, w1), w2), probe));
  tape.backward(loss);
  Tensor g1 = tape.grad(w1);
  Tensor g2 = tape.grad(w2);

  auto eval_w1 = [&](std::span<const double> flat) {
    Tensor cand({3, 4}, std::vector<double>(flat.begin(), flat.end()));
    Tensor out = mul(matmul(matmul(x, cand), w2_0), probe);
    double s = 0.0;
    for (double v : out.values()) s += v;
    return s;
  };
  auto eval_w2 = [&](std::span<const double> flat) {
    Tensor cand({4, 2}, std::vector<double>(flat.begin(), flat.end()));
    Tensor out = mul(matmul(matmul(x, w1_0), cand), probe);
    double s = 0.0;
    for (double v : out.values()) s += v;
    return s;
  };
  const auto fd1 = oracles::finite_diff({w1_0.values().begin(), w1_0.values().end()}, eval_w1);
  const auto fd2 = oracles::finite_diff({w2_0.values().begin(), w2_0.values().end()}, eval_w2);
  for (std::size_t i = 0; i < fd1.size(); ++i) {
    CHECK(oracles::rel_err(g1[static_cast<std::int64_t>(i)], fd1[i]) < 1e-4);
  }
  for (std::size_t i = 0; i < fd2.size(); ++i) {
    CHECK(oracles::rel_err(g2[static_cast<std::int64_t>(i)], fd2[i]) < 1e-4);
  }
}

TEST_CASE("constant loss yields all-zero gradients") {
  Tape tape;
  Tensor w = tape.watch(Tensor({2}, {1, 2}));
  Tensor loss = Tensor::scalar(3.0);
  tape.backward(loss);
  Tensor g = tape.grad(w);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 0.0);
}

TEST_CASE("backward rejects non-scalar losses") {
  Tape tape;
  Tensor w = tape.watch(Tensor({2}, {1, 2}));
  Tensor out = mul(w, 2.0);
  CHECK_THROWS_AS(tape.backward(out), DimError);
}

TEST_CASE("gradients of every primitive match finite differences") {
  Rng rng(31);
  for (int rep = 0; rep < 3; ++rep) {
    Tensor w = uniform_tensor({3, 4}, rng);
    Tensor other = uniform_tensor({3, 4}, rng);
    Tensor bias = uniform_tensor({4}, rng);
    // Denominators kept away from zero.
    Tensor denom_raw = uniform_tensor({3, 4}, rng, 0.5, 1.5);

    check_unary_grad(w, [&](const Tensor& t) { return add(t, other); }, rng);
    check_unary_grad(w, [&](const Tensor& t) { return add(t, 0.7); }, rng);
    check_unary_grad(w, [&](const Tensor& t) { return sub(other, t); }, rng);
    check_unary_grad(w, [&](const Tensor& t) { return mul(t, other); }, rng);
    check_unary_grad(w, [&](const Tensor& t) { return mul(t, -1.3); }, rng);
    check_unary_grad(w, [&](const Tensor& t) { return div(t, denom_raw); }, rng);
    check_unary_grad(denom_raw, [&](const Tensor& t) { return div(other, t); }, rng);
    Tensor right = uniform_tensor({4, 2}, rng);
    check_unary_grad(w, [&](const Tensor& t) { return matmul(t, right); }, rng);
    check_unary_grad(w, [&](const Tensor& t) { return add_rowwise(t, bias); }, rng);
    check_unary_grad(bias, [&](const Tensor& t) { return add_rowwise(other, t); }, rng);
    std::vector<double> scales{0.5, -1.5, 2.0};
    check_unary_grad(w, [&](const Tensor& t) { return scale_rows(t, scales); }, rng);
    check_unary_grad(w, [&](const Tensor& t) { return take_row(t, 1); }, rng);
    check_unary_grad(w,
                     [&](const Tensor& t) {
                       std::vector<Tensor> parts{t, other};
                       return concat_cols(parts);
                     },
                     rng);
    check_unary_grad(w, [&](const Tensor& t) { return reshape(t, {4, 3}); }, rng);
    check_unary_grad(w, [&](const Tensor& t) { return sigmoid(t); }, rng);
    check_unary_grad(w, [&](const Tensor& t) { return relu(t); }, rng);
    check_unary_grad(w, [&](const Tensor& t) { return swish(t); }, rng);
    check_unary_grad(w, [&](const Tensor& t) { return reshape(mean(t), {1}); }, rng);
    check_unary_grad(w, [&](const Tensor& t) { return reshape(sum(t), {1}); }, rng);
  }
}

TEST_CASE("detach blocks gradient flow") {
  Tape tape;
  Tensor w = tape.watch(Tensor({2}, {3, 4}));
  Tensor loss = sum(mul(w.detach(), w));
  tape.backward(loss);
  Tensor g = tape.grad(w);
  // Only the tracked factor contributes: d/dw (c * w) = c.
  CHECK(g[0] == 3.0);
  CHECK(g[1] == 4.0);
}

TEST_CASE("adam first step is approximately a signed step") {
  std::vector<Tensor> params{Tensor({2}, {1.0, -2.0})};
  std::vector<Tensor> grads{Tensor({2}, {0.25, -0.5})};
  AdamState st;
  st.learning_rate = 0.01;
  adam_step(params, grads, st);
  CHECK(params[0][0] == doctest::Approx(1.0 - 0.01).epsilon(1e-7));
  CHECK(params[0][1] == doctest::Approx(-2.0 + 0.01).epsilon(1e-7));
  CHECK(st.step == 1);
}

TEST_CASE("adam with zero gradients leaves parameters untouched") {
  for (double lr : {1e-4, 0.1}) {
    std::vector<Tensor> params{Tensor({2, 2}, {1, -2, 3, -4})};
    std::vector<Tensor> grads{Tensor::zeros({2, 2})};
    AdamState st;
    st.learning_rate = lr;
    for (int i = 0; i < 5; ++i) adam_step(params, grads, st);
    for (int i = 0; i < 4; ++i) CHECK(params[0][i] == Tensor({2, 2}, {1, -2, 3, -4})[i]);
  }
}

TEST_CASE("adam matches the hand-unrolled recurrence over 3 steps") {
  std::vector<Tensor> params{Tensor({1}, {0.8})};
  AdamState st;
  st.learning_rate = 0.05;
  oracles::AdamScalarOracle oracle{st.beta1, st.beta2, st.epsilon, st.learning_rate};
  double p = 0.8;
  const double gs[3] = {0.3, -0.1, 0.7};
  for (double g : gs) {
    std::vector<Tensor> grads{Tensor({1}, {g})};
    adam_step(params, grads, st);
    p = oracle.step(p, g);
    CHECK(std::abs(params[0][0] - p) < 1e-12);
  }
}

TEST_CASE("adam aborts on non-finite gradients naming the parameter") {
  std::vector<Tensor> params{Tensor({1}, {1.0}), Tensor({1}, {2.0})};
  std::vector<Tensor> grads{Tensor({1}, {0.1}),
                            Tensor({1}, {std::numeric_limits<double>::quiet_NaN()})};
  AdamState st;
  std::vector<std::string> names{"w0", "b0"};
  try {
    adam_step(params, grads, st, names);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("b0") != std::string::npos);
  }
}

TEST_CASE("tensor shape and data must agree") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), DimError);
}

}  // TEST_SUITE
