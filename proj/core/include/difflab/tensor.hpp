#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "difflab/errors.hpp"
#include "difflab/rng.hpp"

namespace difflab {

class Tape;

// Dense row-major array of 64-bit floats. Buffers are immutable once built,
// so copies are cheap handle copies. A tensor optionally carries a node id
// on the tape that recorded it; detach() drops that link.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double value);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t size() const;
  bool defined() const { return data_ != nullptr; }

  std::span<const double> values() const;
  const std::shared_ptr<const std::vector<double>>& buffer() const { return data_; }

  // Scalar extraction; requires size() == 1.
  double item() const;
  double operator[](std::int64_t i) const { return (*data_)[static_cast<std::size_t>(i)]; }
  // Rank-2 access.
  double at(int r, int c) const;
  int rows() const;
  int cols() const;

  bool tracked_on(const Tape* tape) const;
  int node() const { return node_; }
  Tensor detach() const;

 private:
  friend class Tape;
  std::vector<int> shape_;
  std::shared_ptr<const std::vector<double>> data_;
  int node_ = -1;
  std::uint64_t tape_id_ = 0;
};

// Ordered record of primitive operations with the saved inputs each backward
// step needs. Installing a Tape makes it the active recorder for the current
// thread; destruction restores the previous one. A tape never crosses
// threads.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();

  // Registers a leaf (parameter) on this tape; returns the tracked handle.
  Tensor watch(const Tensor& t);
  std::vector<Tensor> watch_all(std::span<const Tensor> ts);

  // Seeds dLoss/dLoss = 1 and replays the record in reverse order, once.
  // `loss` must be scalar; a loss not recorded on this tape (a constant)
  // yields all-zero gradients.
  void backward(const Tensor& loss);

  // Gradient from the last backward() w.r.t. a tensor tracked on this tape.
  Tensor grad(const Tensor& t) const;

  // --- recording interface used by the op implementations ---
  int record(std::int64_t out_size, std::function<void(Tape&)> backprop);
  void set_backprop(int node, std::function<void(Tape&)> fn);
  void bind(Tensor& t, int node);
  std::vector<double>& grad_buf(int node, std::int64_t size);
  const std::vector<double>* grad_if_any(int node) const;
  std::uint64_t id() const { return id_; }

 private:
  struct Node {
    std::int64_t out_size;
    std::function<void(Tape&)> backprop;
  };
  std::uint64_t id_;
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  bool backward_ran_ = false;
};

// Suspends recording on the current thread for its lifetime.
class NoGrad {
 public:
  NoGrad();
  ~NoGrad();
  NoGrad(const NoGrad&) = delete;
  NoGrad& operator=(const NoGrad&) = delete;
};

// ---- primitive operations (all record onto the active tape) ----

Tensor add(const Tensor& a, const Tensor& b);       // elementwise, same shape
Tensor add(const Tensor& a, double c);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor mul(const Tensor& a, const Tensor& b);       // elementwise
Tensor mul(const Tensor& a, double c);
Tensor div(const Tensor& a, const Tensor& b);       // elementwise
Tensor matmul(const Tensor& a, const Tensor& b);    // [m,k] x [k,n] -> [m,n]
Tensor add_rowwise(const Tensor& x, const Tensor& bias);  // [m,n] + [n]
Tensor scale_rows(const Tensor& x, std::span<const double> scales);  // row i * scales[i]
Tensor take_row(const Tensor& x, int row);          // [m,n] -> [n]
Tensor concat_cols(std::span<const Tensor> parts);  // [m,n_i] -> [m, sum n_i]
Tensor reshape(const Tensor& a, std::vector<int> shape);
Tensor sum(const Tensor& a);                        // -> scalar
Tensor mean(const Tensor& a);                       // -> scalar
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor swish(const Tensor& a);                      // x * sigmoid(x)

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator+(const Tensor& a, double c) { return add(a, c); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double c) { return mul(a, c); }
inline Tensor operator*(double c, const Tensor& a) { return mul(a, c); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }

Tensor randn(std::vector<int> shape, Rng& rng);

bool all_finite(const Tensor& t);

// ---- Adam ----

// Bias-corrected Adam. Defaults follow the training setup used throughout:
// beta1 = 0.9, beta2 = 0.98, epsilon = 1e-9.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
  double learning_rate = 2e-4;
  std::int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

// One update in place. Moment accumulators are allocated lazily on the first
// call; shapes are checked on every call. A non-finite gradient aborts with
// the parameter's name (or index when no names are given).
void adam_step(std::vector<Tensor>& params, std::span<const Tensor> grads,
               AdamState& state, std::span<const std::string> names = {});

}  // namespace difflab
