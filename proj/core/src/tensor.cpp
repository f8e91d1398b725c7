#include "difflab/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

namespace difflab {
namespace {

thread_local std::vector<Tape*> g_tape_stack;

std::int64_t numel(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << "]";
  return os.str();
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                   " vs " + shape_str(b.shape()));
  }
}

// Which tape, if any, should record an op over these inputs.
Tape* rec_tape(const Tensor& a) {
  Tape* tp = Tape::active();
  return (tp && a.tracked_on(tp)) ? tp : nullptr;
}
Tape* rec_tape(const Tensor& a, const Tensor& b) {
  Tape* tp = Tape::active();
  return (tp && (a.tracked_on(tp) || b.tracked_on(tp))) ? tp : nullptr;
}

void axpy(std::vector<double>& dst, std::span<const double> g) {
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor(std::vector<int> shape) : Tensor(std::move(shape), std::vector<double>()) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data) : shape_(std::move(shape)) {
  for (int d : shape_) {
    if (d < 0) throw DimError("tensor: negative dimension in " + shape_str(shape_));
  }
  const std::int64_t n = numel(shape_);
  if (data.empty() && n > 0) {
    data.resize(static_cast<std::size_t>(n), 0.0);
  }
  if (static_cast<std::int64_t>(data.size()) != n) {
    throw DimError("tensor: " + shape_str(shape_) + " needs " + std::to_string(n) +
                   " values, got " + std::to_string(data.size()));
  }
  data_ = std::make_shared<const std::vector<double>>(std::move(data));
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int> shape, double value) {
  const std::int64_t n = numel(shape);
  return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), value));
}

std::int64_t Tensor::size() const { return data_ ? static_cast<std::int64_t>(data_->size()) : 0; }

std::span<const double> Tensor::values() const {
  if (!data_) return {};
  return {data_->data(), data_->size()};
}

double Tensor::item() const {
  if (size() != 1) throw DimError("item: tensor has " + std::to_string(size()) + " entries");
  return (*data_)[0];
}

double Tensor::at(int r, int c) const {
  if (rank() != 2) throw DimError("at: tensor is not rank-2");
  return (*data_)[static_cast<std::size_t>(r) * shape_[1] + c];
}

int Tensor::rows() const {
  if (rank() != 2) throw DimError("rows: tensor is not rank-2");
  return shape_[0];
}

int Tensor::cols() const {
  if (rank() != 2) throw DimError("cols: tensor is not rank-2");
  return shape_[1];
}

bool Tensor::tracked_on(const Tape* tape) const {
  return node_ >= 0 && tape != nullptr && tape_id_ == tape->id();
}

Tensor Tensor::detach() const {
  Tensor out = *this;
  out.node_ = -1;
  out.tape_id_ = 0;
  return out;
}

// ---------------------------------------------------------------------------
// Tape

namespace {
std::atomic<std::uint64_t> g_tape_counter{1};
}

Tape::Tape() : id_(g_tape_counter.fetch_add(1)) { g_tape_stack.push_back(this); }

Tape::~Tape() { g_tape_stack.pop_back(); }

Tape* Tape::active() { return g_tape_stack.empty() ? nullptr : g_tape_stack.back(); }

Tensor Tape::watch(const Tensor& t) {
  Tensor out = t;
  out.node_ = record(t.size(), nullptr);
  out.tape_id_ = id_;
  return out;
}

std::vector<Tensor> Tape::watch_all(std::span<const Tensor> ts) {
  std::vector<Tensor> out;
  out.reserve(ts.size());
  for (const Tensor& t : ts) out.push_back(watch(t));
  return out;
}

int Tape::record(std::int64_t out_size, std::function<void(Tape&)> backprop) {
  nodes_.push_back({out_size, std::move(backprop)});
  return static_cast<int>(nodes_.size()) - 1;
}

std::vector<double>& Tape::grad_buf(int node, std::int64_t size) {
  if (static_cast<std::size_t>(node) >= grads_.size()) grads_.resize(nodes_.size());
  auto& buf = grads_[static_cast<std::size_t>(node)];
  if (buf.empty() && size > 0) buf.assign(static_cast<std::size_t>(size), 0.0);
  return buf;
}

const std::vector<double>* Tape::grad_if_any(int node) const {
  if (node < 0 || static_cast<std::size_t>(node) >= grads_.size()) return nullptr;
  const auto& buf = grads_[static_cast<std::size_t>(node)];
  return buf.empty() ? nullptr : &buf;
}

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw DimError("backward: loss must be a scalar, got " + shape_str(loss.shape()));
  }
  grads_.assign(nodes_.size(), {});
  backward_ran_ = true;
  if (!loss.tracked_on(this)) {
    // Constant loss: every gradient is zero.
    return;
  }
  grad_buf(loss.node_, 1)[0] = 1.0;
  for (int i = loss.node_; i >= 0; --i) {
    if (grads_[static_cast<std::size_t>(i)].empty()) continue;
    if (nodes_[static_cast<std::size_t>(i)].backprop) {
      nodes_[static_cast<std::size_t>(i)].backprop(*this);
    }
  }
}

Tensor Tape::grad(const Tensor& t) const {
  if (!t.tracked_on(this)) throw DimError("grad: tensor is not tracked on this tape");
  if (!backward_ran_) throw std::logic_error("grad: backward() has not run on this tape");
  const std::vector<double>* g = grad_if_any(t.node_);
  if (!g) return Tensor::zeros(t.shape());
  return Tensor(t.shape(), *g);
}

NoGrad::NoGrad() { g_tape_stack.push_back(nullptr); }
NoGrad::~NoGrad() { g_tape_stack.pop_back(); }

// ---------------------------------------------------------------------------
// Primitive ops

void Tape::bind(Tensor& t, int node) {
  t.node_ = node;
  t.tape_id_ = id_;
}

void Tape::set_backprop(int node, std::function<void(Tape&)> fn) {
  nodes_[static_cast<std::size_t>(node)].backprop = std::move(fn);
}

namespace {

// Shared recording boilerplate: the node id is created first so the closure
// returned by `make_backprop(self)` can find its own output gradient.
template <class Fn>
Tensor make_result(std::vector<int> shape, std::vector<double> data, Tape* tp, Fn&& make_backprop) {
  Tensor out(std::move(shape), std::move(data));
  if (tp) {
    const int self = tp->record(out.size(), nullptr);
    tp->bind(out, self);
    tp->set_backprop(self, make_backprop(self));
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  Tape* tp = rec_tape(a, b);
  const int an = (tp && a.tracked_on(tp)) ? a.node() : -1;
  const int bn = (tp && b.tracked_on(tp)) ? b.node() : -1;
  const std::int64_t n = static_cast<std::int64_t>(av.size());
  return make_result(a.shape(), std::move(out), tp, [an, bn, n](int self) {
    return [an, bn, n, self](Tape& t) {
      const auto& g = *t.grad_if_any(self);
      if (an >= 0) axpy(t.grad_buf(an, n), g);
      if (bn >= 0) axpy(t.grad_buf(bn, n), g);
    };
  });
}

Tensor add(const Tensor& a, double c) {
  auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + c;
  Tape* tp = rec_tape(a);
  const int an = tp ? a.node() : -1;
  const std::int64_t n = static_cast<std::int64_t>(av.size());
  return make_result(a.shape(), std::move(out), tp, [an, n](int self) {
    return [an, n, self](Tape& t) {
      const auto& g = *t.grad_if_any(self);
      axpy(t.grad_buf(an, n), g);
    };
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
  Tape* tp = rec_tape(a, b);
  const int an = (tp && a.tracked_on(tp)) ? a.node() : -1;
  const int bn = (tp && b.tracked_on(tp)) ? b.node() : -1;
  const std::int64_t n = static_cast<std::int64_t>(av.size());
  return make_result(a.shape(), std::move(out), tp, [an, bn, n](int self) {
    return [an, bn, n, self](Tape& t) {
      const auto& g = *t.grad_if_any(self);
      if (an >= 0) axpy(t.grad_buf(an, n), g);
      if (bn >= 0) {
        auto& gb = t.grad_buf(bn, n);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    };
  });
}

Tensor neg(const Tensor& a) { return mul(a, -1.0); }

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  Tape* tp = rec_tape(a, b);
  const int an = (tp && a.tracked_on(tp)) ? a.node() : -1;
  const int bn = (tp && b.tracked_on(tp)) ? b.node() : -1;
  const std::int64_t n = static_cast<std::int64_t>(av.size());
  auto pa = a.buffer();
  auto pb = b.buffer();
  return make_result(a.shape(), std::move(out), tp, [an, bn, n, pa, pb](int self) {
    return [an, bn, n, pa, pb, self](Tape& t) {
      const auto& g = *t.grad_if_any(self);
      if (an >= 0) {
        auto& ga = t.grad_buf(an, n);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (*pb)[i];
      }
      if (bn >= 0) {
        auto& gb = t.grad_buf(bn, n);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * (*pa)[i];
      }
    };
  });
}

Tensor mul(const Tensor& a, double c) {
  auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * c;
  Tape* tp = rec_tape(a);
  const int an = tp ? a.node() : -1;
  const std::int64_t n = static_cast<std::int64_t>(av.size());
  return make_result(a.shape(), std::move(out), tp, [an, n, c](int self) {
    return [an, n, c, self](Tape& t) {
      const auto& g = *t.grad_if_any(self);
      auto& ga = t.grad_buf(an, n);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
    };
  });
}

Tensor div(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "div");
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] / bv[i];
  Tape* tp = rec_tape(a, b);
  const int an = (tp && a.tracked_on(tp)) ? a.node() : -1;
  const int bn = (tp && b.tracked_on(tp)) ? b.node() : -1;
  const std::int64_t n = static_cast<std::int64_t>(av.size());
  auto pa = a.buffer();
  auto pb = b.buffer();
  return make_result(a.shape(), std::move(out), tp, [an, bn, n, pa, pb](int self) {
    return [an, bn, n, pa, pb, self](Tape& t) {
      const auto& g = *t.grad_if_any(self);
      if (an >= 0) {
        auto& ga = t.grad_buf(an, n);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / (*pb)[i];
      }
      if (bn >= 0) {
        auto& gb = t.grad_buf(bn, n);
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double d = (*pb)[i];
          gb[i] -= g[i] * (*pa)[i] / (d * d);
        }
      }
    };
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw DimError("matmul: expected rank-2 tensors, got " + shape_str(a.shape()) + " and " +
                   shape_str(b.shape()));
  }
  const int m = a.shape()[0], k = a.shape()[1];
  const int k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2) {
    throw DimError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " x " +
                   shape_str(b.shape()));
  }
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int l = 0; l < k; ++l) {
      const double av_il = av[static_cast<std::size_t>(i) * k + l];
      if (av_il == 0.0) continue;
      const double* brow = &bv[static_cast<std::size_t>(l) * n];
      double* crow = &out[static_cast<std::size_t>(i) * n];
      for (int j = 0; j < n; ++j) crow[j] += av_il * brow[j];
    }
  }
  Tape* tp = rec_tape(a, b);
  const int an = (tp && a.tracked_on(tp)) ? a.node() : -1;
  const int bn = (tp && b.tracked_on(tp)) ? b.node() : -1;
  auto pa = a.buffer();
  auto pb = b.buffer();
  return make_result({m, n}, std::move(out), tp, [=](int self) {
    return [=](Tape& t) {
      const auto& g = *t.grad_if_any(self);
      if (an >= 0) {
        // dA = G * B^T
        auto& ga = t.grad_buf(an, static_cast<std::int64_t>(m) * k);
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < k; ++j) {
            const double* grow = &g[static_cast<std::size_t>(i) * n];
            const double* brow = &(*pb)[static_cast<std::size_t>(j) * n];
            double acc = 0.0;
            for (int l = 0; l < n; ++l) acc += grow[l] * brow[l];
            ga[static_cast<std::size_t>(i) * k + j] += acc;
          }
        }
      }
      if (bn >= 0) {
        // dB = A^T * G
        auto& gb = t.grad_buf(bn, static_cast<std::int64_t>(k) * n);
        for (int i = 0; i < m; ++i) {
          const double* grow = &g[static_cast<std::size_t>(i) * n];
          for (int j = 0; j < k; ++j) {
            const double a_ij = (*pa)[static_cast<std::size_t>(i) * k + j];
            if (a_ij == 0.0) continue;
            double* gbrow = &gb[static_cast<std::size_t>(j) * n];
            for (int l = 0; l < n; ++l) gbrow[l] += a_ij * grow[l];
          }
        }
      }
    };
  });
}

Tensor add_rowwise(const Tensor& x, const Tensor& bias) {
  if (x.rank() != 2 || bias.rank() != 1 || x.shape()[1] != bias.shape()[0]) {
    throw DimError("add_rowwise: incompatible shapes " + shape_str(x.shape()) + " + " +
                   shape_str(bias.shape()));
  }
  const int m = x.shape()[0], n = x.shape()[1];
  auto xv = x.values();
  auto bv = bias.values();
  std::vector<double> out(xv.size());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      out[static_cast<std::size_t>(i) * n + j] = xv[static_cast<std::size_t>(i) * n + j] + bv[j];
    }
  }
  Tape* tp = rec_tape(x, bias);
  const int xn = (tp && x.tracked_on(tp)) ? x.node() : -1;
  const int bn = (tp && bias.tracked_on(tp)) ? bias.node() : -1;
  return make_result(x.shape(), std::move(out), tp, [=](int self) {
    return [=](Tape& t) {
      const auto& g = *t.grad_if_any(self);
      if (xn >= 0) axpy(t.grad_buf(xn, static_cast<std::int64_t>(m) * n), g);
      if (bn >= 0) {
        auto& gb = t.grad_buf(bn, n);
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < n; ++j) gb[j] += g[static_cast<std::size_t>(i) * n + j];
        }
      }
    };
  });
}

Tensor scale_rows(const Tensor& x, std::span<const double> scales) {
  if (x.rank() != 2 || static_cast<std::size_t>(x.shape()[0]) != scales.size()) {
    throw DimError("scale_rows: need one scale per row of " + shape_str(x.shape()));
  }
  const int m = x.shape()[0], n = x.shape()[1];
  auto xv = x.values();
  std::vector<double> out(xv.size());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      out[static_cast<std::size_t>(i) * n + j] = xv[static_cast<std::size_t>(i) * n + j] * scales[i];
    }
  }
  Tape* tp = rec_tape(x);
  const int xn = tp ? x.node() : -1;
  std::vector<double> sc(scales.begin(), scales.end());
  return make_result(x.shape(), std::move(out), tp, [=, sc = std::move(sc)](int self) {
    return [=, sc = std::move(sc)](Tape& t) {
      const auto& g = *t.grad_if_any(self);
      auto& gx = t.grad_buf(xn, static_cast<std::int64_t>(m) * n);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
          gx[static_cast<std::size_t>(i) * n + j] += g[static_cast<std::size_t>(i) * n + j] * sc[i];
        }
      }
    };
  });
}

Tensor take_row(const Tensor& x, int row) {
  if (x.rank() != 2) throw DimError("take_row: tensor is not rank-2");
  const int m = x.shape()[0], n = x.shape()[1];
  if (row < 0 || row >= m) throw std::out_of_range("take_row: row " + std::to_string(row));
  auto xv = x.values();
  std::vector<double> out(xv.begin() + static_cast<std::int64_t>(row) * n,
                          xv.begin() + static_cast<std::int64_t>(row + 1) * n);
  Tape* tp = rec_tape(x);
  const int xn = tp ? x.node() : -1;
  return make_result({n}, std::move(out), tp, [=](int self) {
    return [=](Tape& t) {
      const auto& g = *t.grad_if_any(self);
      auto& gx = t.grad_buf(xn, static_cast<std::int64_t>(m) * n);
      for (int j = 0; j < n; ++j) gx[static_cast<std::size_t>(row) * n + j] += g[j];
    };
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimError("concat_cols: no inputs");
  const int m = parts[0].shape().empty() ? 0 : parts[0].shape()[0];
  int total = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != 2 || p.shape()[0] != m) {
      throw DimError("concat_cols: every part must be rank-2 with " + std::to_string(m) + " rows");
    }
    total += p.shape()[1];
  }
  std::vector<double> out(static_cast<std::size_t>(m) * total);
  int off = 0;
  for (const Tensor& p : parts) {
    const int n = p.shape()[1];
    auto pv = p.values();
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        out[static_cast<std::size_t>(i) * total + off + j] = pv[static_cast<std::size_t>(i) * n + j];
      }
    }
    off += n;
  }
  Tape* tp = Tape::active();
  bool any_tracked = false;
  if (tp) {
    for (const Tensor& p : parts) any_tracked = any_tracked || p.tracked_on(tp);
  }
  if (!any_tracked) tp = nullptr;
  struct PartRef {
    int node;
    int cols;
  };
  std::vector<PartRef> refs;
  refs.reserve(parts.size());
  for (const Tensor& p : parts) {
    refs.push_back({(tp && p.tracked_on(tp)) ? p.node() : -1, p.shape()[1]});
  }
  return make_result({m, total}, std::move(out), tp, [=, refs = std::move(refs)](int self) {
    return [=, refs = std::move(refs)](Tape& t) {
      const auto& g = *t.grad_if_any(self);
      int o = 0;
      for (const PartRef& r : refs) {
        if (r.node >= 0) {
          auto& gp = t.grad_buf(r.node, static_cast<std::int64_t>(m) * r.cols);
          for (int i = 0; i < m; ++i) {
            for (int j = 0; j < r.cols; ++j) {
              gp[static_cast<std::size_t>(i) * r.cols + j] +=
                  g[static_cast<std::size_t>(i) * total + o + j];
            }
          }
        }
        o += r.cols;
      }
    };
  });
}

Tensor reshape(const Tensor& a, std::vector<int> shape) {
  if (numel(shape) != a.size()) {
    throw DimError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape) +
                   " changes element count");
  }
  auto av = a.values();
  std::vector<double> out(av.begin(), av.end());
  Tape* tp = rec_tape(a);
  const int an = tp ? a.node() : -1;
  const std::int64_t n = a.size();
  return make_result(std::move(shape), std::move(out), tp, [an, n](int self) {
    return [an, n, self](Tape& t) {
      const auto& g = *t.grad_if_any(self);
      axpy(t.grad_buf(an, n), g);
    };
  });
}

Tensor sum(const Tensor& a) {
  auto av = a.values();
  double s = 0.0;
  for (double v : av) s += v;
  Tape* tp = rec_tape(a);
  const int an = tp ? a.node() : -1;
  const std::int64_t n = a.size();
  return make_result({}, {s}, tp, [an, n](int self) {
    return [an, n, self](Tape& t) {
      const double g = (*t.grad_if_any(self))[0];
      auto& ga = t.grad_buf(an, n);
      for (auto& v : ga) v += g;
    };
  });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw DimError("mean: empty tensor");
  auto av = a.values();
  double s = 0.0;
  for (double v : av) s += v;
  const double inv = 1.0 / static_cast<double>(av.size());
  Tape* tp = rec_tape(a);
  const int an = tp ? a.node() : -1;
  const std::int64_t n = a.size();
  return make_result({}, {s * inv}, tp, [an, n, inv](int self) {
    return [an, n, inv, self](Tape& t) {
      const double g = (*t.grad_if_any(self))[0] * inv;
      auto& ga = t.grad_buf(an, n);
      for (auto& v : ga) v += g;
    };
  });
}

Tensor sigmoid(const Tensor& a) {
  auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-av[i]));
  Tape* tp = rec_tape(a);
  const int an = tp ? a.node() : -1;
  const std::int64_t n = a.size();
  // The backward pass reads the output buffer, which only exists once the
  // tensor is built, so this op records by hand instead of via make_result.
  Tensor res(a.shape(), std::move(out));
  if (tp) {
    const int self = tp->record(n, nullptr);
    tp->bind(res, self);
    auto ps = res.buffer();
    tp->set_backprop(self, [an, n, ps, self](Tape& t) {
      const auto& g = *t.grad_if_any(self);
      auto& ga = t.grad_buf(an, n);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = (*ps)[i];
        ga[i] += g[i] * s * (1.0 - s);
      }
    });
  }
  return res;
}

Tensor relu(const Tensor& a) {
  auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
  Tape* tp = rec_tape(a);
  const int an = tp ? a.node() : -1;
  const std::int64_t n = a.size();
  auto pa = a.buffer();
  return make_result(a.shape(), std::move(out), tp, [an, n, pa](int self) {
    return [an, n, pa, self](Tape& t) {
      const auto& g = *t.grad_if_any(self);
      auto& ga = t.grad_buf(an, n);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if ((*pa)[i] > 0.0) ga[i] += g[i];
      }
    };
  });
}

Tensor swish(const Tensor& a) { return mul(a, sigmoid(a)); }

Tensor randn(std::vector<int> shape, Rng& rng) {
  const std::int64_t n = numel(shape);
  return Tensor(std::move(shape), rng.normal_vec(static_cast<std::size_t>(n)));
}

bool all_finite(const Tensor& t) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Adam

void adam_step(std::vector<Tensor>& params, std::span<const Tensor> grads, AdamState& state,
               std::span<const std::string> names) {
  if (params.size() != grads.size()) {
    throw DimError("adam_step: " + std::to_string(params.size()) + " params vs " +
                   std::to_string(grads.size()) + " grads");
  }
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(static_cast<std::size_t>(params[i].size()), 0.0);
      state.v[i].assign(static_cast<std::size_t>(params[i].size()), 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    throw DimError("adam_step: state tracks " + std::to_string(state.m.size()) +
                   " params, got " + std::to_string(params.size()));
  }
  auto param_name = [&](std::size_t i) {
    return i < names.size() ? names[i] : ("#" + std::to_string(i));
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != grads[i].shape()) {
      throw DimError("adam_step: shape mismatch for parameter " + param_name(i));
    }
    if (state.m[i].size() != static_cast<std::size_t>(params[i].size())) {
      throw DimError("adam_step: accumulator shape drifted for parameter " + param_name(i));
    }
    if (!all_finite(grads[i])) {
      throw NumericError("adam_step: non-finite gradient in parameter " + param_name(i),
                         state.step + 1);
    }
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto pv = params[i].values();
    auto gv = grads[i].values();
    auto& m = state.m[i];
    auto& v = state.v[i];
    std::vector<double> next(pv.size());
    for (std::size_t j = 0; j < pv.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * gv[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * gv[j] * gv[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      next[j] = pv[j] - state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
    params[i] = Tensor(params[i].shape(), std::move(next));
  }
}

}  // namespace difflab
