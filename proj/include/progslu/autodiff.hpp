#pragma once

// Reverse-mode autodiff on a flat tape: dense fp64 tensors, the handful of
// ops a recurrent tagger needs, and a finite-difference gradient checker.

#include <cmath>
#include <cstddef>
#include <cstring>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "progslu/errors.hpp"
#include "progslu/rng.hpp"

namespace progslu::ad {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << 'x';
    os << s[i];
  }
  os << ']';
  return os.str();
}

struct TensorData {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // always allocated, same length as value
  bool requires_grad = false;
};

// Shared handle to a dense array plus its gradient buffer. Values are
// written once by the op that creates the tensor; afterwards only the
// gradient buffer mutates (during backward).
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    auto d = std::make_shared<TensorData>();
    std::size_t n = shape_numel(shape);
    d->shape = std::move(shape);
    d->value.assign(n, 0.0);
    d->grad.assign(n, 0.0);
    d->requires_grad = requires_grad;
    return Tensor(std::move(d));
  }

  static Tensor full(Shape shape, double v, bool requires_grad = false) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (auto& x : t.value()) x = v;
    return t;
  }

  static Tensor from_values(Shape shape, std::vector<double> values,
                            bool requires_grad = false) {
    if (shape_numel(shape) != values.size())
      throw DimensionError("Tensor: " + shape_str(shape) + " cannot hold " +
                           std::to_string(values.size()) + " values");
    Tensor t = zeros(std::move(shape), requires_grad);
    t.data_->value = std::move(values);
    return t;
  }

  static Tensor scalar(double v) { return from_values({1}, {v}); }

  bool defined() const { return static_cast<bool>(data_); }
  const Shape& shape() const { return data_->shape; }
  std::size_t rank() const { return data_->shape.size(); }
  std::size_t dim(std::size_t i) const { return data_->shape[i]; }
  std::size_t size() const { return data_->value.size(); }
  bool requires_grad() const { return data_->requires_grad; }

  // Handle semantics: a const Tensor still exposes mutable buffers, the way
  // a const shared_ptr exposes a mutable pointee. Backward closures capture
  // handles by value and accumulate through them.
  std::vector<double>& value() const { return data_->value; }
  std::vector<double>& grad() const { return data_->grad; }

  double item() const {
    if (size() != 1)
      throw DimensionError("item: tensor has shape " + shape_str(shape()));
    return data_->value[0];
  }
  double at(std::size_t i) const { return data_->value[i]; }
  double at(std::size_t r, std::size_t c) const {
    return data_->value[r * dim(1) + c];
  }

  void zero_grad() const {
    std::fill(data_->grad.begin(), data_->grad.end(), 0.0);
  }

  bool same_storage(const Tensor& o) const { return data_ == o.data_; }

 private:
  explicit Tensor(std::shared_ptr<TensorData> d) : data_(std::move(d)) {}
  std::shared_ptr<TensorData> data_;
};

// Records ops in execution order; backward() replays the recorded closures
// in exact reverse order. A tape and its tensors belong to one thread.
class Tape {
 public:
  void record(std::vector<Tensor> inputs, Tensor output,
              std::function<void()> backward) {
    nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(backward)});
  }

  std::size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and accumulates into every input gradient.
  // Does not zero anything; call zero_all_grads() first when replaying.
  void backward(const Tensor& loss) {
    if (loss.size() != 1)
      throw DimensionError("backward: loss must be scalar, got " +
                           shape_str(loss.shape()));
    loss.grad()[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
  }

  // Zeroes the gradient of every tensor this tape has seen (inputs and
  // outputs), so a second backward() reproduces the first bitwise.
  void zero_all_grads() {
    for (auto& n : nodes_) {
      for (auto& t : n.inputs) t.zero_grad();
      n.output.zero_grad();
    }
  }

 private:
  struct Node {
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;
  };
  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// ops

// 2-d x 2-d -> 2-d, or 2-d x 1-d -> 1-d (matrix-vector).
inline Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  const bool vec = b.rank() == 1;
  if (a.rank() != 2 || (b.rank() != 2 && !vec))
    throw DimensionError("matmul: unsupported shapes " + shape_str(a.shape()) +
                         " x " + shape_str(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1);
  const std::size_t kb = b.dim(0);
  const std::size_t n = vec ? 1 : b.dim(1);
  if (k != kb)
    throw DimensionError("matmul: inner dimensions disagree, " +
                         shape_str(a.shape()) + " x " + shape_str(b.shape()));
  Tensor out = Tensor::zeros(vec ? Shape{m} : Shape{m, n});
  {
    const auto& av = a.value();
    const auto& bv = b.value();
    auto& ov = out.value();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = av[i * k + p];
        if (aip == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) ov[i * n + j] += aip * bv[p * n + j];
      }
  }
  tape.record({a, b}, out, [a, b, out, m, k, n]() {
    const auto& av = a.value();
    const auto& bv = b.value();
    const auto& go = out.grad();
    auto& ga = a.grad();
    auto& gb = b.grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += go[i * n + j] * bv[p * n + j];
        ga[i * k + p] += acc;
      }
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t i = 0; i < m; ++i) {
        const double aip = av[i * k + p];
        if (aip == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * go[i * n + j];
      }
  });
  return out;
}

inline Tensor concat(Tape& tape, const std::vector<Tensor>& xs,
                     std::size_t axis = 0) {
  if (xs.empty()) throw DimensionError("concat: no inputs");
  const std::size_t rank = xs[0].rank();
  if (axis >= rank)
    throw DimensionError("concat: axis " + std::to_string(axis) +
                         " out of range for rank " + std::to_string(rank));
  Shape out_shape = xs[0].shape();
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (xs[i].rank() != rank)
      throw DimensionError("concat: rank mismatch " + shape_str(xs[i].shape()) +
                           " vs " + shape_str(xs[0].shape()));
    for (std::size_t d = 0; d < rank; ++d) {
      if (d == axis) continue;
      if (xs[i].dim(d) != xs[0].dim(d))
        throw DimensionError("concat: non-concat dimension mismatch " +
                             shape_str(xs[i].shape()) + " vs " +
                             shape_str(xs[0].shape()));
    }
    out_shape[axis] += xs[i].dim(axis);
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= out_shape[d];
  for (std::size_t d = axis + 1; d < rank; ++d) inner *= out_shape[d];
  const std::size_t out_axis = out_shape[axis];

  Tensor out = Tensor::zeros(out_shape);
  {
    auto& ov = out.value();
    std::size_t offset = 0;
    for (const auto& x : xs) {
      const std::size_t ax = x.dim(axis);
      const auto& xv = x.value();
      for (std::size_t o = 0; o < outer; ++o)
        std::memcpy(&ov[(o * out_axis + offset) * inner], &xv[o * ax * inner],
                    ax * inner * sizeof(double));
      offset += ax;
    }
  }
  tape.record(xs, out, [xs, out, outer, inner, out_axis, axis]() {
    const auto& go = out.grad();
    std::size_t offset = 0;
    for (const auto& x : xs) {
      const std::size_t ax = x.dim(axis);
      auto& gx = x.grad();
      for (std::size_t o = 0; o < outer; ++o) {
        const double* src = &go[(o * out_axis + offset) * inner];
        double* dst = &gx[o * ax * inner];
        for (std::size_t i = 0; i < ax * inner; ++i) dst[i] += src[i];
      }
      offset += ax;
    }
  });
  return out;
}

// Numerically stable softmax over a 1-d tensor. Outputs are strictly
// positive and sum to 1.
inline Tensor softmax(Tape& tape, const Tensor& x) {
  if (x.rank() != 1 || x.size() == 0)
    throw DimensionError("softmax: need non-empty 1-d input, got " +
                         shape_str(x.shape()));
  const std::size_t n = x.size();
  Tensor out = Tensor::zeros({n});
  {
    const auto& xv = x.value();
    auto& ov = out.value();
    double m = xv[0];
    for (double v : xv) m = std::max(m, v);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ov[i] = std::max(std::exp(xv[i] - m), 1e-300);  // keep strictly positive
      sum += ov[i];
    }
    for (auto& v : ov) v /= sum;
  }
  tape.record({x}, out, [x, out, n]() {
    const auto& y = out.value();
    const auto& go = out.grad();
    auto& gx = x.grad();
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += go[i] * y[i];
    for (std::size_t i = 0; i < n; ++i) gx[i] += y[i] * (go[i] - dot);
  });
  return out;
}

inline Tensor sigmoid(Tape& tape, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  {
    const auto& xv = x.value();
    auto& ov = out.value();
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const double v = xv[i];
      if (v >= 0.0) {
        ov[i] = 1.0 / (1.0 + std::exp(-v));
      } else {
        const double e = std::exp(v);  // no overflow for v < 0
        ov[i] = e / (1.0 + e);
      }
    }
  }
  tape.record({x}, out, [x, out]() {
    const auto& y = out.value();
    const auto& go = out.grad();
    auto& gx = x.grad();
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] += y[i] * (1.0 - y[i]) * go[i];
  });
  return out;
}

inline Tensor tanh(Tape& tape, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  {
    const auto& xv = x.value();
    auto& ov = out.value();
    for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = std::tanh(xv[i]);
  }
  tape.record({x}, out, [x, out]() {
    const auto& y = out.value();
    const auto& go = out.grad();
    auto& gx = x.grad();
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] += (1.0 - y[i] * y[i]) * go[i];
  });
  return out;
}

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

inline Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out = Tensor::zeros(a.shape());
  {
    const auto& av = a.value();
    const auto& bv = b.value();
    auto& ov = out.value();
    for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] + bv[i];
  }
  tape.record({a, b}, out, [a, b, out]() {
    const auto& go = out.grad();
    auto& ga = a.grad();
    auto& gb = b.grad();
    for (std::size_t i = 0; i < go.size(); ++i) {
      ga[i] += go[i];
      gb[i] += go[i];
    }
  });
  return out;
}

inline Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Tensor out = Tensor::zeros(a.shape());
  {
    const auto& av = a.value();
    const auto& bv = b.value();
    auto& ov = out.value();
    for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] * bv[i];
  }
  tape.record({a, b}, out, [a, b, out]() {
    const auto& av = a.value();
    const auto& bv = b.value();
    const auto& go = out.grad();
    auto& ga = a.grad();
    auto& gb = b.grad();
    for (std::size_t i = 0; i < go.size(); ++i) {
      ga[i] += bv[i] * go[i];
      gb[i] += av[i] * go[i];
    }
  });
  return out;
}

inline Tensor scalar_mul(Tape& tape, double c, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  {
    const auto& xv = x.value();
    auto& ov = out.value();
    for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = c * xv[i];
  }
  tape.record({x}, out, [x, out, c]() {
    const auto& go = out.grad();
    auto& gx = x.grad();
    for (std::size_t i = 0; i < go.size(); ++i) gx[i] += c * go[i];
  });
  return out;
}

// Single element by flat index, as a 1-element tensor.
inline Tensor gather(Tape& tape, const Tensor& x, std::size_t index) {
  if (index >= x.size())
    throw ArgumentError("gather: index " + std::to_string(index) +
                        " out of range for " + shape_str(x.shape()));
  Tensor out = Tensor::from_values({1}, {x.at(index)});
  tape.record({x}, out, [x, out, index]() { x.grad()[index] += out.grad()[0]; });
  return out;
}

// 1-d contiguous slice [start, start+len).
inline Tensor slice(Tape& tape, const Tensor& x, std::size_t start,
                    std::size_t len) {
  if (x.rank() != 1 || start + len > x.size())
    throw DimensionError("slice: [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") out of range for " +
                         shape_str(x.shape()));
  Tensor out = Tensor::zeros({len});
  {
    const auto& xv = x.value();
    auto& ov = out.value();
    for (std::size_t i = 0; i < len; ++i) ov[i] = xv[start + i];
  }
  tape.record({x}, out, [x, out, start, len]() {
    const auto& go = out.grad();
    auto& gx = x.grad();
    for (std::size_t i = 0; i < len; ++i) gx[start + i] += go[i];
  });
  return out;
}

// Row r of a 2-d tensor as a 1-d tensor. Also the embedding lookup.
inline Tensor row(Tape& tape, const Tensor& m, std::size_t r) {
  if (m.rank() != 2 || r >= m.dim(0))
    throw ArgumentError("row: index " + std::to_string(r) +
                        " out of range for " + shape_str(m.shape()));
  const std::size_t cols = m.dim(1);
  Tensor out = Tensor::zeros({cols});
  {
    const auto& mv = m.value();
    auto& ov = out.value();
    for (std::size_t j = 0; j < cols; ++j) ov[j] = mv[r * cols + j];
  }
  tape.record({m}, out, [m, out, r, cols]() {
    const auto& go = out.grad();
    auto& gm = m.grad();
    for (std::size_t j = 0; j < cols; ++j) gm[r * cols + j] += go[j];
  });
  return out;
}

// Broadcast multiply of a 1-element tensor against any tensor.
inline Tensor scale(Tape& tape, const Tensor& s, const Tensor& x) {
  if (s.size() != 1)
    throw DimensionError("scale: scaling factor must be 1-element, got " +
                         shape_str(s.shape()));
  const double sv = s.at(0);
  Tensor out = Tensor::zeros(x.shape());
  {
    const auto& xv = x.value();
    auto& ov = out.value();
    for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = sv * xv[i];
  }
  tape.record({s, x}, out, [s, x, out]() {
    const double svv = s.at(0);
    const auto& xv = x.value();
    const auto& go = out.grad();
    auto& gx = x.grad();
    double acc = 0.0;
    for (std::size_t i = 0; i < go.size(); ++i) {
      gx[i] += svv * go[i];
      acc += xv[i] * go[i];
    }
    s.grad()[0] += acc;
  });
  return out;
}

inline Tensor sum(Tape& tape, const Tensor& x) {
  Tensor out = Tensor::zeros({1});
  {
    double acc = 0.0;
    for (double v : x.value()) acc += v;
    out.value()[0] = acc;
  }
  tape.record({x}, out, [x, out]() {
    const double g = out.grad()[0];
    auto& gx = x.grad();
    for (auto& v : gx) v += g;
  });
  return out;
}

inline constexpr double kProbFloor = 1e-12;  // log(0) protection

// -sum(target * log(max(prob, floor))). Target is typically a constant
// one-hot vector; gradients are accumulated into both inputs regardless.
inline Tensor cross_entropy(Tape& tape, const Tensor& probs,
                            const Tensor& target) {
  check_same_shape(probs, target, "cross_entropy");
  Tensor out = Tensor::zeros({1});
  {
    const auto& pv = probs.value();
    const auto& tv = target.value();
    double acc = 0.0;
    for (std::size_t i = 0; i < pv.size(); ++i)
      acc -= tv[i] * std::log(std::max(pv[i], kProbFloor));
    out.value()[0] = acc;
  }
  tape.record({probs, target}, out, [probs, target, out]() {
    const double g = out.grad()[0];
    const auto& pv = probs.value();
    const auto& tv = target.value();
    auto& gp = probs.grad();
    auto& gt = target.grad();
    for (std::size_t i = 0; i < pv.size(); ++i) {
      if (pv[i] > kProbFloor) gp[i] += -tv[i] / pv[i] * g;
      gt[i] += -std::log(std::max(pv[i], kProbFloor)) * g;
    }
  });
  return out;
}

inline Tensor cross_entropy(Tape& tape, const Tensor& probs,
                            std::size_t target_class) {
  if (target_class >= probs.size())
    throw ArgumentError("cross_entropy: class " + std::to_string(target_class) +
                        " out of range for " + shape_str(probs.shape()));
  Tensor one_hot = Tensor::zeros(probs.shape());
  one_hot.value()[target_class] = 1.0;
  return cross_entropy(tape, probs, one_hot);
}

// ---------------------------------------------------------------------------
// LSTM cell

struct LstmParams {
  Tensor w_input;   // [4H x in]
  Tensor w_hidden;  // [4H x H]
  Tensor bias;      // [4H], gate order i, f, g, o

  std::size_t hidden() const { return w_hidden.dim(1); }
  std::size_t input() const { return w_input.dim(1); }
};

struct LstmState {
  Tensor h;
  Tensor c;
};

// Standard LSTM cell built from the primitives above, so its backward pass
// needs no dedicated rule. c = f*c_prev + i*g, h = o*tanh(c).
inline LstmState lstm_step(Tape& tape, const Tensor& x, const Tensor& h_prev,
                           const Tensor& c_prev, const LstmParams& p) {
  const std::size_t H = p.hidden();
  if (x.rank() != 1 || x.size() != p.input())
    throw DimensionError("lstm_step: input " + shape_str(x.shape()) +
                         " does not match weights " +
                         shape_str(p.w_input.shape()));
  if (h_prev.size() != H || c_prev.size() != H)
    throw DimensionError("lstm_step: state size mismatch, hidden=" +
                         std::to_string(H));
  Tensor pre = add(tape, add(tape, matmul(tape, p.w_input, x),
                             matmul(tape, p.w_hidden, h_prev)),
                   p.bias);
  Tensor gi = sigmoid(tape, slice(tape, pre, 0, H));
  Tensor gf = sigmoid(tape, slice(tape, pre, H, H));
  Tensor gg = tanh(tape, slice(tape, pre, 2 * H, H));
  Tensor go = sigmoid(tape, slice(tape, pre, 3 * H, H));
  Tensor c = add(tape, mul(tape, gf, c_prev), mul(tape, gi, gg));
  Tensor h = mul(tape, go, tanh(tape, c));
  return {h, c};
}

// ---------------------------------------------------------------------------
// initialization

inline Tensor glorot_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t = Tensor::zeros({rows, cols}, true);
  for (auto& v : t.value()) v = rng.uniform(-r, r);
  return t;
}

inline Tensor zero_vector(std::size_t n) { return Tensor::zeros({n}, true); }

inline LstmParams make_lstm(std::size_t input, std::size_t hidden, Rng& rng) {
  LstmParams p;
  p.w_input = glorot_matrix(4 * hidden, input, rng);
  p.w_hidden = glorot_matrix(4 * hidden, hidden, rng);
  p.bias = Tensor::zeros({4 * hidden}, true);
  // forget gate bias at 1 so early training does not wash out the cell state
  for (std::size_t i = hidden; i < 2 * hidden; ++i) p.bias.value()[i] = 1.0;
  return p;
}

// ---------------------------------------------------------------------------
// gradient checking

struct NamedParam {
  std::string name;
  Tensor tensor;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_coord = 0;
  std::vector<std::pair<std::string, double>> per_param;
};

// Central finite differences against the tape gradient. build_loss must be
// deterministic and must read parameter values fresh on every call.
inline GradCheckReport grad_check(
    const std::function<Tensor(Tape&)>& build_loss,
    const std::vector<NamedParam>& params, double epsilon = 1e-5) {
  if (epsilon <= 0.0) throw ArgumentError("grad_check: epsilon must be > 0");

  auto eval = [&]() {
    Tape tape;
    return build_loss(tape).item();
  };

  const double v1 = eval();
  const double v2 = eval();
  if (std::memcmp(&v1, &v2, sizeof(double)) != 0)
    throw DeterminismError("grad_check: loss function is not deterministic (" +
                           std::to_string(v1) + " vs " + std::to_string(v2) + ")");

  // analytic gradients
  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    Tensor loss = build_loss(tape);
    for (const auto& p : params) p.tensor.zero_grad();
    tape.backward(loss);
    for (const auto& p : params) analytic.push_back(p.tensor.grad());
  }

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& values = params[pi].tensor.value();
    double param_worst = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + epsilon;
      const double fp = eval();
      values[i] = saved - epsilon;
      const double fm = eval();
      values[i] = saved;
      const double numeric = (fp - fm) / (2.0 * epsilon);
      const double a = analytic[pi][i];
      const double rel = std::fabs(numeric - a) /
                         std::max({1.0, std::fabs(numeric), std::fabs(a)});
      if (rel > param_worst) param_worst = rel;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = params[pi].name;
        report.worst_coord = i;
      }
    }
    report.per_param.emplace_back(params[pi].name, param_worst);
  }
  return report;
}

}  // namespace progslu::ad
