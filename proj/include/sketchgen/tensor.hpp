#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "sketchgen/parallel.hpp"

namespace sketchgen {

using Shape = std::vector<int>;

inline long shape_numel(const Shape& s) {
  long n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Debug-mode NaN/Inf guard on every forward primitive.
inline bool& debug_checks() {
  static bool v = false;
  return v;
}

inline std::uint64_t next_tape_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

// Dense n-d array with an optional gradient, doubling as a node on the
// implicit reverse-mode tape. Values are immutable after the op that created
// them, except for parameter updates by the (single) optimizer owner.
template <typename T>
class Tensor {
 public:
  struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // allocated lazily, same length as value
    bool requires_grad = false;
    bool backward_done = false;
    std::uint64_t id = 0;
    std::vector<std::shared_ptr<Node>> parents;
    // Reads this node's grad and accumulates into parents' grads.
    std::function<void(Node&)> backprop;
  };

  Tensor() = default;

  explicit Tensor(Shape shape, bool requires_grad = false)
      : n_(std::make_shared<Node>()) {
    n_->shape = std::move(shape);
    n_->value.assign(shape_numel(n_->shape), T(0));
    n_->requires_grad = requires_grad;
    n_->id = next_tape_id();
  }

  static Tensor from(Shape shape, std::vector<T> data,
                     bool requires_grad = false) {
    if (long(data.size()) != shape_numel(shape))
      throw ShapeError("Tensor::from: data length " +
                       std::to_string(data.size()) + " does not match shape " +
                       shape_str(shape));
    Tensor t(std::move(shape), requires_grad);
    t.n_->value = std::move(data);
    return t;
  }

  static Tensor scalar(T v, bool requires_grad = false) {
    return from({1}, {v}, requires_grad);
  }

  static Tensor full(Shape shape, T v, bool requires_grad = false) {
    Tensor t(std::move(shape), requires_grad);
    std::fill(t.n_->value.begin(), t.n_->value.end(), v);
    return t;
  }

  bool defined() const { return bool(n_); }
  const Shape& shape() const { return n_->shape; }
  int dim(int i) const { return n_->shape[i]; }
  int ndim() const { return int(n_->shape.size()); }
  long size() const { return long(n_->value.size()); }

  T* data() { return n_->value.data(); }
  const T* data() const { return n_->value.data(); }
  std::vector<T>& values() { return n_->value; }
  const std::vector<T>& values() const { return n_->value; }

  T item() const {
    if (size() != 1)
      throw ShapeError("item() on non-scalar tensor " + shape_str(shape()));
    return n_->value[0];
  }

  bool requires_grad() const { return n_->requires_grad; }
  bool tracked() const { return n_ && (n_->requires_grad || n_->backprop); }

  bool has_grad() const { return !n_->grad.empty(); }
  std::vector<T>& grad() {
    if (n_->grad.empty()) n_->grad.assign(n_->value.size(), T(0));
    return n_->grad;
  }
  const std::vector<T>& grad() const {
    if (n_->grad.empty())
      throw TapeError("grad accessed before backward populated it");
    return n_->grad;
  }
  void zero_grad() {
    if (!n_->grad.empty()) std::fill(n_->grad.begin(), n_->grad.end(), T(0));
  }

  std::uint64_t tape_id() const { return n_->id; }
  std::shared_ptr<Node> node() const { return n_; }

  // Builds an op result. `track` decides whether the node joins the tape.
  static Tensor make_result(Shape shape, bool track,
                            std::vector<Tensor> parents,
                            std::function<void(Node&)> backprop) {
    Tensor out(std::move(shape), false);
    if (track) {
      out.n_->requires_grad = true;
      out.n_->parents.reserve(parents.size());
      for (auto& p : parents) out.n_->parents.push_back(p.n_);
      out.n_->backprop = std::move(backprop);
    }
    return out;
  }

  void check_finite(const char* op) const {
    if (!debug_checks()) return;
    for (T v : n_->value)
      if (!std::isfinite(double(v)))
        throw NumericError(std::string("non-finite value after op ") + op);
  }

  friend void backward_impl(Tensor loss) {
    if (!loss.defined() || loss.size() != 1)
      throw TapeError("backward requires a scalar loss");
    auto root = loss.n_;
    if (!root->backprop && !root->requires_grad)
      throw TapeError("backward on a tensor that is not on the tape");
    if (root->backward_done)
      throw TapeError("tape already consumed: backward called twice on loss");
    root->backward_done = true;

    // Collect reachable tape nodes; process in reverse recording order.
    std::vector<Node*> order;
    {
      std::vector<Node*> dfs{root.get()};
      std::unordered_set<Node*> visited;
      while (!dfs.empty()) {
        Node* n = dfs.back();
        dfs.pop_back();
        if (!visited.insert(n).second) continue;
        if (n->backprop) order.push_back(n);
        for (auto& p : n->parents)
          if (p->backprop) dfs.push_back(p.get());
      }
    }
    std::sort(order.begin(), order.end(),
              [](Node* a, Node* b) { return a->id > b->id; });

    if (root->grad.empty()) root->grad.assign(1, T(0));
    root->grad[0] += T(1);
    for (Node* n : order) {
      if (n->grad.empty()) n->grad.assign(n->value.size(), T(0));
      n->backprop(*n);
    }
  }

 private:
  std::shared_ptr<Node> n_;
};

template <typename T>
void backward(const Tensor<T>& loss) {
  backward_impl(loss);
}

namespace detail {

template <typename T>
void accum(typename Tensor<T>::Node& p, const std::vector<T>& g) {
  if (!p.requires_grad && !p.backprop) return;
  if (p.grad.empty()) p.grad.assign(p.value.size(), T(0));
  for (std::size_t i = 0; i < g.size(); ++i) p.grad[i] += g[i];
}

template <typename T>
std::vector<T>* grad_sink(typename Tensor<T>::Node& p) {
  if (!p.requires_grad && !p.backprop) return nullptr;
  if (p.grad.empty()) p.grad.assign(p.value.size(), T(0));
  return &p.grad;
}

inline void require_same_shape(const char* op, const Shape& a,
                               const Shape& b) {
  if (a != b)
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) +
                     " vs " + shape_str(b));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise primitives
// ---------------------------------------------------------------------------

template <typename T, typename FwdFn, typename BwdFn>
Tensor<T> elementwise_binary(const char* name, const Tensor<T>& a,
                             const Tensor<T>& b, FwdFn fwd, BwdFn bwd) {
  detail::require_same_shape(name, a.shape(), b.shape());
  const bool track = a.tracked() || b.tracked();
  Tensor<T> out = Tensor<T>::make_result(
      a.shape(), track, {a, b},
      [a, b, bwd](typename Tensor<T>::Node& n) {
        auto* ga = detail::grad_sink<T>(*n.parents[0]);
        auto* gb = detail::grad_sink<T>(*n.parents[1]);
        const T* av = a.data();
        const T* bv = b.data();
        for (long i = 0; i < long(n.grad.size()); ++i) {
          T da, db;
          bwd(av[i], bv[i], n.value[i], n.grad[i], da, db);
          if (ga) (*ga)[i] += da;
          if (gb) (*gb)[i] += db;
        }
      });
  const T* av = a.data();
  const T* bv = b.data();
  T* ov = out.data();
  for (long i = 0; i < out.size(); ++i) ov[i] = fwd(av[i], bv[i]);
  out.check_finite(name);
  return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return elementwise_binary<T>(
      "add", a, b, [](T x, T y) { return x + y; },
      [](T, T, T, T g, T& da, T& db) {
        da = g;
        db = g;
      });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return elementwise_binary<T>(
      "sub", a, b, [](T x, T y) { return x - y; },
      [](T, T, T, T g, T& da, T& db) {
        da = g;
        db = -g;
      });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return elementwise_binary<T>(
      "mul", a, b, [](T x, T y) { return x * y; },
      [](T x, T y, T, T g, T& da, T& db) {
        da = g * y;
        db = g * x;
      });
}

template <typename T, typename FwdFn, typename BwdFn>
Tensor<T> elementwise_unary(const char* name, const Tensor<T>& a, FwdFn fwd,
                            BwdFn bwd) {
  Tensor<T> out = Tensor<T>::make_result(
      a.shape(), a.tracked(), {a},
      [a, bwd](typename Tensor<T>::Node& n) {
        auto* ga = detail::grad_sink<T>(*n.parents[0]);
        if (!ga) return;
        const T* av = a.data();
        for (long i = 0; i < long(n.grad.size()); ++i)
          (*ga)[i] += bwd(av[i], n.value[i], n.grad[i]);
      });
  const T* av = a.data();
  T* ov = out.data();
  for (long i = 0; i < out.size(); ++i) ov[i] = fwd(av[i]);
  out.check_finite(name);
  return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  return elementwise_unary<T>(
      "relu", a, [](T x) { return x > T(0) ? x : T(0); },
      [](T x, T, T g) { return x > T(0) ? g : T(0); });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return elementwise_unary<T>(
      "sigmoid", a,
      [](T x) {
        return x >= T(0) ? T(1) / (T(1) + std::exp(-x))
                         : std::exp(x) / (T(1) + std::exp(x));
      },
      [](T, T y, T g) { return g * y * (T(1) - y); });
}

// elementwise x^p for a constant exponent
template <typename T>
Tensor<T> pow_scalar(const Tensor<T>& a, T p) {
  return elementwise_unary<T>(
      "pow", a, [p](T x) { return std::pow(x, p); },
      [p](T x, T, T g) {
        return x == T(0) && p < T(1) ? T(0) : g * p * std::pow(x, p - T(1));
      });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  return elementwise_unary<T>(
      "scale", a, [c](T x) { return c * x; },
      [c](T, T, T g) { return c * g; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T c) {
  return elementwise_unary<T>(
      "add_scalar", a, [c](T x) { return x + c; },
      [](T, T, T g) { return g; });
}

// ---------------------------------------------------------------------------
// Matrix multiply  A[m,k] * B[k,n] -> [m,n]
// ---------------------------------------------------------------------------

namespace detail {

// C += A * B, row-major, fixed k-ascending accumulation per output element.
template <typename T>
void gemm_acc(const T* A, const T* B, T* C, long m, long k, long n) {
  parallel_for(m, [&](long r0, long r1) {
    for (long i = r0; i < r1; ++i) {
      T* crow = C + i * n;
      const T* arow = A + i * k;
      for (long p = 0; p < k; ++p) {
        const T a = arow[p];
        if (a == T(0)) continue;
        const T* brow = B + p * n;
        for (long j = 0; j < n; ++j) crow[j] += a * brow[j];
      }
    }
  });
}

// C += A^T * B with A[k,m], B[k,n] -> C[m,n]
template <typename T>
void gemm_at_b(const T* A, const T* B, T* C, long k, long m, long n) {
  parallel_for(m, [&](long r0, long r1) {
    for (long p = 0; p < k; ++p) {
      const T* arow = A + p * m;
      const T* brow = B + p * n;
      for (long i = r0; i < r1; ++i) {
        const T a = arow[i];
        if (a == T(0)) continue;
        T* crow = C + i * n;
        for (long j = 0; j < n; ++j) crow[j] += a * brow[j];
      }
    }
  });
}

// C += A * B^T with A[m,k], B[n,k] -> C[m,n]
template <typename T>
void gemm_a_bt(const T* A, const T* B, T* C, long m, long k, long n) {
  parallel_for(m, [&](long r0, long r1) {
    for (long i = r0; i < r1; ++i) {
      const T* arow = A + i * k;
      T* crow = C + i * n;
      for (long j = 0; j < n; ++j) {
        const T* brow = B + j * k;
        T acc = T(0);
        for (long p = 0; p < k; ++p) acc += arow[p] * brow[p];
        crow[j] += acc;
      }
    }
  });
}

}  // namespace detail

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0))
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  const long m = a.dim(0), k = a.dim(1), n = b.dim(1);
  const bool track = a.tracked() || b.tracked();
  Tensor<T> out = Tensor<T>::make_result(
      {int(m), int(n)}, track, {a, b},
      [a, b, m, k, n](typename Tensor<T>::Node& nd) {
        auto* ga = detail::grad_sink<T>(*nd.parents[0]);
        auto* gb = detail::grad_sink<T>(*nd.parents[1]);
        if (ga) detail::gemm_a_bt(nd.grad.data(), b.data(), ga->data(), m, n, k);
        if (gb) detail::gemm_at_b(a.data(), nd.grad.data(), gb->data(), m, k, n);
      });
  detail::gemm_acc(a.data(), b.data(), out.data(), m, k, n);
  out.check_finite("matmul");
  return out;
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

// Mean over the axes listed in `axes` (result drops those axes; reducing all
// axes yields a scalar of shape [1]). Sequential row-major accumulation.
template <typename T>
Tensor<T> reduce_mean(const Tensor<T>& a, std::vector<int> axes) {
  const int nd = a.ndim();
  std::vector<char> red(nd, 0);
  for (int ax : axes) {
    if (ax < 0 || ax >= nd)
      throw ShapeError("reduce_mean: axis out of range for " +
                       shape_str(a.shape()));
    red[ax] = 1;
  }
  Shape out_shape;
  long count = 1;
  for (int i = 0; i < nd; ++i) {
    if (red[i])
      count *= a.dim(i);
    else
      out_shape.push_back(a.dim(i));
  }
  if (out_shape.empty()) out_shape = {1};

  // row-major strides of input and the input->output index map
  std::vector<long> in_stride(nd, 1), out_of_in(nd, 0);
  for (int i = nd - 2; i >= 0; --i)
    in_stride[i] = in_stride[i + 1] * a.dim(i + 1);
  {
    long os = 1;
    for (int i = nd - 1; i >= 0; --i) {
      if (!red[i]) {
        out_of_in[i] = os;
        os *= a.dim(i);
      }
    }
  }
  auto out_index = [in_stride, out_of_in, a, red, nd](long idx) {
    long o = 0;
    for (int i = 0; i < nd; ++i) {
      const long c = (idx / in_stride[i]) % a.dim(i);
      if (!red[i]) o += c * out_of_in[i];
    }
    return o;
  };

  Tensor<T> out = Tensor<T>::make_result(
      out_shape, a.tracked(), {a},
      [a, out_index, count](typename Tensor<T>::Node& n) {
        auto* ga = detail::grad_sink<T>(*n.parents[0]);
        if (!ga) return;
        const T inv = T(1) / T(count);
        for (long i = 0; i < long(ga->size()); ++i)
          (*ga)[i] += n.grad[out_index(i)] * inv;
      });
  const T* av = a.data();
  T* ov = out.data();
  const T inv = T(1) / T(count);
  for (long i = 0; i < a.size(); ++i) ov[out_index(i)] += av[i] * inv;
  out.check_finite("reduce_mean");
  return out;
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& a) {
  std::vector<int> axes(a.ndim());
  std::iota(axes.begin(), axes.end(), 0);
  return reduce_mean(a, axes);
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& a) {
  return scale(mean_all(a), T(a.size()));
}

// Population variance over `axes` (divisor = reduced element count).
template <typename T>
Tensor<T> reduce_variance(const Tensor<T>& a, std::vector<int> axes) {
  const int nd = a.ndim();
  std::vector<char> red(nd, 0);
  for (int ax : axes) red[ax] = 1;
  long count = 1;
  for (int i = 0; i < nd; ++i)
    if (red[i]) count *= a.dim(i);

  Tensor<T> m = reduce_mean(a, axes);
  // direct primitive: var_o = mean((x - m_o)^2); backward dvar/dx = 2(x-m)/N
  std::vector<long> in_stride(nd, 1), out_of_in(nd, 0);
  for (int i = nd - 2; i >= 0; --i)
    in_stride[i] = in_stride[i + 1] * a.dim(i + 1);
  {
    long os = 1;
    for (int i = nd - 1; i >= 0; --i)
      if (!red[i]) {
        out_of_in[i] = os;
        os *= a.dim(i);
      }
  }
  auto out_index = [in_stride, out_of_in, a, red](long idx) {
    long o = 0;
    for (int i = 0; i < int(in_stride.size()); ++i) {
      const long c = (idx / in_stride[i]) % a.dim(i);
      if (!red[i]) o += c * out_of_in[i];
    }
    return o;
  };

  Tensor<T> out = Tensor<T>::make_result(
      m.shape(), a.tracked(), {a},
      [a, m, out_index, count](typename Tensor<T>::Node& n) {
        auto* ga = detail::grad_sink<T>(*n.parents[0]);
        if (!ga) return;
        const T inv = T(2) / T(count);
        const T* av = a.data();
        const T* mv = m.data();
        for (long i = 0; i < long(ga->size()); ++i) {
          const long o = out_index(i);
          (*ga)[i] += n.grad[o] * inv * (av[i] - mv[o]);
        }
      });
  const T* av = a.data();
  const T* mv = m.data();
  T* ov = out.data();
  const T inv = T(1) / T(count);
  for (long i = 0; i < a.size(); ++i) {
    const long o = out_index(i);
    const T d = av[i] - mv[o];
    ov[o] += d * d * inv;
  }
  out.check_finite("reduce_variance");
  return out;
}

// ---------------------------------------------------------------------------
// Structural primitives
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape new_shape) {
  if (shape_numel(new_shape) != a.size())
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                     shape_str(new_shape));
  Tensor<T> out = Tensor<T>::make_result(
      std::move(new_shape), a.tracked(), {a},
      [](typename Tensor<T>::Node& n) {
        detail::accum<T>(*n.parents[0], n.grad);
      });
  std::copy(a.data(), a.data() + a.size(), out.data());
  return out;
}

// Concatenation along the channel axis (axis 1) of equally-batched tensors.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.ndim() != b.ndim() || a.ndim() < 2)
    throw ShapeError("concat_channels: rank mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  for (int i = 0; i < a.ndim(); ++i)
    if (i != 1 && a.dim(i) != b.dim(i))
      throw ShapeError("concat_channels: non-channel dims differ " +
                       shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Shape os = a.shape();
  os[1] = a.dim(1) + b.dim(1);
  long inner = 1;
  for (int i = 2; i < a.ndim(); ++i) inner *= a.dim(i);
  const long n_batch = a.dim(0);
  const long ca = a.dim(1) * inner, cb = b.dim(1) * inner;

  Tensor<T> out = Tensor<T>::make_result(
      os, a.tracked() || b.tracked(), {a, b},
      [n_batch, ca, cb](typename Tensor<T>::Node& n) {
        auto* ga = detail::grad_sink<T>(*n.parents[0]);
        auto* gb = detail::grad_sink<T>(*n.parents[1]);
        for (long i = 0; i < n_batch; ++i) {
          const T* g = n.grad.data() + i * (ca + cb);
          if (ga)
            for (long j = 0; j < ca; ++j) (*ga)[i * ca + j] += g[j];
          if (gb)
            for (long j = 0; j < cb; ++j) (*gb)[i * cb + j] += g[ca + j];
        }
      });
  for (long i = 0; i < n_batch; ++i) {
    T* o = out.data() + i * (ca + cb);
    std::copy(a.data() + i * ca, a.data() + (i + 1) * ca, o);
    std::copy(b.data() + i * cb, b.data() + (i + 1) * cb, o + ca);
  }
  return out;
}

// Channel slice [c0, c1) along axis 1.
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& a, int c0, int c1) {
  if (a.ndim() < 2 || c0 < 0 || c1 > a.dim(1) || c0 >= c1)
    throw ShapeError("slice_channels: bad range [" + std::to_string(c0) +
                     "," + std::to_string(c1) + ") for " +
                     shape_str(a.shape()));
  Shape os = a.shape();
  os[1] = c1 - c0;
  long inner = 1;
  for (int i = 2; i < a.ndim(); ++i) inner *= a.dim(i);
  const long n_batch = a.dim(0);
  const long cin = a.dim(1) * inner;
  const long cout = (c1 - c0) * inner;
  const long off = c0 * inner;

  Tensor<T> out = Tensor<T>::make_result(
      os, a.tracked(), {a},
      [n_batch, cin, cout, off](typename Tensor<T>::Node& n) {
        auto* ga = detail::grad_sink<T>(*n.parents[0]);
        if (!ga) return;
        for (long i = 0; i < n_batch; ++i)
          for (long j = 0; j < cout; ++j)
            (*ga)[i * cin + off + j] += n.grad[i * cout + j];
      });
  for (long i = 0; i < n_batch; ++i)
    std::copy(a.data() + i * cin + off, a.data() + i * cin + off + cout,
              out.data() + i * cout);
  return out;
}

// ---------------------------------------------------------------------------
// Classification loss: mean softmax cross entropy over the batch.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits,
                                const std::vector<int>& labels) {
  if (logits.ndim() != 2 || long(labels.size()) != logits.dim(0))
    throw ShapeError("softmax_cross_entropy: logits " +
                     shape_str(logits.shape()) + " vs " +
                     std::to_string(labels.size()) + " labels");
  const long n = logits.dim(0), k = logits.dim(1);
  std::vector<T> probs(n * k);
  T loss = T(0);
  for (long i = 0; i < n; ++i) {
    const T* row = logits.data() + i * k;
    T mx = row[0];
    for (long j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    T z = T(0);
    for (long j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    const T logz = std::log(z) + mx;
    for (long j = 0; j < k; ++j) probs[i * k + j] = std::exp(row[j] - logz);
    loss += logz - row[labels[i]];
  }
  loss /= T(n);

  Tensor<T> out = Tensor<T>::make_result(
      {1}, logits.tracked(), {logits},
      [probs = std::move(probs), labels, n, k](typename Tensor<T>::Node& nd) {
        auto* g = detail::grad_sink<T>(*nd.parents[0]);
        if (!g) return;
        const T go = nd.grad[0] / T(n);
        for (long i = 0; i < n; ++i)
          for (long j = 0; j < k; ++j)
            (*g)[i * k + j] +=
                go * (probs[i * k + j] - (j == labels[i] ? T(1) : T(0)));
      });
  out.data()[0] = loss;
  out.check_finite("softmax_cross_entropy");
  return out;
}

}  // namespace sketchgen
