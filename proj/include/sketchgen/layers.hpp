#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "sketchgen/rng.hpp"
#include "sketchgen/tensor.hpp"

namespace sketchgen {

template <typename T>
using ParamList = std::vector<std::pair<std::string, Tensor<T>>>;

// ---------------------------------------------------------------------------
// conv2d: cross-correlation, NCHW, weight [F, C, kh, kw], bias [F]
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void im2col(const T* im, int c, int h, int w, int kh, int kw, int stride,
            int pad, int oh, int ow, T* col) {
  // col shape: [c*kh*kw, oh*ow]
  for (int ch = 0; ch < c; ++ch)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        T* row = col + ((ch * kh + ky) * kw + kx) * (oh * ow);
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky - pad;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + kx - pad;
            row[oy * ow + ox] = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                                    ? im[(ch * h + iy) * w + ix]
                                    : T(0);
          }
        }
      }
}

template <typename T>
void col2im_acc(const T* col, int c, int h, int w, int kh, int kw, int stride,
                int pad, int oh, int ow, T* im) {
  for (int ch = 0; ch < c; ++ch)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        const T* row = col + ((ch * kh + ky) * kw + kx) * (oh * ow);
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix < 0 || ix >= w) continue;
            im[(ch * h + iy) * w + ix] += row[oy * ow + ox];
          }
        }
      }
}

}  // namespace detail

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, int stride = 1, int pad = 0) {
  if (input.ndim() != 4 || weight.ndim() != 4)
    throw ShapeError("conv2d: expected 4-d input/weight, got " +
                     shape_str(input.shape()) + " and " +
                     shape_str(weight.shape()));
  const int n = input.dim(0), c = input.dim(1), h = input.dim(2),
            w = input.dim(3);
  const int f = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  if (weight.dim(1) != c)
    throw ShapeError("conv2d: input channels " + std::to_string(c) +
                     " do not match weight " + shape_str(weight.shape()));
  if (bias.size() != f)
    throw ShapeError("conv2d: bias length " + std::to_string(bias.size()) +
                     " vs " + std::to_string(f) + " filters");
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (w + 2 * pad - kw) / stride + 1;
  if (oh <= 0 || ow <= 0)
    throw ShapeError("conv2d: non-positive output size for input " +
                     shape_str(input.shape()));

  const long k = long(c) * kh * kw;
  const long hw = long(oh) * ow;
  const bool track = input.tracked() || weight.tracked() || bias.tracked();

  Tensor<T> out = Tensor<T>::make_result(
      {n, f, oh, ow}, track, {input, weight, bias},
      [=](typename Tensor<T>::Node& nd) {
        auto* gx = detail::grad_sink<T>(*nd.parents[0]);
        auto* gw = detail::grad_sink<T>(*nd.parents[1]);
        auto* gb = detail::grad_sink<T>(*nd.parents[2]);
        std::vector<T> col(k * hw);
        std::vector<T> gcol(k * hw);
        for (int i = 0; i < n; ++i) {
          const T* g = nd.grad.data() + long(i) * f * hw;
          if (gb)
            for (int fi = 0; fi < f; ++fi)
              for (long j = 0; j < hw; ++j) (*gb)[fi] += g[fi * hw + j];
          if (gw || gx)
            detail::im2col(input.data() + long(i) * c * h * w, c, h, w, kh,
                           kw, stride, pad, oh, ow, col.data());
          if (gw)  // gw[f,k] += g[f,hw] * col[k,hw]^T
            detail::gemm_a_bt(g, col.data(), gw->data(), f, hw, k);
          if (gx) {  // gcol[k,hw] = W[f,k]^T * g[f,hw]
            std::fill(gcol.begin(), gcol.end(), T(0));
            detail::gemm_at_b(weight.data(), g, gcol.data(), f, k, hw);
            detail::col2im_acc(gcol.data(), c, h, w, kh, kw, stride, pad, oh,
                               ow, gx->data() + long(i) * c * h * w);
          }
        }
      });

  std::vector<T> col(k * hw);
  for (int i = 0; i < n; ++i) {
    detail::im2col(input.data() + long(i) * c * h * w, c, h, w, kh, kw,
                   stride, pad, oh, ow, col.data());
    T* o = out.data() + long(i) * f * hw;
    for (int fi = 0; fi < f; ++fi) {
      const T b = bias.data()[fi];
      for (long j = 0; j < hw; ++j) o[fi * hw + j] = b;
    }
    detail::gemm_acc(weight.data(), col.data(), o, f, k, hw);
  }
  out.check_finite("conv2d");
  return out;
}

// ---------------------------------------------------------------------------
// maxpool2: 2x2 window, stride 2; gradient to the first max in row-major order
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> maxpool2(const Tensor<T>& input) {
  if (input.ndim() != 4)
    throw ShapeError("maxpool2: expected 4-d input, got " +
                     shape_str(input.shape()));
  const int n = input.dim(0), c = input.dim(1), h = input.dim(2),
            w = input.dim(3);
  if (h % 2 || w % 2)
    throw ShapeError("maxpool2: odd spatial dims in " +
                     shape_str(input.shape()));
  const int oh = h / 2, ow = w / 2;
  const long planes = long(n) * c;

  auto am = std::make_shared<std::vector<int>>(planes * oh * ow);
  Tensor<T> out = Tensor<T>::make_result(
      {n, c, oh, ow}, input.tracked(), {input},
      [am](typename Tensor<T>::Node& nd) {
        auto* gx = detail::grad_sink<T>(*nd.parents[0]);
        if (!gx) return;
        for (long i = 0; i < long(am->size()); ++i)
          (*gx)[(*am)[i]] += nd.grad[i];
      });
  const T* x = input.data();
  T* o = out.data();
  for (long p = 0; p < planes; ++p) {
    const T* plane = x + p * h * w;
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        int best = (2 * oy) * w + 2 * ox;
        T bv = plane[best];
        const int cand[3] = {(2 * oy) * w + 2 * ox + 1,
                             (2 * oy + 1) * w + 2 * ox,
                             (2 * oy + 1) * w + 2 * ox + 1};
        for (int idx : cand)
          if (plane[idx] > bv) {
            bv = plane[idx];
            best = idx;
          }
        o[p * oh * ow + oy * ow + ox] = bv;
        (*am)[p * oh * ow + oy * ow + ox] = int(p * h * w + best);
      }
  }
  out.check_finite("maxpool2");
  return out;
}

// ---------------------------------------------------------------------------
// bilinear_upsample2: scale factor 2, half-pixel centers
// output coord o maps to input coord (o + 0.5)/2 - 0.5, clamped
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> bilinear_upsample2(const Tensor<T>& input) {
  if (input.ndim() != 4)
    throw ShapeError("bilinear_upsample2: expected 4-d input, got " +
                     shape_str(input.shape()));
  const int n = input.dim(0), c = input.dim(1), h = input.dim(2),
            w = input.dim(3);
  const int oh = 2 * h, ow = 2 * w;
  const long planes = long(n) * c;

  struct Lerp {
    int lo, hi;
    T wlo, whi;
  };
  auto make_axis = [](int in, int out) {
    std::vector<Lerp> v(out);
    for (int o = 0; o < out; ++o) {
      double src = (o + 0.5) / 2.0 - 0.5;
      if (src < 0) src = 0;
      if (src > in - 1) src = in - 1;
      const int lo = int(std::floor(src));
      const int hi = std::min(lo + 1, in - 1);
      const T t = T(src - lo);
      v[o] = {lo, hi, T(1) - t, t};
    }
    return v;
  };
  auto ys = std::make_shared<std::vector<Lerp>>(make_axis(h, oh));
  auto xs = std::make_shared<std::vector<Lerp>>(make_axis(w, ow));

  Tensor<T> out = Tensor<T>::make_result(
      {n, c, oh, ow}, input.tracked(), {input},
      [ys, xs, planes, h, w, oh, ow](typename Tensor<T>::Node& nd) {
        auto* gx = detail::grad_sink<T>(*nd.parents[0]);
        if (!gx) return;
        for (long p = 0; p < planes; ++p) {
          const T* g = nd.grad.data() + p * oh * ow;
          T* gi = gx->data() + p * h * w;
          for (int oy = 0; oy < oh; ++oy) {
            const Lerp& ly = (*ys)[oy];
            for (int ox = 0; ox < ow; ++ox) {
              const Lerp& lx = (*xs)[ox];
              const T gv = g[oy * ow + ox];
              gi[ly.lo * w + lx.lo] += gv * ly.wlo * lx.wlo;
              gi[ly.lo * w + lx.hi] += gv * ly.wlo * lx.whi;
              gi[ly.hi * w + lx.lo] += gv * ly.whi * lx.wlo;
              gi[ly.hi * w + lx.hi] += gv * ly.whi * lx.whi;
            }
          }
        }
      });
  const T* x = input.data();
  T* o = out.data();
  parallel_for(planes, [&](long p0, long p1) {
    for (long p = p0; p < p1; ++p) {
      const T* plane = x + p * h * w;
      T* op = o + p * oh * ow;
      for (int oy = 0; oy < oh; ++oy) {
        const Lerp& ly = (*ys)[oy];
        for (int ox = 0; ox < ow; ++ox) {
          const Lerp& lx = (*xs)[ox];
          op[oy * ow + ox] = ly.wlo * (lx.wlo * plane[ly.lo * w + lx.lo] +
                                       lx.whi * plane[ly.lo * w + lx.hi]) +
                             ly.whi * (lx.wlo * plane[ly.hi * w + lx.lo] +
                                       lx.whi * plane[ly.hi * w + lx.hi]);
        }
      }
    }
  });
  out.check_finite("bilinear_upsample2");
  return out;
}

// ---------------------------------------------------------------------------
// batchnorm (inference form): per-channel affine with fixed running stats
// ---------------------------------------------------------------------------

template <typename T>
struct BatchNormParams {
  Tensor<T> scale, shift;                // trainable
  Tensor<T> running_mean, running_var;   // fixed statistics
  static BatchNormParams create(int channels) {
    BatchNormParams p;
    p.scale = Tensor<T>::full({channels}, T(1), true);
    p.shift = Tensor<T>::full({channels}, T(0), true);
    p.running_mean = Tensor<T>::full({channels}, T(0));
    p.running_var = Tensor<T>::full({channels}, T(1));
    return p;
  }
};

template <typename T>
Tensor<T> batchnorm_inference(const Tensor<T>& input,
                              const BatchNormParams<T>& params,
                              T eps = T(1e-5)) {
  if (input.ndim() != 4 || input.dim(1) != params.scale.size())
    throw ShapeError("batchnorm_inference: input " + shape_str(input.shape()) +
                     " vs " + std::to_string(params.scale.size()) +
                     " channels");
  const int n = input.dim(0), c = input.dim(1);
  const long hw = long(input.dim(2)) * input.dim(3);
  const bool track =
      input.tracked() || params.scale.tracked() || params.shift.tracked();

  Tensor<T> out = Tensor<T>::make_result(
      input.shape(), track, {input, params.scale, params.shift},
      [input, params, eps, n, c, hw](typename Tensor<T>::Node& nd) {
        auto* gx = detail::grad_sink<T>(*nd.parents[0]);
        auto* gs = detail::grad_sink<T>(*nd.parents[1]);
        auto* gh = detail::grad_sink<T>(*nd.parents[2]);
        for (int i = 0; i < n; ++i)
          for (int ch = 0; ch < c; ++ch) {
            const long base = (long(i) * c + ch) * hw;
            const T inv =
                T(1) / std::sqrt(params.running_var.data()[ch] + eps);
            const T m = params.running_mean.data()[ch];
            const T s = params.scale.data()[ch];
            for (long j = 0; j < hw; ++j) {
              const T g = nd.grad[base + j];
              if (gx) (*gx)[base + j] += g * s * inv;
              if (gs) (*gs)[ch] += g * (input.data()[base + j] - m) * inv;
              if (gh) (*gh)[ch] += g;
            }
          }
      });
  const T* x = input.data();
  T* o = out.data();
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      const long base = (long(i) * c + ch) * hw;
      const T inv = T(1) / std::sqrt(params.running_var.data()[ch] + eps);
      const T m = params.running_mean.data()[ch];
      const T s = params.scale.data()[ch];
      const T b = params.shift.data()[ch];
      for (long j = 0; j < hw; ++j) o[base + j] = (x[base + j] - m) * inv * s + b;
    }
  out.check_finite("batchnorm_inference");
  return out;
}

// ---------------------------------------------------------------------------
// AdaIN with learned per-class (mean, raw-std) embeddings.
// applied sigma = softplus(raw) keeps the scale positive; raw values around
// softplus^-1(1) make the initial op close to plain instance normalization.
// ---------------------------------------------------------------------------

inline double softplus_inverse_one() { return 0.5413248546129181; }

template <typename T>
struct ClassEmbeddingTable {
  Tensor<T> mu;         // [num_classes, channels]
  Tensor<T> sigma_raw;  // [num_classes, channels], applied through softplus
  static ClassEmbeddingTable create(int num_classes, int channels, Rng& rng) {
    ClassEmbeddingTable t;
    t.mu = Tensor<T>({num_classes, channels}, true);
    t.sigma_raw = Tensor<T>({num_classes, channels}, true);
    for (long i = 0; i < t.mu.size(); ++i) {
      t.mu.data()[i] = T(rng.normal(0.0, 0.01));
      t.sigma_raw.data()[i] = T(softplus_inverse_one() + rng.normal(0.0, 0.01));
    }
    return t;
  }
  int num_classes() const { return mu.dim(0); }
  int channels() const { return mu.dim(1); }
};

namespace detail {

template <typename T>
T softplus(T x) {
  return x > T(20) ? x : std::log1p(std::exp(x));
}

template <typename T>
T softplus_grad(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x))
                   : std::exp(x) / (T(1) + std::exp(x));
}

}  // namespace detail

template <typename T>
Tensor<T> adain(const Tensor<T>& input, const std::vector<int>& class_ids,
                const ClassEmbeddingTable<T>& table, T eps = T(1e-5)) {
  if (input.ndim() != 4)
    throw ShapeError("adain: expected 4-d input, got " +
                     shape_str(input.shape()));
  const int n = input.dim(0), c = input.dim(1);
  const long hw = long(input.dim(2)) * input.dim(3);
  if (int(class_ids.size()) != n)
    throw ShapeError("adain: " + std::to_string(class_ids.size()) +
                     " class ids for batch of " + std::to_string(n));
  if (c != table.channels())
    throw ShapeError("adain: input channels " + std::to_string(c) +
                     " vs table " + std::to_string(table.channels()));
  for (int id : class_ids)
    if (id < 0 || id >= table.num_classes())
      throw ShapeError("adain: class id " + std::to_string(id) +
                       " out of range [0," +
                       std::to_string(table.num_classes()) + ")");

  // per (sample, channel) instance statistics; population std over H*W
  auto stats_m = std::make_shared<std::vector<T>>(long(n) * c);
  auto stats_s = std::make_shared<std::vector<T>>(long(n) * c);
  const T* x = input.data();
  for (long p = 0; p < long(n) * c; ++p) {
    const T* v = x + p * hw;
    T m = T(0);
    for (long j = 0; j < hw; ++j) m += v[j];
    m /= T(hw);
    T var = T(0);
    for (long j = 0; j < hw; ++j) {
      const T d = v[j] - m;
      var += d * d;
    }
    (*stats_m)[p] = m;
    (*stats_s)[p] = std::sqrt(var / T(hw));
  }

  const bool track =
      input.tracked() || table.mu.tracked() || table.sigma_raw.tracked();
  Tensor<T> out = Tensor<T>::make_result(
      input.shape(), track, {input, table.mu, table.sigma_raw},
      [input, class_ids, table, eps, n, c, hw, stats_m,
       stats_s](typename Tensor<T>::Node& nd) {
        auto* gx = detail::grad_sink<T>(*nd.parents[0]);
        auto* gmu = detail::grad_sink<T>(*nd.parents[1]);
        auto* graw = detail::grad_sink<T>(*nd.parents[2]);
        const T* xv = input.data();
        for (int i = 0; i < n; ++i) {
          const int k = class_ids[i];
          for (int ch = 0; ch < c; ++ch) {
            const long p = long(i) * c + ch;
            const long base = p * hw;
            const T m = (*stats_m)[p];
            const T s = (*stats_s)[p];
            const T denom = s + eps;
            const T raw = table.sigma_raw.data()[k * c + ch];
            const T sp = detail::softplus(raw);
            const T a = sp / denom;
            T gsum = T(0), gdot = T(0);
            for (long j = 0; j < hw; ++j) {
              const T g = nd.grad[base + j];
              gsum += g;
              gdot += g * (xv[base + j] - m);
            }
            if (gmu) (*gmu)[k * c + ch] += gsum;
            if (graw)
              (*graw)[k * c + ch] +=
                  (gdot / denom) * detail::softplus_grad(raw);
            if (gx) {
              const T gmean = gsum / T(hw);
              const T coef =
                  s > T(0) ? sp * gdot / (denom * denom * T(hw) * s) : T(0);
              for (long j = 0; j < hw; ++j) {
                const T g = nd.grad[base + j];
                (*gx)[base + j] +=
                    a * (g - gmean) - coef * (xv[base + j] - m);
              }
            }
          }
        }
      });
  T* o = out.data();
  for (int i = 0; i < n; ++i) {
    const int k = class_ids[i];
    for (int ch = 0; ch < c; ++ch) {
      const long p = long(i) * c + ch;
      const long base = p * hw;
      const T m = (*stats_m)[p];
      const T denom = (*stats_s)[p] + eps;
      const T sp = detail::softplus(table.sigma_raw.data()[k * c + ch]);
      const T mu_t = table.mu.data()[k * c + ch];
      const T a = sp / denom;
      for (long j = 0; j < hw; ++j) o[base + j] = a * (x[base + j] - m) + mu_t;
    }
  }
  out.check_finite("adain");
  return out;
}

// ---------------------------------------------------------------------------
// embedding lookup: returns one row of a [rows, dim] table
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, int index) {
  if (table.ndim() != 2)
    throw ShapeError("embedding_lookup: table must be 2-d, got " +
                     shape_str(table.shape()));
  if (index < 0 || index >= table.dim(0))
    throw ShapeError("embedding_lookup: index " + std::to_string(index) +
                     " out of range [0," + std::to_string(table.dim(0)) + ")");
  const int d = table.dim(1);
  Tensor<T> out = Tensor<T>::make_result(
      {d}, table.tracked(), {table},
      [index, d](typename Tensor<T>::Node& nd) {
        auto* gt = detail::grad_sink<T>(*nd.parents[0]);
        if (!gt) return;
        for (int j = 0; j < d; ++j) (*gt)[long(index) * d + j] += nd.grad[j];
      });
  std::copy(table.data() + long(index) * d, table.data() + long(index + 1) * d,
            out.data());
  return out;
}

// ---------------------------------------------------------------------------
// dropout
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> dropout(const Tensor<T>& input, double rate, bool training,
                  Rng& rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw ShapeError("dropout: rate " + std::to_string(rate) +
                     " outside [0,1)");
  if (!training || rate == 0.0) {
    // identity pass-through, still a tape node so gradients flow
    return elementwise_unary<T>(
        "dropout", input, [](T x) { return x; }, [](T, T, T g) { return g; });
  }
  auto mask = std::make_shared<std::vector<T>>(input.size());
  const T keep_scale = T(1.0 / (1.0 - rate));
  for (long i = 0; i < input.size(); ++i)
    (*mask)[i] = rng.uniform() < rate ? T(0) : keep_scale;

  Tensor<T> out = Tensor<T>::make_result(
      input.shape(), input.tracked(), {input},
      [mask](typename Tensor<T>::Node& nd) {
        auto* gx = detail::grad_sink<T>(*nd.parents[0]);
        if (!gx) return;
        for (long i = 0; i < long(nd.grad.size()); ++i)
          (*gx)[i] += nd.grad[i] * (*mask)[i];
      });
  const T* x = input.data();
  T* o = out.data();
  for (long i = 0; i < input.size(); ++i) o[i] = x[i] * (*mask)[i];
  return out;
}

// ---------------------------------------------------------------------------
// Layer containers
// ---------------------------------------------------------------------------

// Kaiming-uniform fan-in init with ReLU gain: U(-b, b), b = sqrt(6 / fan_in).
template <typename T>
void kaiming_uniform(Tensor<T>& w, long fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / double(fan_in));
  for (long i = 0; i < w.size(); ++i)
    w.data()[i] = T(rng.uniform(-bound, bound));
}

template <typename T>
struct Conv2dLayer {
  Tensor<T> weight, bias;
  int stride = 1, pad = 1;
  static Conv2dLayer create(int in_c, int out_c, int k, int stride, int pad,
                            Rng& rng, bool trainable = true) {
    Conv2dLayer l;
    l.weight = Tensor<T>({out_c, in_c, k, k}, trainable);
    l.bias = Tensor<T>({out_c}, trainable);
    kaiming_uniform(l.weight, long(in_c) * k * k, rng);
    l.stride = stride;
    l.pad = pad;
    return l;
  }
  Tensor<T> operator()(const Tensor<T>& x) const {
    return conv2d(x, weight, bias, stride, pad);
  }
  long param_count() const { return weight.size() + bias.size(); }
};

template <typename T>
struct LinearLayer {
  Tensor<T> weight;  // [in, out]
  Tensor<T> bias;    // [out]
  static LinearLayer create(int in, int out, Rng& rng) {
    LinearLayer l;
    l.weight = Tensor<T>({in, out}, true);
    l.bias = Tensor<T>({out}, true);
    kaiming_uniform(l.weight, in, rng);
    return l;
  }
  Tensor<T> operator()(const Tensor<T>& x) const {
    Tensor<T> y = matmul(x, weight);
    // broadcast bias over rows
    const int n = y.dim(0), m = y.dim(1);
    Tensor<T> out = Tensor<T>::make_result(
        y.shape(), y.tracked() || bias.tracked(), {y, bias},
        [n, m](typename Tensor<T>::Node& nd) {
          auto* gy = detail::grad_sink<T>(*nd.parents[0]);
          auto* gb = detail::grad_sink<T>(*nd.parents[1]);
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) {
              const T g = nd.grad[long(i) * m + j];
              if (gy) (*gy)[long(i) * m + j] += g;
              if (gb) (*gb)[j] += g;
            }
        });
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        out.data()[long(i) * m + j] = y.data()[long(i) * m + j] + bias.data()[j];
    return out;
  }
  long param_count() const { return weight.size() + bias.size(); }
};

}  // namespace sketchgen
