#pragma once

#include <vector>

#include "sketchgen/tensor.hpp"

namespace sketchgen {

// Per-position channel-direction unit normalization: at every (n, h, w) the
// C-vector is scaled to Euclidean norm 1. Zero vectors stay zero (eps guard).
template <typename T>
Tensor<T> unit_normalize(const Tensor<T>& acts, T eps = T(1e-10)) {
  if (acts.ndim() != 4)
    throw ShapeError("unit_normalize: expected 4-d activations, got " +
                     shape_str(acts.shape()));
  const int n = acts.dim(0), c = acts.dim(1);
  const long hw = long(acts.dim(2)) * acts.dim(3);
  auto norms = std::make_shared<std::vector<T>>(long(n) * hw);
  const T* x = acts.data();
  for (int i = 0; i < n; ++i)
    for (long j = 0; j < hw; ++j) {
      T s = T(0);
      for (int ch = 0; ch < c; ++ch) {
        const T v = x[(long(i) * c + ch) * hw + j];
        s += v * v;
      }
      (*norms)[long(i) * hw + j] = std::sqrt(s) + eps;
    }

  Tensor<T> out = Tensor<T>::make_result(
      acts.shape(), acts.tracked(), {acts},
      [norms, n, c, hw](typename Tensor<T>::Node& nd) {
        auto* gx = detail::grad_sink<T>(*nd.parents[0]);
        if (!gx) return;
        // y = v / r with r = ||v|| + eps:  dv = (g - y * dot(y, g)) / r
        for (int i = 0; i < n; ++i)
          for (long j = 0; j < hw; ++j) {
            const T r = (*norms)[long(i) * hw + j];
            T dot = T(0);
            for (int ch = 0; ch < c; ++ch) {
              const long idx = (long(i) * c + ch) * hw + j;
              dot += nd.value[idx] * nd.grad[idx];
            }
            for (int ch = 0; ch < c; ++ch) {
              const long idx = (long(i) * c + ch) * hw + j;
              (*gx)[idx] += (nd.grad[idx] - nd.value[idx] * dot) / r;
            }
          }
      });
  T* o = out.data();
  for (int i = 0; i < n; ++i)
    for (long j = 0; j < hw; ++j) {
      const T inv = T(1) / (*norms)[long(i) * hw + j];
      for (int ch = 0; ch < c; ++ch) {
        const long idx = (long(i) * c + ch) * hw + j;
        o[idx] = x[idx] * inv;
      }
    }
  out.check_finite("unit_normalize");
  return out;
}

// Deep perceptual distance: per trunk layer, unit-normalize the activations
// of both inputs along channels, then average the squared distance over
// spatial positions (and batch) and sum over layers.
//
// `TrunkFn` maps a sketch tensor [N,1,H,W] to its per-layer activations.
template <typename T, typename TrunkFn>
Tensor<T> psim(const Tensor<T>& x, const Tensor<T>& x_t, TrunkFn&& trunk) {
  detail::require_same_shape("psim", x.shape(), x_t.shape());
  std::vector<Tensor<T>> ax = trunk(x);
  std::vector<Tensor<T>> at = trunk(x_t);
  Tensor<T> total = Tensor<T>::scalar(T(0));
  for (std::size_t l = 0; l < ax.size(); ++l) {
    Tensor<T> nx = unit_normalize(ax[l]);
    Tensor<T> nt = unit_normalize(at[l]);
    Tensor<T> d = sub(nx, nt);
    Tensor<T> sq = mul(d, d);
    const long n = sq.dim(0);
    const long hw = long(sq.dim(2)) * sq.dim(3);
    // sum over channels, mean over batch and positions
    Tensor<T> layer_term = scale(sum_all(sq), T(1) / T(n * hw));
    total = add(total, layer_term);
  }
  return total;
}

template <typename T>
Tensor<T> mse_loss(const Tensor<T>& x, const Tensor<T>& x_t) {
  detail::require_same_shape("mse_loss", x.shape(), x_t.shape());
  Tensor<T> d = sub(x, x_t);
  return mean_all(mul(d, d));
}

}  // namespace sketchgen
