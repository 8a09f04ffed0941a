#pragma once

#include <functional>

#include "sketchgen/tensor.hpp"

namespace sketchgen {

// Central-difference gradient check, always in double precision.
// Returns max over coordinates of |analytic - numeric| / max(1, |analytic|).
// `f` must be deterministic and return a scalar.
inline double finite_diff_check(
    const std::function<Tensor<double>(Tensor<double>&)>& f,
    const Tensor<double>& point, double eps = 1e-5) {
  Tensor<double> x = Tensor<double>::from(point.shape(), point.values(), true);
  Tensor<double> loss = f(x);
  if (loss.size() != 1)
    throw ShapeError("finite_diff_check: function output is non-scalar");
  backward(loss);
  std::vector<double> analytic =
      x.has_grad() ? x.grad() : std::vector<double>(x.size(), 0.0);

  double max_err = 0.0;
  for (long i = 0; i < x.size(); ++i) {
    Tensor<double> xp = Tensor<double>::from(point.shape(), point.values());
    Tensor<double> xm = Tensor<double>::from(point.shape(), point.values());
    xp.data()[i] += eps;
    xm.data()[i] -= eps;
    const double fp = f(xp).item();
    const double fm = f(xm).item();
    const double numeric = (fp - fm) / (2.0 * eps);
    const double err = std::abs(analytic[i] - numeric) /
                       std::max(1.0, std::abs(analytic[i]));
    max_err = std::max(max_err, err);
  }
  return max_err;
}

}  // namespace sketchgen
