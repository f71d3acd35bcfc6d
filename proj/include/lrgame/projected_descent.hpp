#pragma once

// Projected gradient descent over a box [0, upper]^n for extended-value convex
// objectives. Points where the objective is +inf are rejected by the line
// search exactly like points that fail sufficient decrease.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "lrgame/error.hpp"
#include "lrgame/estimation.hpp"
#include "lrgame/scalarization.hpp"

namespace lrgame {

struct DescentOptions {
  double tol = 1e-8;               // projected-gradient residual target
  std::int64_t max_iter = 100000;
  double sufficient_decrease = 1e-4;
  double backtrack = 0.5;
  double initial_step = 1.0;
};

template <typename Scalar = double>
struct DescentResult {
  VectorX<Scalar> point;
  Scalar value{};
  Scalar residual{};
  std::int64_t iterations{};
  bool converged = false;
};

/// Infinity norm of the projected gradient: |g_i| inside, the inward-pointing
/// part at a bound (negative part at 0, positive part at `upper`).
template <typename Scalar>
Scalar projected_gradient_residual(const VectorX<Scalar>& x, const VectorX<Scalar>& g, Scalar upper) {
  Scalar r = 0;
  for (Index i = 0; i < x.size(); ++i) {
    Scalar c;
    if (x(i) <= Scalar(0)) {
      c = std::max(Scalar(0), -g(i));
    } else if (x(i) >= upper) {
      c = std::max(Scalar(0), g(i));
    } else {
      c = std::abs(g(i));
    }
    r = std::max(r, c);
  }
  return r;
}

/// `objective` must expose `ExtendedCost<Scalar> value(const VectorX<Scalar>&)` and
/// `VectorX<Scalar> gradient(const VectorX<Scalar>&)`; the start must be finite.
///
/// The first trial step is `initial_step`; later iterations start from the
/// Barzilai-Borwein step of the previous move and backtrack with Armijo's rule
/// along the projection arc.
template <typename Scalar, typename Objective>
DescentResult<Scalar> minimize_on_box(const Objective& objective, VectorX<Scalar> x, Scalar upper,
                                      const DescentOptions& options = {}) {
  auto project = [upper](VectorX<Scalar> v) { return VectorX<Scalar>(v.cwiseMax(Scalar(0)).cwiseMin(upper)); };
  x = project(std::move(x));
  auto fx = objective.value(x);
  if (!fx.finite) fail(ErrorKind::InfiniteStart, "descent must start where the objective is finite");
  VectorX<Scalar> g = objective.gradient(x);

  // Rounding slack for the Armijo test; without it the line search stalls once
  // the predicted decrease drops below the precision of the objective value.
  const auto noise = [](Scalar v) { return Scalar(8) * std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + std::abs(v)); };

  DescentResult<Scalar> result;
  Scalar step = Scalar(options.initial_step);
  for (std::int64_t it = 0;; ++it) {
    const Scalar residual = projected_gradient_residual(x, g, upper);
    if (residual <= Scalar(options.tol) || it >= options.max_iter) {
      result.point = x;
      result.value = fx.value;
      result.residual = residual;
      result.iterations = it;
      result.converged = residual <= Scalar(options.tol);
      return result;
    }

    Scalar alpha = step;
    VectorX<Scalar> y;
    ExtendedCost<Scalar> fy;
    bool accepted = false;
    for (int tries = 0; tries < 200; ++tries) {
      y = project(x - alpha * g);
      fy = objective.value(y);
      if (fy.finite && fy.value <= fx.value + Scalar(options.sufficient_decrease) * g.dot(y - x) + noise(fx.value)) {
        accepted = true;
        break;
      }
      alpha *= Scalar(options.backtrack);
    }
    if (!accepted || y == x) {
      result.point = x;
      result.value = fx.value;
      result.residual = residual;
      result.iterations = it;
      result.converged = false;
      return result;
    }

    VectorX<Scalar> gy = objective.gradient(y);
    const VectorX<Scalar> s = y - x;
    const Scalar sy = s.dot(gy - g);
    step = sy > Scalar(0) ? std::clamp(s.squaredNorm() / sy, Scalar(1e-12), Scalar(1e12)) : Scalar(2) * alpha;
    x = std::move(y);
    fx = fy;
    g = std::move(gy);
  }
}

}  // namespace lrgame
