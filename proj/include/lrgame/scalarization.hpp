#pragma once

// Extended-value estimation costs f(lambda) = F(V(lambda)) and their gradients.
// f is +inf wherever the covariance is undefined; that value is in-band.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string_view>

#include "lrgame/error.hpp"
#include "lrgame/estimation.hpp"

namespace lrgame {

enum class ScalarizationKind { Trace, FrobeniusSquared };

constexpr std::string_view to_string(ScalarizationKind kind) {
  return kind == ScalarizationKind::Trace ? "trace" : "frobenius2";
}

template <typename Scalar = double>
struct ExtendedCost {
  Scalar value = std::numeric_limits<Scalar>::infinity();
  bool finite = false;

  static ExtendedCost infinite() { return {}; }
  static ExtendedCost of(Scalar v) { return {v, std::isfinite(v)}; }

  ExtendedCost operator+(Scalar rhs) const { return finite ? of(value + rhs) : infinite(); }
};

namespace detail {

template <typename Scalar>
void require_supported(ScalarizationKind kind, const EstimatorSpec<Scalar>* estimator) {
  if (kind == ScalarizationKind::FrobeniusSquared && estimator != nullptr && !estimator->is_gls()) {
    fail(ErrorKind::UnsupportedScalarization,
         "perturbed estimators are only supported with the trace scalarization");
  }
}

/// True when some player with zero weight faces a nonzero perturbation row.
template <typename Scalar>
bool zero_weight_perturbed(const ActionProfile<Scalar>& profile, const EstimatorSpec<Scalar>* estimator) {
  if (estimator == nullptr || estimator->is_gls()) return false;
  for (Index i = 0; i < profile.size(); ++i) {
    if (profile[i] == Scalar(0) && estimator->row_weight(i) > Scalar(0)) return true;
  }
  return false;
}

template <typename Scalar>
std::optional<Eigen::LLT<MatrixX<Scalar>>> try_factor(const RegressionInstance<Scalar>& instance,
                                                      const ActionProfile<Scalar>& profile,
                                                      const EstimatorSpec<Scalar>* estimator) {
  if (zero_weight_perturbed(profile, estimator)) return std::nullopt;
  const MatrixX<Scalar> A = precision_matrix(instance, profile);
  if (is_degenerate_precision(A)) return std::nullopt;
  Eigen::LLT<MatrixX<Scalar>> llt(A);
  if (llt.info() != Eigen::Success) return std::nullopt;
  return llt;
}

template <typename Scalar>
ExtendedCost<Scalar> cost_impl(const RegressionInstance<Scalar>& instance, const ActionProfile<Scalar>& profile,
                               ScalarizationKind kind, const EstimatorSpec<Scalar>* estimator) {
  require_supported(kind, estimator);
  const auto llt = try_factor(instance, profile, estimator);
  if (!llt) return ExtendedCost<Scalar>::infinite();
  const Index d = instance.d();
  const MatrixX<Scalar> V = llt->solve(MatrixX<Scalar>::Identity(d, d));
  if (kind == ScalarizationKind::FrobeniusSquared) return ExtendedCost<Scalar>::of(V.squaredNorm());

  Scalar value = V.trace();
  if (estimator != nullptr && !estimator->is_gls()) {
    // trace(a^2 D^T Lambda^{-1} D) = a^2 sum_i ||d_i||^2 / lambda_i
    for (Index i = 0; i < instance.n(); ++i) {
      const Scalar w = estimator->row_weight(i);
      if (w > Scalar(0)) value += w / profile[i];
    }
  }
  return ExtendedCost<Scalar>::of(value);
}

template <typename Scalar>
VectorX<Scalar> gradient_impl(const RegressionInstance<Scalar>& instance, const ActionProfile<Scalar>& profile,
                              ScalarizationKind kind, const EstimatorSpec<Scalar>* estimator) {
  require_supported(kind, estimator);
  const auto llt = try_factor(instance, profile, estimator);
  if (!llt) fail(ErrorKind::InfiniteCost, "estimation cost is infinite at this profile");

  // Column i of W is A^{-1} x_i, so x_i^T A^{-2} x_i = ||W_i||^2 and
  // x_i^T A^{-3} x_i = W_i^T A^{-1} W_i.
  const MatrixX<Scalar> W = llt->solve(instance.features().transpose());
  const Index n = instance.n();
  VectorX<Scalar> grad(n);
  if (kind == ScalarizationKind::Trace) {
    grad = -W.colwise().squaredNorm().transpose();
    if (estimator != nullptr && !estimator->is_gls()) {
      for (Index i = 0; i < n; ++i) {
        const Scalar w = estimator->row_weight(i);
        if (w > Scalar(0)) grad(i) -= w / (profile[i] * profile[i]);
      }
    }
  } else {
    const MatrixX<Scalar> W2 = llt->solve(W);
    grad = Scalar(-2) * W.cwiseProduct(W2).colwise().sum().transpose();
  }
  return grad;
}

}  // namespace detail

template <typename Scalar>
ExtendedCost<Scalar> estimation_cost(const RegressionInstance<Scalar>& instance, const ActionProfile<Scalar>& profile,
                                     ScalarizationKind kind) {
  return detail::cost_impl<Scalar>(instance, profile, kind, nullptr);
}

template <typename Scalar>
ExtendedCost<Scalar> estimation_cost(const RegressionInstance<Scalar>& instance, const ActionProfile<Scalar>& profile,
                                     ScalarizationKind kind, const EstimatorSpec<Scalar>& estimator) {
  return detail::cost_impl<Scalar>(instance, profile, kind, &estimator);
}

/// df/dlambda_i; trace: -x_i^T A^{-2} x_i - a^2 ||d_i||^2 / lambda_i^2, Frobenius: -2 x_i^T A^{-3} x_i.
template <typename Scalar>
VectorX<Scalar> estimation_cost_gradient(const RegressionInstance<Scalar>& instance,
                                         const ActionProfile<Scalar>& profile, ScalarizationKind kind) {
  return detail::gradient_impl<Scalar>(instance, profile, kind, nullptr);
}

template <typename Scalar>
VectorX<Scalar> estimation_cost_gradient(const RegressionInstance<Scalar>& instance,
                                         const ActionProfile<Scalar>& profile, ScalarizationKind kind,
                                         const EstimatorSpec<Scalar>& estimator) {
  return detail::gradient_impl<Scalar>(instance, profile, kind, &estimator);
}

namespace detail {

template <typename Scalar>
VectorX<Scalar> finite_difference_impl(const RegressionInstance<Scalar>& instance,
                                       const ActionProfile<Scalar>& profile, ScalarizationKind kind,
                                       const EstimatorSpec<Scalar>* estimator, Scalar step) {
  if (!(step > Scalar(0))) fail(ErrorKind::StencilLeavesDomain, "finite-difference step must be positive");
  require_dimension(instance, profile);
  const Index n = profile.size();
  VectorX<Scalar> grad(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar h = step * std::max(profile[i], Scalar(1));
    if (profile[i] - h < Scalar(0)) {
      fail(ErrorKind::StencilLeavesDomain, "stencil crosses lambda = 0 at player " + std::to_string(i));
    }
    const auto up = cost_impl(instance, profile.with(i, profile[i] + h), kind, estimator);
    const auto down = cost_impl(instance, profile.with(i, profile[i] - h), kind, estimator);
    if (!up.finite || !down.finite) {
      fail(ErrorKind::StencilLeavesDomain, "stencil reaches infinite cost at player " + std::to_string(i));
    }
    grad(i) = (up.value - down.value) / (Scalar(2) * h);
  }
  return grad;
}

}  // namespace detail

/// Central differences with per-coordinate step `step * max(lambda_i, 1)`.
template <typename Scalar>
VectorX<Scalar> finite_difference_gradient(const RegressionInstance<Scalar>& instance,
                                           const ActionProfile<Scalar>& profile, ScalarizationKind kind,
                                           Scalar step) {
  return detail::finite_difference_impl<Scalar>(instance, profile, kind, nullptr, step);
}

template <typename Scalar>
VectorX<Scalar> finite_difference_gradient(const RegressionInstance<Scalar>& instance,
                                           const ActionProfile<Scalar>& profile, ScalarizationKind kind,
                                           const EstimatorSpec<Scalar>& estimator, Scalar step) {
  return detail::finite_difference_impl<Scalar>(instance, profile, kind, &estimator, step);
}

/// Largest componentwise relative error between the analytic gradient and
/// central differences; the differences are taken in long double so that
/// rounding in f does not swamp the truncation error on ill-conditioned designs.
inline double max_gradient_error(const RegressionInstance<double>& instance, const ActionProfile<double>& profile,
                                 ScalarizationKind kind, const EstimatorSpec<double>* estimator = nullptr,
                                 double step = 1e-6) {
  using L = long double;
  const RegressionInstance<L> wide(instance.features().cast<L>(), L(instance.inherent_variance()));
  const ActionProfile<L> wide_profile(profile.lambdas().cast<L>());
  VectorX<double> analytic;
  VectorX<L> numeric;
  if (estimator != nullptr) {
    const EstimatorSpec<L> wide_est(wide, estimator->null_matrix().cast<L>(), L(estimator->scaling()));
    analytic = estimation_cost_gradient(instance, profile, kind, *estimator);
    numeric = finite_difference_gradient(wide, wide_profile, kind, wide_est, L(step));
  } else {
    analytic = estimation_cost_gradient(instance, profile, kind);
    numeric = finite_difference_gradient(wide, wide_profile, kind, L(step));
  }
  double worst = 0.0;
  for (Index i = 0; i < analytic.size(); ++i) {
    const double fd = static_cast<double>(numeric(i));
    const double scale = std::max({std::abs(analytic(i)), std::abs(fd), 1e-300});
    worst = std::max(worst, std::abs(analytic(i) - fd) / scale);
  }
  return worst;
}

}  // namespace lrgame
