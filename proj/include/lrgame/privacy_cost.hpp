#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "lrgame/error.hpp"

namespace lrgame {

/// Privacy cost c_i(lambda): monomial c * lambda^k, or user-supplied callables.
///
/// Custom costs are sampled at construction on 32 log-spaced points of (0, cap]
/// and must be non-negative, non-decreasing and strictly convex there. Monomials
/// with k = 1 are admitted but reported as weakly convex, since then the
/// potential minimizer need not be unique.
template <typename Scalar = double>
class PrivacyCost {
 public:
  using Fn = std::function<Scalar(Scalar)>;

  struct Monomial {
    Scalar coefficient;
    Scalar exponent;
  };

  static PrivacyCost monomial(Scalar coefficient, Scalar exponent) {
    if (!(coefficient > Scalar(0)) || !std::isfinite(coefficient)) {
      fail(ErrorKind::InvalidArgument, "monomial coefficient must be positive");
    }
    if (!(exponent >= Scalar(1)) || !std::isfinite(exponent)) {
      fail(ErrorKind::InvalidArgument, "monomial exponent must be >= 1");
    }
    PrivacyCost cost;
    cost.monomial_ = Monomial{coefficient, exponent};
    return cost;
  }

  /// `domain_max` bounds where the callables may be evaluated; it must cover
  /// [0, cap] and, for superconvexity checks, the scaled arguments beyond cap.
  static PrivacyCost custom(Fn value, Fn derivative, Fn second_derivative, Scalar cap,
                            Scalar domain_max = std::numeric_limits<Scalar>::infinity()) {
    if (!value || !derivative || !second_derivative) fail(ErrorKind::InvalidArgument, "custom cost needs all callables");
    if (!(cap > Scalar(0))) fail(ErrorKind::InvalidArgument, "cap must be positive");
    if (domain_max < cap) fail(ErrorKind::DerivativeDomainTooSmall, "custom cost domain must cover [0, cap]");
    PrivacyCost cost;
    cost.value_ = std::move(value);
    cost.derivative_ = std::move(derivative);
    cost.second_derivative_ = std::move(second_derivative);
    cost.domain_max_ = domain_max;

    constexpr int kSamples = 32;
    Scalar previous = cost.value_(Scalar(0));
    if (!(previous >= Scalar(0))) fail(ErrorKind::InvalidArgument, "custom cost must be non-negative at 0");
    for (int j = 0; j < kSamples; ++j) {
      const Scalar x = cap * std::pow(Scalar(10), Scalar(-6) + Scalar(6) * Scalar(j) / Scalar(kSamples - 1));
      const Scalar v = cost.value_(x);
      if (!(v >= Scalar(0))) fail(ErrorKind::InvalidArgument, "custom cost must be non-negative");
      if (v < previous) fail(ErrorKind::InvalidArgument, "custom cost must be non-decreasing");
      if (!(cost.derivative_(x) >= Scalar(0))) fail(ErrorKind::InvalidArgument, "custom cost derivative must be >= 0");
      if (!(cost.second_derivative_(x) > Scalar(0))) {
        fail(ErrorKind::InvalidArgument, "custom cost must be strictly convex (c'' > 0)");
      }
      previous = v;
    }
    return cost;
  }

  Scalar value(Scalar x) const {
    if (monomial_) return monomial_->coefficient * std::pow(x, monomial_->exponent);
    return value_(x);
  }

  Scalar derivative(Scalar x) const {
    if (monomial_) {
      const auto [c, k] = *monomial_;
      return c * k * std::pow(x, k - Scalar(1));
    }
    check_domain(x);
    return derivative_(x);
  }

  Scalar second_derivative(Scalar x) const {
    if (monomial_) {
      const auto [c, k] = *monomial_;
      if (k == Scalar(1)) return Scalar(0);
      return c * k * (k - Scalar(1)) * std::pow(x, k - Scalar(2));
    }
    check_domain(x);
    return second_derivative_(x);
  }

  /// Solves c'(x) = y on [0, upper]; saturates at the interval ends.
  Scalar inverse_derivative(Scalar y, Scalar upper) const {
    if (weakly_convex()) fail(ErrorKind::NotInvertible, "c' is constant for linear costs");
    if (monomial_) {
      const auto [c, k] = *monomial_;
      if (y <= Scalar(0)) return Scalar(0);
      return std::min(upper, std::pow(y / (c * k), Scalar(1) / (k - Scalar(1))));
    }
    if (y <= derivative(Scalar(0))) return Scalar(0);
    if (y >= derivative(upper)) return upper;
    Scalar lo = 0, hi = upper;
    while (hi - lo > Scalar(1e-12)) {
      const Scalar mid = Scalar(0.5) * (lo + hi);
      (derivative(mid) < y ? lo : hi) = mid;
    }
    return Scalar(0.5) * (lo + hi);
  }

  bool is_monomial() const { return monomial_.has_value(); }
  const std::optional<Monomial>& monomial_params() const { return monomial_; }
  bool weakly_convex() const { return monomial_ && monomial_->exponent == Scalar(1); }
  Scalar domain_max() const { return monomial_ ? std::numeric_limits<Scalar>::infinity() : domain_max_; }

 private:
  PrivacyCost() = default;

  void check_domain(Scalar x) const {
    if (x > domain_max_) {
      fail(ErrorKind::DerivativeDomainTooSmall,
           "custom cost evaluated at " + std::to_string(static_cast<double>(x)) + " beyond its domain");
    }
  }

  std::optional<Monomial> monomial_;
  Fn value_;
  Fn derivative_;
  Fn second_derivative_;
  Scalar domain_max_ = std::numeric_limits<Scalar>::infinity();
};

}  // namespace lrgame
