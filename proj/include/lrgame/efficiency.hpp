#pragma once

// Social cost, social optimum, price of stability and the theoretical bounds
// that apply to it, plus the fixed-point map used to sandwich the optimum
// between the equilibrium and a scaled copy of it.

#include <cmath>
#include <optional>
#include <string_view>

#include "lrgame/error.hpp"
#include "lrgame/game.hpp"

namespace lrgame {

enum class BoundSource { GeneralPotential, MonomialF1, MonomialF2, SuperconvexF1, SuperconvexF2 };

constexpr std::string_view to_string(BoundSource s) {
  switch (s) {
    case BoundSource::GeneralPotential: return "general_potential";
    case BoundSource::MonomialF1: return "monomial_f1";
    case BoundSource::MonomialF2: return "monomial_f2";
    case BoundSource::SuperconvexF1: return "superconvex_f1";
    case BoundSource::SuperconvexF2: return "superconvex_f2";
  }
  return "general_potential";
}

template <typename Scalar = double>
struct PosBound {
  Scalar bound{};
  BoundSource source = BoundSource::GeneralPotential;
};

template <typename Scalar = double>
struct SandwichCheck {
  bool lower_ok = false;      // lambda* <= lambda_opt
  bool upper_ok = false;      // lambda_opt <= factor * lambda*
  Scalar lower_margin{};      // min_i (lambda_opt_i - lambda*_i)
  Scalar upper_margin{};      // min_i (factor * lambda*_i - lambda_opt_i)
  Scalar factor{};            // sqrt(n) for trace, n^(1/3) for Frobenius
  bool advisory = false;      // Frobenius factor is checked but not established
};

template <typename Scalar = double>
struct EfficiencyReport {
  EquilibriumResult<Scalar> nash;
  ActionProfile<Scalar> social_optimum{VectorX<Scalar>()};
  Scalar opt_cost{};
  Scalar nash_social_cost{};
  Scalar pos{};
  Scalar bound{};
  BoundSource bound_source = BoundSource::GeneralPotential;
  bool bound_satisfied = false;
  std::optional<SandwichCheck<Scalar>> sandwich;
};

namespace tolerance {
inline constexpr double sandwich = 1e-8;
inline constexpr double bound = 1e-9;
inline constexpr double superconvex = 1e-12;
}  // namespace tolerance

/// C(lambda) = sum_i c_i(lambda_i) + n f(lambda).
template <typename Scalar>
ExtendedCost<Scalar> social_cost(const GameSpec<Scalar>& spec, const ActionProfile<Scalar>& profile) {
  require_in_box(spec.instance(), profile);
  const auto f = estimation_cost(spec, profile);
  if (!f.finite) return f;
  return ExtendedCost<Scalar>::of(Scalar(spec.n()) * f.value + total_privacy_cost(spec, profile));
}

template <typename Scalar>
Scalar social_kkt_residual(const GameSpec<Scalar>& spec, const ActionProfile<Scalar>& profile) {
  return detail::weighted_kkt_residual(spec, profile, Scalar(spec.n()));
}

template <typename Scalar>
ActionProfile<Scalar> solve_social_optimum(const GameSpec<Scalar>& spec, const SolverOptions& options = {}) {
  DescentOptions descent;
  descent.tol = options.tol;
  descent.max_iter = options.max_iter;
  const detail::WeightedObjective<Scalar> objective{spec, Scalar(spec.n())};
  const auto result =
      minimize_on_box<Scalar>(objective, ActionProfile<Scalar>::at_cap(spec.instance()).lambdas(), spec.cap(), descent);
  if (!result.converged) {
    fail(ErrorKind::NotConverged, "social-cost descent stopped at residual " +
                                      std::to_string(static_cast<double>(result.residual)));
  }
  return ActionProfile<Scalar>(result.point);
}

/// Samples n c_i'(lambda) <= c_i'(s lambda) on 64 log-spaced lambda in (0, 1/sigma^2],
/// with s = n^(1/2) for the trace and s = n^(1/3) for the squared Frobenius norm.
template <typename Scalar>
bool check_superconvexity(const GameSpec<Scalar>& spec) {
  const Scalar n = Scalar(spec.n());
  const Scalar scale =
      spec.kind() == ScalarizationKind::Trace ? std::sqrt(n) : std::cbrt(n);
  const Scalar cap = spec.cap();
  constexpr int kSamples = 64;
  for (Index i = 0; i < spec.n(); ++i) {
    const auto& c = spec.cost(i);
    if (scale * cap > c.domain_max()) {
      fail(ErrorKind::DerivativeDomainTooSmall, "privacy cost " + std::to_string(i) +
                                                    " cannot be evaluated at the scaled argument");
    }
    for (int j = 0; j < kSamples; ++j) {
      const Scalar x = cap * std::pow(Scalar(10), Scalar(-8) + Scalar(8) * Scalar(j) / Scalar(kSamples - 1));
      const Scalar lhs = n * c.derivative(x);
      const Scalar rhs = c.derivative(scale * x);
      if (lhs > rhs + Scalar(tolerance::superconvex) * std::max(Scalar(1), std::abs(rhs))) return false;
    }
  }
  return true;
}

/// Tightest bound that provably applies to the instance.
template <typename Scalar>
PosBound<Scalar> pos_bound(const GameSpec<Scalar>& spec) {
  const Scalar n = Scalar(spec.n());
  const bool trace = spec.kind() == ScalarizationKind::Trace;
  PosBound<Scalar> general{n, BoundSource::GeneralPotential};
  if (spec.has_perturbation()) return general;

  const auto& first = spec.cost(0).monomial_params();
  bool common_monomial = first.has_value();
  for (const auto& c : spec.costs()) {
    common_monomial = common_monomial && c.monomial_params() && c.monomial_params()->exponent == first->exponent;
  }
  if (common_monomial) {
    const Scalar k = first->exponent;
    return trace ? PosBound<Scalar>{std::pow(n, Scalar(1) / (k + Scalar(1))), BoundSource::MonomialF1}
                 : PosBound<Scalar>{std::pow(n, Scalar(2) / (k + Scalar(2))), BoundSource::MonomialF2};
  }

  bool superconvex = false;
  try {
    superconvex = check_superconvexity(spec);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DerivativeDomainTooSmall) throw;
  }
  if (superconvex) {
    return trace ? PosBound<Scalar>{std::sqrt(n), BoundSource::SuperconvexF1}
                 : PosBound<Scalar>{std::pow(n, Scalar(2) / Scalar(3)), BoundSource::SuperconvexF2};
  }
  return general;
}

/// T_i(lambda) = (c_i')^{-1}(min[n x_i^T A^{-2}(lambda) x_i, c_i'(1/sigma^2)]), trace scalarization only.
template <typename Scalar>
ActionProfile<Scalar> fixed_point_map(const GameSpec<Scalar>& spec, const ActionProfile<Scalar>& profile) {
  if (spec.kind() != ScalarizationKind::Trace) {
    fail(ErrorKind::UnsupportedScalarization, "fixed-point map is defined for the trace scalarization");
  }
  if (spec.has_perturbation()) fail(ErrorKind::InvalidEstimator, "fixed-point map assumes the GLS estimator");
  if (spec.weakly_convex()) fail(ErrorKind::NotInvertible, "linear privacy costs have no invertible derivative");
  require_dimension(spec.instance(), profile);
  const auto llt = detail::factor_or_throw(precision_matrix(spec.instance(), profile));
  const MatrixX<Scalar> W = llt.solve(spec.instance().features().transpose());
  const Scalar n = Scalar(spec.n());
  const Scalar cap = spec.cap();
  VectorX<Scalar> out(spec.n());
  for (Index i = 0; i < spec.n(); ++i) {
    const auto& c = spec.cost(i);
    const Scalar target = std::min(n * W.col(i).squaredNorm(), c.derivative(cap));
    out(i) = c.inverse_derivative(target, cap);
  }
  return ActionProfile<Scalar>(std::move(out));
}

template <typename Scalar>
SandwichCheck<Scalar> sandwich_check(const GameSpec<Scalar>& spec, const ActionProfile<Scalar>& nash,
                                     const ActionProfile<Scalar>& optimum) {
  if (spec.has_perturbation()) fail(ErrorKind::HypothesisNotMet, "sandwich assumes the GLS estimator");
  if (!check_superconvexity(spec)) fail(ErrorKind::HypothesisNotMet, "privacy costs are not superconvex");
  const Scalar n = Scalar(spec.n());
  SandwichCheck<Scalar> check;
  check.advisory = spec.kind() != ScalarizationKind::Trace;
  check.factor = check.advisory ? std::cbrt(n) : std::sqrt(n);
  check.lower_margin = (optimum.lambdas() - nash.lambdas()).minCoeff();
  check.upper_margin = (check.factor * nash.lambdas() - optimum.lambdas()).minCoeff();
  check.lower_ok = check.lower_margin >= -Scalar(tolerance::sandwich);
  check.upper_ok = check.upper_margin >= -Scalar(tolerance::sandwich);
  return check;
}

/// Solves both problems and checks lambda* <= lambda_opt <= s lambda* coordinate-wise.
template <typename Scalar>
SandwichCheck<Scalar> sandwich_check(const GameSpec<Scalar>& spec, const SolverOptions& options = {}) {
  if (spec.has_perturbation()) fail(ErrorKind::HypothesisNotMet, "sandwich assumes the GLS estimator");
  if (!check_superconvexity(spec)) fail(ErrorKind::HypothesisNotMet, "privacy costs are not superconvex");
  const auto nash = solve_equilibrium(spec, options);
  const auto opt = solve_social_optimum(spec, options);
  return sandwich_check(spec, nash.profile, opt);
}

/// PoS = C(lambda*) / C(lambda_opt). Trivial equilibria have infinite social
/// cost, so the unique non-trivial equilibrium is the best one.
template <typename Scalar>
EfficiencyReport<Scalar> price_of_stability(const GameSpec<Scalar>& spec, const SolverOptions& options = {}) {
  EfficiencyReport<Scalar> report;
  report.nash = solve_equilibrium(spec, options);
  report.social_optimum = solve_social_optimum(spec, options);
  report.nash_social_cost = social_cost(spec, report.nash.profile).value;
  report.opt_cost = social_cost(spec, report.social_optimum).value;
  report.pos = report.nash_social_cost / report.opt_cost;
  const auto bound = pos_bound(spec);
  report.bound = bound.bound;
  report.bound_source = bound.source;
  report.bound_satisfied = report.pos <= report.bound + Scalar(tolerance::bound);
  if (!spec.has_perturbation()) {
    try {
      report.sandwich = sandwich_check(spec, report.nash.profile, report.social_optimum);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::HypothesisNotMet && e.kind() != ErrorKind::DerivativeDomainTooSmall) throw;
    }
  }
  return report;
}

}  // namespace lrgame
