#pragma once

// The noise-level game: player costs J_i = c_i(lambda_i) + f(lambda), the
// exact potential Phi = f + sum_i c_i, and two independent equilibrium solvers
// (projected descent on Phi, round-robin best responses).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lrgame/error.hpp"
#include "lrgame/estimation.hpp"
#include "lrgame/privacy_cost.hpp"
#include "lrgame/projected_descent.hpp"
#include "lrgame/scalarization.hpp"

namespace lrgame {

template <typename Scalar = double>
class GameSpec {
 public:
  GameSpec(RegressionInstance<Scalar> instance, std::vector<PrivacyCost<Scalar>> costs, ScalarizationKind kind,
           std::optional<EstimatorSpec<Scalar>> estimator = std::nullopt)
      : instance_(std::move(instance)), costs_(std::move(costs)), kind_(kind), estimator_(std::move(estimator)) {
    if (static_cast<Index>(costs_.size()) != instance_.n()) {
      fail(ErrorKind::DimensionMismatch, "need one privacy cost per player");
    }
    if (estimator_) {
      if (estimator_->null_matrix().rows() != instance_.n() || estimator_->null_matrix().cols() != instance_.d()) {
        fail(ErrorKind::DimensionMismatch, "estimator does not match the instance");
      }
      if (kind_ != ScalarizationKind::Trace && !estimator_->is_gls()) {
        fail(ErrorKind::UnsupportedScalarization, "perturbed estimators require the trace scalarization");
      }
    }
  }

  /// Same instance and costs with a uniform monomial c * lambda^k.
  static GameSpec monomial(RegressionInstance<Scalar> instance, Scalar coefficient, Scalar exponent,
                           ScalarizationKind kind) {
    std::vector<PrivacyCost<Scalar>> costs(static_cast<std::size_t>(instance.n()),
                                           PrivacyCost<Scalar>::monomial(coefficient, exponent));
    return GameSpec(std::move(instance), std::move(costs), kind);
  }

  const RegressionInstance<Scalar>& instance() const { return instance_; }
  const std::vector<PrivacyCost<Scalar>>& costs() const { return costs_; }
  const PrivacyCost<Scalar>& cost(Index i) const { return costs_[static_cast<std::size_t>(i)]; }
  ScalarizationKind kind() const { return kind_; }
  const std::optional<EstimatorSpec<Scalar>>& estimator() const { return estimator_; }
  const EstimatorSpec<Scalar>* estimator_ptr() const { return estimator_ ? &*estimator_ : nullptr; }
  bool has_perturbation() const { return estimator_ && !estimator_->is_gls(); }
  Index n() const { return instance_.n(); }
  Scalar cap() const { return instance_.cap(); }

  bool weakly_convex() const {
    return std::any_of(costs_.begin(), costs_.end(), [](const auto& c) { return c.weakly_convex(); });
  }

  GameSpec with_estimator(std::optional<EstimatorSpec<Scalar>> estimator) const {
    return GameSpec(instance_, costs_, kind_, std::move(estimator));
  }

 private:
  RegressionInstance<Scalar> instance_;
  std::vector<PrivacyCost<Scalar>> costs_;
  ScalarizationKind kind_;
  std::optional<EstimatorSpec<Scalar>> estimator_;
};

enum class EquilibriumStatus { NonTrivial, Trivial, NonUniqueFlagged };

constexpr std::string_view to_string(EquilibriumStatus s) {
  switch (s) {
    case EquilibriumStatus::NonTrivial: return "non_trivial";
    case EquilibriumStatus::Trivial: return "trivial";
    case EquilibriumStatus::NonUniqueFlagged: return "non_unique_flagged";
  }
  return "non_trivial";
}

/// Players at lambda = 0, strictly inside, and at lambda = 1/sigma^2.
struct ActiveSets {
  std::vector<Index> at_zero;
  std::vector<Index> interior;
  std::vector<Index> at_cap;
};

template <typename Scalar = double>
struct EquilibriumResult {
  ActionProfile<Scalar> profile{VectorX<Scalar>()};
  Scalar potential_value{};
  Scalar estimation_cost{};
  VectorX<Scalar> player_costs;
  Scalar kkt_residual{};
  std::int64_t iterations{};
  EquilibriumStatus status = EquilibriumStatus::NonTrivial;
  ActiveSets active_sets;
};

template <typename Scalar>
ActiveSets classify(const ActionProfile<Scalar>& profile, Scalar cap) {
  ActiveSets sets;
  for (Index i = 0; i < profile.size(); ++i) {
    if (profile[i] <= Scalar(0)) {
      sets.at_zero.push_back(i);
    } else if (profile[i] >= cap) {
      sets.at_cap.push_back(i);
    } else {
      sets.interior.push_back(i);
    }
  }
  return sets;
}

template <typename Scalar>
ExtendedCost<Scalar> estimation_cost(const GameSpec<Scalar>& spec, const ActionProfile<Scalar>& profile) {
  return detail::cost_impl<Scalar>(spec.instance(), profile, spec.kind(), spec.estimator_ptr());
}

template <typename Scalar>
VectorX<Scalar> estimation_cost_gradient(const GameSpec<Scalar>& spec, const ActionProfile<Scalar>& profile) {
  return detail::gradient_impl<Scalar>(spec.instance(), profile, spec.kind(), spec.estimator_ptr());
}

template <typename Scalar>
Scalar total_privacy_cost(const GameSpec<Scalar>& spec, const ActionProfile<Scalar>& profile) {
  Scalar total = 0;
  for (Index i = 0; i < spec.n(); ++i) total += spec.cost(i).value(profile[i]);
  return total;
}

template <typename Scalar>
ExtendedCost<Scalar> player_cost(const GameSpec<Scalar>& spec, Index i, const ActionProfile<Scalar>& profile) {
  if (i < 0 || i >= spec.n()) fail(ErrorKind::IndexOutOfRange, "player index " + std::to_string(i));
  require_in_box(spec.instance(), profile);
  return estimation_cost(spec, profile) + spec.cost(i).value(profile[i]);
}

/// Phi(lambda) = f(lambda) + sum_i c_i(lambda_i).
template <typename Scalar>
ExtendedCost<Scalar> potential(const GameSpec<Scalar>& spec, const ActionProfile<Scalar>& profile) {
  require_in_box(spec.instance(), profile);
  return estimation_cost(spec, profile) + total_privacy_cost(spec, profile);
}

namespace detail {

/// sum_i c_i + weight * f; weight 1 is the potential, weight n the social cost.
template <typename Scalar>
struct WeightedObjective {
  const GameSpec<Scalar>& spec;
  Scalar weight;

  ExtendedCost<Scalar> value(const VectorX<Scalar>& x) const {
    const ActionProfile<Scalar> p(x);
    const auto f = estimation_cost(spec, p);
    if (!f.finite) return f;
    return ExtendedCost<Scalar>::of(weight * f.value + total_privacy_cost(spec, p));
  }

  VectorX<Scalar> gradient(const VectorX<Scalar>& x) const {
    const ActionProfile<Scalar> p(x);
    VectorX<Scalar> g = weight * estimation_cost_gradient(spec, p);
    for (Index i = 0; i < spec.n(); ++i) g(i) += spec.cost(i).derivative(x(i));
    return g;
  }
};

template <typename Scalar>
Scalar weighted_kkt_residual(const GameSpec<Scalar>& spec, const ActionProfile<Scalar>& profile, Scalar weight) {
  require_in_box(spec.instance(), profile);
  if (!estimation_cost(spec, profile).finite) fail(ErrorKind::InfinitePotential, "KKT residual needs finite cost");
  const WeightedObjective<Scalar> objective{spec, weight};
  return projected_gradient_residual<Scalar>(profile.lambdas(), objective.gradient(profile.lambdas()), spec.cap());
}

/// dJ_i/dlambda_i at `profile`, or nullopt where f is infinite.
template <typename Scalar>
std::optional<Scalar> own_partial(const GameSpec<Scalar>& spec, Index i, const ActionProfile<Scalar>& profile) {
  const auto llt = try_factor(spec.instance(), profile, spec.estimator_ptr());
  if (!llt) return std::nullopt;
  const VectorX<Scalar> w = llt->solve(VectorX<Scalar>(spec.instance().feature(i)));
  Scalar partial;
  if (spec.kind() == ScalarizationKind::Trace) {
    partial = -w.squaredNorm();
    if (spec.has_perturbation()) {
      const Scalar rw = spec.estimator()->row_weight(i);
      if (rw > Scalar(0)) partial -= rw / (profile[i] * profile[i]);
    }
  } else {
    partial = Scalar(-2) * w.dot(llt->solve(w));
  }
  return partial + spec.cost(i).derivative(profile[i]);
}

template <typename Scalar>
EquilibriumResult<Scalar> summarize(const GameSpec<Scalar>& spec, const ActionProfile<Scalar>& profile,
                                    std::int64_t iterations) {
  EquilibriumResult<Scalar> result;
  result.profile = profile;
  result.iterations = iterations;
  result.active_sets = classify(profile, spec.cap());
  const auto f = estimation_cost(spec, profile);
  result.estimation_cost = f.value;
  result.potential_value = (f + total_privacy_cost(spec, profile)).value;
  result.player_costs.resize(spec.n());
  for (Index i = 0; i < spec.n(); ++i) result.player_costs(i) = (f + spec.cost(i).value(profile[i])).value;
  if (!f.finite) {
    result.status = EquilibriumStatus::Trivial;
    result.kkt_residual = std::numeric_limits<Scalar>::infinity();
    return result;
  }
  result.kkt_residual = weighted_kkt_residual(spec, profile, Scalar(1));
  result.status = spec.weakly_convex() ? EquilibriumStatus::NonUniqueFlagged : EquilibriumStatus::NonTrivial;
  return result;
}

}  // namespace detail

/// Projected-gradient residual of Phi; zero exactly at KKT points of the box problem.
template <typename Scalar>
Scalar kkt_residual(const GameSpec<Scalar>& spec, const ActionProfile<Scalar>& profile) {
  return detail::weighted_kkt_residual(spec, profile, Scalar(1));
}

/// Player i's cost-minimizing lambda_i given the others' actions in `profile`.
/// Bisection on dJ_i/dlambda_i, which is increasing because J_i is convex in lambda_i.
template <typename Scalar>
Scalar best_response(const GameSpec<Scalar>& spec, Index i, const ActionProfile<Scalar>& profile) {
  if (i < 0 || i >= spec.n()) fail(ErrorKind::IndexOutOfRange, "player index " + std::to_string(i));
  require_in_box(spec.instance(), profile);
  const Scalar cap = spec.cap();

  const auto at_cap = detail::own_partial(spec, i, profile.with(i, cap));
  if (!at_cap) fail(ErrorKind::AllInfinite, "player " + std::to_string(i) + " cannot make the cost finite");
  if (*at_cap <= Scalar(0)) return cap;
  const auto at_zero = detail::own_partial(spec, i, profile.with(i, Scalar(0)));
  if (at_zero && *at_zero >= Scalar(0)) return Scalar(0);

  Scalar lo = 0, hi = cap;
  while (hi - lo > Scalar(1e-12)) {
    const Scalar mid = Scalar(0.5) * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const auto g = detail::own_partial(spec, i, profile.with(i, mid));
    // Infinite cost only occurs on the low side of the finite domain.
    if (!g || *g < Scalar(0)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return Scalar(0.5) * (lo + hi);
}

struct BestResponseOptions {
  double tol = 1e-12;         // max profile change in a round
  double kkt_tol = 1e-8;
  std::int64_t max_rounds = 10000;
};

/// Round-robin best responses in fixed player order, starting from a finite-cost profile.
template <typename Scalar>
EquilibriumResult<Scalar> best_response_dynamics(const GameSpec<Scalar>& spec, const ActionProfile<Scalar>& start,
                                                 const BestResponseOptions& options = {}) {
  require_in_box(spec.instance(), start);
  if (!estimation_cost(spec, start).finite) fail(ErrorKind::InfiniteStart, "best responses need a finite start");
  VectorX<Scalar> lambdas = start.lambdas();
  for (std::int64_t round = 1; round <= options.max_rounds; ++round) {
    Scalar change = 0;
    for (Index i = 0; i < spec.n(); ++i) {
      const Scalar next = best_response(spec, i, ActionProfile<Scalar>(lambdas));
      change = std::max(change, std::abs(next - lambdas(i)));
      lambdas(i) = next;
    }
    if (change <= Scalar(options.tol)) {
      const ActionProfile<Scalar> profile(lambdas);
      if (kkt_residual(spec, profile) <= Scalar(options.kkt_tol)) return detail::summarize(spec, profile, round);
      if (change == Scalar(0)) break;
    }
  }
  fail(ErrorKind::NotConverged, "best-response dynamics did not converge");
}

struct SolverOptions {
  double tol = 1e-8;
  std::int64_t max_iter = 100000;
};

/// Unique non-trivial equilibrium as the minimizer of Phi over the box,
/// started from the all-cap profile (always inside the finite domain).
template <typename Scalar>
EquilibriumResult<Scalar> solve_equilibrium(const GameSpec<Scalar>& spec, const SolverOptions& options = {}) {
  DescentOptions descent;
  descent.tol = options.tol;
  descent.max_iter = options.max_iter;
  const detail::WeightedObjective<Scalar> objective{spec, Scalar(1)};
  const auto result =
      minimize_on_box<Scalar>(objective, ActionProfile<Scalar>::at_cap(spec.instance()).lambdas(), spec.cap(), descent);
  if (!result.converged) {
    fail(ErrorKind::NotConverged, "potential descent stopped at residual " +
                                      std::to_string(static_cast<double>(result.residual)));
  }
  return detail::summarize(spec, ActionProfile<Scalar>(result.point), result.iterations);
}

/// A profile with infinite estimation cost that no single player can make finite.
template <typename Scalar>
bool is_trivial_equilibrium(const GameSpec<Scalar>& spec, const ActionProfile<Scalar>& profile) {
  require_in_box(spec.instance(), profile);
  if (estimation_cost(spec, profile).finite) return false;
  for (Index i = 0; i < spec.n(); ++i) {
    if (estimation_cost(spec, profile.with(i, spec.cap())).finite) return false;
  }
  return true;
}

}  // namespace lrgame
