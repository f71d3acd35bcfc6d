#pragma once

// Equilibria under a fixed linear unbiased estimator and the comparison with
// GLS at the respective equilibria, plus the sweep over the scaling a of D.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "lrgame/error.hpp"
#include "lrgame/game.hpp"

namespace lrgame {

template <typename Scalar = double>
struct AitkenComparison {
  EquilibriumResult<Scalar> gls_equilibrium;
  EquilibriumResult<Scalar> lue_equilibrium;
  Scalar gls_cost{};
  Scalar lue_cost{};
  bool holds = false;
  Scalar margin{};  // lue_cost - gls_cost
};

template <typename Scalar = double>
struct ScalingSweep {
  std::vector<Scalar> grid;
  std::vector<Scalar> costs;
  std::vector<VectorX<Scalar>> profiles;
  bool monotone = false;
  Scalar max_violation{};          // largest drop in cost between consecutive grid points
  bool profiles_monotone = false;  // every lambda*_i(a) non-decreasing
  Scalar max_profile_violation{};
};

namespace tolerance {
inline constexpr double aitken = 1e-9;
inline constexpr double sweep = 1e-8;
}  // namespace tolerance

namespace detail {

template <typename Scalar>
void require_trace(const GameSpec<Scalar>& spec) {
  if (spec.kind() != ScalarizationKind::Trace) {
    fail(ErrorKind::UnsupportedScalarization, "estimator comparisons use the trace scalarization");
  }
}

}  // namespace detail

template <typename Scalar>
EquilibriumResult<Scalar> equilibrium_under_estimator(const GameSpec<Scalar>& spec,
                                                      const EstimatorSpec<Scalar>& estimator,
                                                      const SolverOptions& options = {}) {
  detail::require_trace(spec);
  return solve_equilibrium(spec.with_estimator(estimator), options);
}

template <typename Scalar>
AitkenComparison<Scalar> aitken_compare(const GameSpec<Scalar>& spec, const EstimatorSpec<Scalar>& estimator,
                                        const SolverOptions& options = {}) {
  detail::require_trace(spec);
  AitkenComparison<Scalar> out;
  out.gls_equilibrium = solve_equilibrium(spec.with_estimator(std::nullopt), options);
  out.lue_equilibrium = equilibrium_under_estimator(spec, estimator, options);
  out.gls_cost = out.gls_equilibrium.estimation_cost;
  out.lue_cost = out.lue_equilibrium.estimation_cost;
  out.margin = out.lue_cost - out.gls_cost;
  out.holds = out.margin >= -Scalar(tolerance::aitken);
  return out;
}

/// Equilibrium estimation cost f(lambda*(a)) on the uniform grid a = 0, ..., 1.
template <typename Scalar>
ScalingSweep<Scalar> scaling_sweep(const GameSpec<Scalar>& spec, const MatrixX<Scalar>& null_matrix,
                                   int grid_size, const SolverOptions& options = {}) {
  detail::require_trace(spec);
  if (grid_size < 3) fail(ErrorKind::InvalidArgument, "grid_size must be >= 3");
  ScalingSweep<Scalar> sweep;
  for (int j = 0; j < grid_size; ++j) {
    const Scalar a = j == grid_size - 1 ? Scalar(1) : Scalar(j) / Scalar(grid_size - 1);
    const EstimatorSpec<Scalar> estimator(spec.instance(), null_matrix, a);
    const auto eq = equilibrium_under_estimator(spec, estimator, options);
    sweep.grid.push_back(a);
    sweep.costs.push_back(eq.estimation_cost);
    sweep.profiles.push_back(eq.profile.lambdas());
  }
  for (std::size_t j = 1; j < sweep.grid.size(); ++j) {
    sweep.max_violation = std::max(sweep.max_violation, sweep.costs[j - 1] - sweep.costs[j]);
    sweep.max_profile_violation =
        std::max(sweep.max_profile_violation, (sweep.profiles[j - 1] - sweep.profiles[j]).maxCoeff());
  }
  sweep.monotone = sweep.max_violation <= Scalar(tolerance::sweep);
  sweep.profiles_monotone = sweep.max_profile_violation <= Scalar(tolerance::sweep);
  return sweep;
}

}  // namespace lrgame
