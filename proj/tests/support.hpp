#pragma once

// Shared fixtures and independent oracles for the test suites.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "lrgame/lrgame.hpp"

namespace lrgame::testing {

using Mat = MatrixX<double>;
using Vec = VectorX<double>;

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline Mat mat(std::initializer_list<std::initializer_list<double>> rows) {
  const Index r = static_cast<Index>(rows.size());
  const Index c = static_cast<Index>(rows.begin()->size());
  Mat out(r, c);
  Index i = 0;
  for (const auto& row : rows) {
    Index j = 0;
    for (double x : row) out(i, j++) = x;
    ++i;
  }
  return out;
}

inline ActionProfile<double> profile(std::initializer_list<double> v) { return ActionProfile<double>(vec(v)); }

/// X = [[1],[1]], sigma^2 = 1.
inline RegressionInstance<double> two_player_instance() { return RegressionInstance<double>(mat({{1}, {1}}), 1.0); }

inline RegressionInstance<double> identity_instance() {
  return RegressionInstance<double>(Mat::Identity(2, 2), 1.0, vec({1.0, 2.0}));
}

/// Instance B: two identical players, c(lambda) = lambda^k, trace scalarization.
inline GameSpec<double> instance_b(double k = 2.0, ScalarizationKind kind = ScalarizationKind::Trace) {
  return GameSpec<double>::monomial(two_player_instance(), 1.0, k, kind);
}

inline EstimatorSpec<double> half_split_estimator(double delta = 0.5, double a = 1.0) {
  return EstimatorSpec<double>(two_player_instance(), mat({{delta}, {-delta}}), a);
}

/// Random game with monomial costs; coefficients drawn per player.
inline GameSpec<double> random_monomial_game(std::uint64_t seed, Index n, Index d, double k,
                                             ScalarizationKind kind = ScalarizationKind::Trace) {
  auto instance = random_instance<double>(n, d, FeatureDistribution::Gaussian, seed);
  std::mt19937_64 rng(derive_seed(seed, 1000));
  std::uniform_real_distribution<double> coef(0.2, 3.0);
  std::vector<PrivacyCost<double>> costs;
  for (Index i = 0; i < n; ++i) costs.push_back(PrivacyCost<double>::monomial(coef(rng), k));
  return GameSpec<double>(std::move(instance), std::move(costs), kind);
}

/// Random game with mixed strictly convex costs: monomials with k in [1.5, 4]
/// and c(x) = c (exp(x) - 1 - x) style customs.
inline GameSpec<double> random_convex_game(std::uint64_t seed, Index n, Index d) {
  auto instance = random_instance<double>(n, d, FeatureDistribution::Gaussian, seed);
  std::mt19937_64 rng(derive_seed(seed, 2000));
  std::uniform_real_distribution<double> coef(0.2, 3.0);
  std::uniform_real_distribution<double> expo(1.5, 4.0);
  std::vector<PrivacyCost<double>> costs;
  for (Index i = 0; i < n; ++i) {
    const double c = coef(rng);
    if (i % 3 == 2) {
      costs.push_back(PrivacyCost<double>::custom([c](double x) { return c * (std::exp(x) - 1.0 - x); },
                                                  [c](double x) { return c * (std::exp(x) - 1.0); },
                                                  [c](double x) { return c * std::exp(x); }, instance.cap()));
    } else {
      costs.push_back(PrivacyCost<double>::monomial(c, expo(rng)));
    }
  }
  return GameSpec<double>(std::move(instance), std::move(costs), ScalarizationKind::Trace);
}

inline Vec random_interior_profile(std::uint64_t seed, Index n, double cap) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v(i) = cap * u(rng);
  return v;
}

/// Oracle: best improvement any single player can get by moving to one of
/// `points` evenly spaced actions in [0, cap]. Independent of the solvers.
inline double best_unilateral_improvement(const GameSpec<double>& spec, const ActionProfile<double>& eq,
                                          int points = 1000) {
  double best = 0.0;
  for (Index i = 0; i < spec.n(); ++i) {
    const double current = player_cost(spec, i, eq).value;
    for (int j = 0; j < points; ++j) {
      const double x = spec.cap() * double(j) / double(points - 1);
      const auto dev = player_cost(spec, i, eq.with(i, x));
      if (dev.finite) best = std::max(best, current - dev.value);
    }
  }
  return best;
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline double min_eigenvalue(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

}  // namespace lrgame::testing
