#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "lrgame/error.hpp"
#include "lrgame/estimation.hpp"
#include "lrgame/rng.hpp"

namespace lrgame {

enum class FeatureDistribution { Gaussian, UniformSphere };

constexpr std::string_view to_string(FeatureDistribution dist) {
  return dist == FeatureDistribution::Gaussian ? "gaussian" : "uniform_sphere";
}

/// Random full-rank design. Rows are standard normal; they are scaled to unit
/// norm for UniformSphere, and also for Gaussian when `normalize` is set.
/// The true model is standard normal.
template <typename Scalar = double>
RegressionInstance<Scalar> random_instance(Index n, Index d, FeatureDistribution dist, std::uint64_t seed,
                                           Scalar inherent_variance = Scalar(1), bool normalize = true) {
  if (d < 1 || n < d) fail(ErrorKind::DimensionMismatch, "need n >= d >= 1");
  for (std::uint64_t attempt = 0; attempt < 16; ++attempt) {
    std::mt19937_64 rng(derive_seed(seed, attempt));
    std::normal_distribution<double> normal(0.0, 1.0);
    MatrixX<Scalar> X(n, d);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < d; ++j) X(i, j) = Scalar(normal(rng));
      if (dist == FeatureDistribution::UniformSphere || normalize) {
        const Scalar norm = X.row(i).norm();
        if (norm > Scalar(0)) X.row(i) /= norm;
      }
    }
    VectorX<Scalar> beta(d);
    for (Index j = 0; j < d; ++j) beta(j) = Scalar(normal(rng));
    try {
      return RegressionInstance<Scalar>(std::move(X), inherent_variance, std::move(beta));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RankDeficient) throw;
    }
  }
  fail(ErrorKind::RankDeficient, "could not draw a full-rank design");
}

}  // namespace lrgame
