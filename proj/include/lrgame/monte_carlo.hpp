#pragma once

// Simulation of the reporting pipeline: each player reports
// y~_i = beta^T x_i + eps_i + z_i with Var(eps_i) = sigma^2 and
// Var(z_i) = 1/lambda_i - sigma^2, and the analyst applies a linear estimator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <optional>
#include <random>
#include <string_view>
#include <type_traits>
#include <vector>

#include "lrgame/error.hpp"
#include "lrgame/estimation.hpp"
#include "lrgame/rng.hpp"

namespace lrgame {

enum class NoiseKind { Gaussian, Uniform, Rademacher };

constexpr std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::Gaussian: return "gaussian";
    case NoiseKind::Uniform: return "uniform";
    case NoiseKind::Rademacher: return "rademacher";
  }
  return "gaussian";
}

template <typename Scalar = double>
struct MonteCarloReport {
  VectorX<Scalar> empirical_mean;
  MatrixX<Scalar> empirical_covariance;
  MatrixX<Scalar> theoretical_covariance;
  Scalar mean_deviation{};        // max |mean - beta|
  Scalar covariance_deviation{};  // max |empirical - theoretical|
  std::int64_t trials{};
};

namespace detail {

/// Zero-mean draw with the given standard deviation.
template <typename Scalar>
Scalar draw_noise(NoiseKind kind, Scalar stddev, std::mt19937_64& rng) {
  if (stddev == Scalar(0)) return Scalar(0);
  switch (kind) {
    case NoiseKind::Gaussian: {
      std::normal_distribution<double> dist(0.0, 1.0);
      return stddev * Scalar(dist(rng));
    }
    case NoiseKind::Uniform: {
      // U(-sqrt(3), sqrt(3)) has unit variance.
      std::uniform_real_distribution<double> dist(-std::sqrt(3.0), std::sqrt(3.0));
      return stddev * Scalar(dist(rng));
    }
    case NoiseKind::Rademacher: {
      return (rng() & 1U) ? stddev : -stddev;
    }
  }
  return Scalar(0);
}

template <typename Scalar>
struct MomentSums {
  VectorX<Scalar> first;
  MatrixX<Scalar> second;
};

inline constexpr std::int64_t kMonteCarloPartitions = 16;

}  // namespace detail

/// Runs `trials` independent reporting rounds. Work is split into a fixed number
/// of partitions whose RNG streams derive from (seed, partition), so the result
/// does not depend on how many threads execute them.
template <typename Scalar>
MonteCarloReport<Scalar> monte_carlo_validate(const RegressionInstance<Scalar>& instance,
                                              const ActionProfile<Scalar>& profile,
                                              const std::optional<EstimatorSpec<std::type_identity_t<Scalar>>>& estimator,
                                              NoiseKind noise, std::int64_t trials, std::uint64_t seed) {
  if (!instance.true_model()) fail(ErrorKind::MissingTrueModel, "Monte Carlo needs a true model");
  if (trials < 1) fail(ErrorKind::InvalidArgument, "trials must be >= 1");
  require_in_box(instance, profile);

  const Index n = instance.n();
  const Index d = instance.d();
  const auto& X = instance.features();
  const VectorX<Scalar>& beta = *instance.true_model();
  const EstimatorSpec<Scalar> est = estimator ? *estimator : EstimatorSpec<Scalar>::gls(instance);

  MatrixX<Scalar> theoretical = lue_covariance(instance, profile, est);

  // L = A^{-1} X^T Lambda + a D^T, formed once.
  const auto llt = detail::factor_or_throw(precision_matrix(instance, profile));
  MatrixX<Scalar> L = llt.solve(X.transpose() * profile.lambdas().asDiagonal());
  L += est.scaling() * est.null_matrix().transpose();

  const VectorX<Scalar> signal = X * beta;
  const Scalar inherent_sd = std::sqrt(instance.inherent_variance());
  VectorX<Scalar> added_sd(n);
  for (Index i = 0; i < n; ++i) {
    added_sd(i) = profile[i] > Scalar(0)
                      ? std::sqrt(std::max(Scalar(0), Scalar(1) / profile[i] - instance.inherent_variance()))
                      : Scalar(0);
  }

  const std::int64_t parts = std::min<std::int64_t>(detail::kMonteCarloPartitions, trials);
  auto run_part = [&](std::int64_t part) {
    const std::int64_t begin = trials * part / parts;
    const std::int64_t end = trials * (part + 1) / parts;
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(part)));
    detail::MomentSums<Scalar> sums{VectorX<Scalar>::Zero(d), MatrixX<Scalar>::Zero(d, d)};
    VectorX<Scalar> reports(n);
    for (std::int64_t t = begin; t < end; ++t) {
      for (Index i = 0; i < n; ++i) {
        if (profile[i] == Scalar(0)) {
          // Zero-weight report; any finite value leaves the estimate unchanged.
          reports(i) = signal(i);
          continue;
        }
        reports(i) = signal(i) + detail::draw_noise(noise, inherent_sd, rng) + detail::draw_noise(noise, added_sd(i), rng);
      }
      const VectorX<Scalar> err = L * reports - beta;
      sums.first += err;
      sums.second.noalias() += err * err.transpose();
    }
    return sums;
  };

  std::vector<std::future<detail::MomentSums<Scalar>>> futures;
  futures.reserve(static_cast<std::size_t>(parts));
  for (std::int64_t p = 0; p < parts; ++p) futures.push_back(std::async(std::launch::async, run_part, p));

  VectorX<Scalar> first = VectorX<Scalar>::Zero(d);
  MatrixX<Scalar> second = MatrixX<Scalar>::Zero(d, d);
  for (auto& f : futures) {
    auto s = f.get();
    first += s.first;
    second += s.second;
  }

  const Scalar T = Scalar(trials);
  const VectorX<Scalar> mean_err = first / T;
  MatrixX<Scalar> cov = MatrixX<Scalar>::Zero(d, d);
  if (trials > 1) cov = (second - T * mean_err * mean_err.transpose()) / (T - Scalar(1));

  MonteCarloReport<Scalar> report;
  report.empirical_mean = beta + mean_err;
  report.empirical_covariance = cov;
  report.theoretical_covariance = theoretical;
  report.mean_deviation = mean_err.cwiseAbs().maxCoeff();
  report.covariance_deviation = (cov - theoretical).cwiseAbs().maxCoeff();
  report.trials = trials;
  return report;
}

}  // namespace lrgame
