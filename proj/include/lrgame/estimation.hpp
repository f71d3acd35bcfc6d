#pragma once

// Linear model, GLS and perturbed linear unbiased estimators.
//
// Reports follow y~_i = beta^T x_i + eps_i + z_i with Var(eps_i + z_i) = 1/lambda_i.
// The analyst weights report i by lambda_i, so lambda_i = 0 means the report
// carries no information and lambda_i = 1/sigma^2 means no added noise.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>

#include "lrgame/error.hpp"

namespace lrgame {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

namespace tolerance {
// Smallest singular value of X relative to the largest.
inline constexpr double rank = 1e-10;
// A(lambda) is singular when its smallest eigenvalue <= singular * (1 + largest).
inline constexpr double singular = 1e-12;
// Max |entry| of D^T X for D to define an unbiased estimator.
inline constexpr double unbiased = 1e-10;
}  // namespace tolerance

template <typename Scalar = double>
class RegressionInstance {
 public:
  RegressionInstance(MatrixX<Scalar> features, Scalar inherent_variance,
                     std::optional<VectorX<Scalar>> true_model = std::nullopt)
      : features_(std::move(features)),
        inherent_variance_(inherent_variance),
        true_model_(std::move(true_model)) {
    const Index n = features_.rows();
    const Index d = features_.cols();
    if (d < 1 || n < d) {
      fail(ErrorKind::DimensionMismatch,
           "need n >= d >= 1, got n=" + std::to_string(n) + " d=" + std::to_string(d));
    }
    if (!features_.allFinite()) fail(ErrorKind::InvalidArgument, "features must be finite");
    if (!(inherent_variance_ > Scalar(0)) || !std::isfinite(inherent_variance_)) {
      fail(ErrorKind::InvalidArgument, "inherent variance must be positive and finite");
    }
    if (true_model_ && true_model_->size() != d) {
      fail(ErrorKind::DimensionMismatch, "true model must have d entries");
    }
    Eigen::JacobiSVD<MatrixX<Scalar>> svd(features_);
    const auto& s = svd.singularValues();
    if (!(s(d - 1) > Scalar(tolerance::rank) * s(0))) {
      fail(ErrorKind::RankDeficient, "feature matrix does not have full column rank");
    }
  }

  const MatrixX<Scalar>& features() const { return features_; }
  auto feature(Index i) const { return features_.row(i).transpose(); }
  Index n() const { return features_.rows(); }
  Index d() const { return features_.cols(); }
  Scalar inherent_variance() const { return inherent_variance_; }
  /// Upper end of every player's action interval, 1/sigma^2.
  Scalar cap() const { return Scalar(1) / inherent_variance_; }
  const std::optional<VectorX<Scalar>>& true_model() const { return true_model_; }

 private:
  MatrixX<Scalar> features_;
  Scalar inherent_variance_;
  std::optional<VectorX<Scalar>> true_model_;
};

/// Strategy profile: lambda_i is the inverse of player i's aggregate report variance.
template <typename Scalar = double>
class ActionProfile {
 public:
  explicit ActionProfile(VectorX<Scalar> lambdas) : lambdas_(std::move(lambdas)) {
    for (Index i = 0; i < lambdas_.size(); ++i) {
      if (!(lambdas_(i) >= Scalar(0)) || !std::isfinite(lambdas_(i))) {
        fail(ErrorKind::InvalidArgument, "profile entries must be finite and non-negative");
      }
    }
  }

  static ActionProfile at_cap(const RegressionInstance<Scalar>& instance) {
    return ActionProfile(VectorX<Scalar>::Constant(instance.n(), instance.cap()));
  }

  const VectorX<Scalar>& lambdas() const { return lambdas_; }
  Scalar operator[](Index i) const { return lambdas_(i); }
  Index size() const { return lambdas_.size(); }

  bool within_box(Scalar cap) const {
    return (lambdas_.array() >= Scalar(0)).all() && (lambdas_.array() <= cap).all();
  }

  ActionProfile with(Index i, Scalar value) const {
    VectorX<Scalar> next = lambdas_;
    next(i) = value;
    return ActionProfile(std::move(next));
  }

 private:
  VectorX<Scalar> lambdas_;
};

template <typename Scalar>
void require_dimension(const RegressionInstance<Scalar>& instance, const ActionProfile<Scalar>& profile) {
  if (profile.size() != instance.n()) {
    fail(ErrorKind::DimensionMismatch, "profile has " + std::to_string(profile.size()) +
                                           " entries, instance has n=" + std::to_string(instance.n()));
  }
}

/// Checks dimension and the box [0, 1/sigma^2]^n.
template <typename Scalar>
void require_in_box(const RegressionInstance<Scalar>& instance, const ActionProfile<Scalar>& profile) {
  require_dimension(instance, profile);
  if (!profile.within_box(instance.cap())) {
    fail(ErrorKind::InvalidArgument, "profile leaves the box [0, 1/sigma^2]");
  }
}

/// L = (X^T Lambda X)^{-1} X^T Lambda + a D^T with D^T X = 0 and D fixed in lambda.
template <typename Scalar = double>
class EstimatorSpec {
 public:
  EstimatorSpec(const RegressionInstance<Scalar>& instance, MatrixX<Scalar> null_matrix, Scalar scaling)
      : null_matrix_(std::move(null_matrix)), scaling_(scaling) {
    if (null_matrix_.rows() != instance.n() || null_matrix_.cols() != instance.d()) {
      fail(ErrorKind::DimensionMismatch, "null matrix must be n x d");
    }
    if (!(scaling_ >= Scalar(0) && scaling_ <= Scalar(1))) {
      fail(ErrorKind::InvalidEstimator, "scaling must lie in [0, 1]");
    }
    if (!null_matrix_.allFinite()) fail(ErrorKind::InvalidEstimator, "null matrix must be finite");
    const Scalar bias = (null_matrix_.transpose() * instance.features()).cwiseAbs().maxCoeff();
    if (bias > Scalar(tolerance::unbiased)) {
      fail(ErrorKind::InvalidEstimator, "D^T X != 0, estimator would be biased");
    }
  }

  static EstimatorSpec gls(const RegressionInstance<Scalar>& instance) {
    return EstimatorSpec(instance, MatrixX<Scalar>::Zero(instance.n(), instance.d()), Scalar(0));
  }

  const MatrixX<Scalar>& null_matrix() const { return null_matrix_; }
  Scalar scaling() const { return scaling_; }
  /// a * D, the only combination that enters the covariance.
  MatrixX<Scalar> perturbation() const { return scaling_ * null_matrix_; }
  /// Squared norm of row i of a * D.
  Scalar row_weight(Index i) const { return scaling_ * scaling_ * null_matrix_.row(i).squaredNorm(); }
  bool is_gls() const { return scaling_ == Scalar(0) || null_matrix_.isZero(0); }

  EstimatorSpec with_scaling(Scalar a) const {
    EstimatorSpec copy = *this;
    if (!(a >= Scalar(0) && a <= Scalar(1))) fail(ErrorKind::InvalidEstimator, "scaling must lie in [0, 1]");
    copy.scaling_ = a;
    return copy;
  }

 private:
  MatrixX<Scalar> null_matrix_;
  Scalar scaling_;
};

/// A(lambda) = sum_i lambda_i x_i x_i^T.
template <typename Scalar>
MatrixX<Scalar> precision_matrix(const RegressionInstance<Scalar>& instance, const ActionProfile<Scalar>& profile) {
  require_dimension(instance, profile);
  const auto& X = instance.features();
  MatrixX<Scalar> A = X.transpose() * profile.lambdas().asDiagonal() * X;
  return Scalar(0.5) * (A + A.transpose());
}

template <typename Scalar>
bool is_degenerate_precision(const MatrixX<Scalar>& A) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(A, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  return !(ev(0) > Scalar(tolerance::singular) * (Scalar(1) + ev(ev.size() - 1)));
}

template <typename Scalar>
bool is_degenerate(const RegressionInstance<Scalar>& instance, const ActionProfile<Scalar>& profile) {
  return is_degenerate_precision(precision_matrix(instance, profile));
}

namespace detail {

template <typename Scalar>
Eigen::LLT<MatrixX<Scalar>> factor_or_throw(const MatrixX<Scalar>& A) {
  if (is_degenerate_precision(A)) fail(ErrorKind::Degenerate, "precision matrix is singular");
  Eigen::LLT<MatrixX<Scalar>> llt(A);
  if (llt.info() != Eigen::Success) fail(ErrorKind::Degenerate, "precision matrix is not positive definite");
  return llt;
}

template <typename Scalar>
MatrixX<Scalar> symmetrized(const MatrixX<Scalar>& M) {
  return Scalar(0.5) * (M + M.transpose());
}

template <typename Scalar>
void require_reports(const RegressionInstance<Scalar>& instance, const VectorX<Scalar>& reports) {
  if (reports.size() != instance.n()) fail(ErrorKind::DimensionMismatch, "reports must have n entries");
}

}  // namespace detail

/// V(lambda) = A(lambda)^{-1}.
template <typename Scalar>
MatrixX<Scalar> gls_covariance(const RegressionInstance<Scalar>& instance, const ActionProfile<Scalar>& profile) {
  const auto A = precision_matrix(instance, profile);
  const auto llt = detail::factor_or_throw(A);
  return detail::symmetrized<Scalar>(llt.solve(MatrixX<Scalar>::Identity(A.rows(), A.cols())));
}

template <typename Scalar>
VectorX<Scalar> gls_estimate(const RegressionInstance<Scalar>& instance, const ActionProfile<Scalar>& profile,
                             const VectorX<Scalar>& reports) {
  detail::require_reports(instance, reports);
  const auto llt = detail::factor_or_throw(precision_matrix(instance, profile));
  const auto& X = instance.features();
  VectorX<Scalar> rhs = X.transpose() * profile.lambdas().cwiseProduct(reports);
  return llt.solve(rhs);
}

template <typename Scalar>
VectorX<Scalar> lue_estimate(const RegressionInstance<Scalar>& instance, const ActionProfile<Scalar>& profile,
                             const EstimatorSpec<Scalar>& estimator, const VectorX<Scalar>& reports) {
  VectorX<Scalar> beta = gls_estimate(instance, profile, reports);
  beta.noalias() += estimator.scaling() * (estimator.null_matrix().transpose() * reports);
  return beta;
}

/// V(lambda) = A(lambda)^{-1} + a^2 D^T Lambda^{-1} D.
template <typename Scalar>
MatrixX<Scalar> lue_covariance(const RegressionInstance<Scalar>& instance, const ActionProfile<Scalar>& profile,
                               const EstimatorSpec<Scalar>& estimator) {
  MatrixX<Scalar> V = gls_covariance(instance, profile);
  if (estimator.is_gls()) return V;
  const MatrixX<Scalar> P = estimator.perturbation();
  for (Index i = 0; i < instance.n(); ++i) {
    if (P.row(i).isZero(0)) continue;
    if (profile[i] == Scalar(0)) {
      fail(ErrorKind::ZeroWeightWithPerturbation,
           "player " + std::to_string(i) + " has zero weight but a perturbed estimator row");
    }
    V.noalias() += (P.row(i).transpose() * P.row(i)) / profile[i];
  }
  return detail::symmetrized<Scalar>(V);
}

/// Random D with D^T X = 0 and ||D||_F = norm; deterministic in seed.
template <typename Scalar>
MatrixX<Scalar> random_null_direction(const RegressionInstance<Scalar>& instance, Scalar norm, std::uint64_t seed) {
  const Index n = instance.n();
  const Index d = instance.d();
  if (n == d) fail(ErrorKind::NullSpaceEmpty, "n == d leaves no room for an unbiased perturbation");
  if (!(norm >= Scalar(0))) fail(ErrorKind::InvalidArgument, "norm must be non-negative");
  if (norm == Scalar(0)) return MatrixX<Scalar>::Zero(n, d);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixX<Scalar> R(n, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < n; ++i) R(i, j) = Scalar(normal(rng));

  // Orthonormal basis of range(X); I - QQ^T projects onto null(X^T).
  Eigen::HouseholderQR<MatrixX<Scalar>> qr(instance.features());
  const MatrixX<Scalar> Q = qr.householderQ() * MatrixX<Scalar>::Identity(n, d);
  MatrixX<Scalar> D = R - Q * (Q.transpose() * R);
  D -= Q * (Q.transpose() * D);  // second pass removes round-off leakage
  const Scalar current = D.norm();
  if (!(current > Scalar(0))) fail(ErrorKind::NullSpaceEmpty, "projected direction vanished");
  D *= norm / current;
  return D;
}

}  // namespace lrgame
