#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lrgame {

enum class ErrorKind {
  DimensionMismatch,
  InvalidArgument,
  RankDeficient,
  Degenerate,
  InvalidEstimator,
  ZeroWeightWithPerturbation,
  NullSpaceEmpty,
  MissingTrueModel,
  InfiniteCost,
  StencilLeavesDomain,
  IndexOutOfRange,
  AllInfinite,
  NotConverged,
  InfiniteStart,
  InfinitePotential,
  NotInvertible,
  HypothesisNotMet,
  DerivativeDomainTooSmall,
  UnsupportedScalarization,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::InvalidEstimator: return "InvalidEstimator";
    case ErrorKind::ZeroWeightWithPerturbation: return "ZeroWeightWithPerturbation";
    case ErrorKind::NullSpaceEmpty: return "NullSpaceEmpty";
    case ErrorKind::MissingTrueModel: return "MissingTrueModel";
    case ErrorKind::InfiniteCost: return "InfiniteCost";
    case ErrorKind::StencilLeavesDomain: return "StencilLeavesDomain";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::AllInfinite: return "AllInfinite";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::InfiniteStart: return "InfiniteStart";
    case ErrorKind::InfinitePotential: return "InfinitePotential";
    case ErrorKind::NotInvertible: return "NotInvertible";
    case ErrorKind::HypothesisNotMet: return "HypothesisNotMet";
    case ErrorKind::DerivativeDomainTooSmall: return "DerivativeDomainTooSmall";
    case ErrorKind::UnsupportedScalarization: return "UnsupportedScalarization";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above so
/// callers (the harness in particular) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace lrgame
