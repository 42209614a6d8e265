#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rsde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr const char* kVersion = "0.1.0";

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ErrorCode {
  DimensionMismatch,
  InvalidArgument,
  ProjectionOutOfRange,
  NotOnBoundary,
  NonFinite,
  JumpTooLarge,
  StartOutsideDomain,
  ParseError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ProjectionOutOfRange: return "ProjectionOutOfRange";
    case ErrorCode::NotOnBoundary: return "NotOnBoundary";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::JumpTooLarge: return "JumpTooLarge";
    case ErrorCode::StartOutsideDomain: return "StartOutsideDomain";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

inline void require_dim(const Vec& x, Eigen::Index d, const char* where) {
  if (x.size() != d) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(where) + ": expected dimension " + std::to_string(d) + ", got " +
                    std::to_string(x.size()));
  }
}

inline bool all_finite(const Vec& x) { return x.allFinite(); }

}  // namespace rsde
