#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "bml/error.hpp"

namespace bml {

using Vector = Eigen::VectorXd;

/// Model parameters: regression slopes, error variance, and the error
/// correlation between the two members of a coded pair.
struct Theta {
  Vector beta;
  double sigma2 = 1.0;
  double psi = 0.0;

  std::size_t predictors() const noexcept { return static_cast<std::size_t>(beta.size()); }

  bool valid() const noexcept {
    return std::isfinite(sigma2) && sigma2 > 0.0 && std::isfinite(psi) && std::abs(psi) < 1.0 &&
           beta.allFinite();
  }

  void validate() const {
    if (!(std::isfinite(sigma2) && sigma2 > 0.0)) {
      throw Error(ErrorCode::invalid_parameter, "sigma2 must be positive, got " + std::to_string(sigma2));
    }
    if (!(std::isfinite(psi) && std::abs(psi) < 1.0)) {
      throw Error(ErrorCode::invalid_parameter, "psi must lie in (-1, 1), got " + std::to_string(psi));
    }
    if (!beta.allFinite()) throw Error(ErrorCode::invalid_parameter, "beta has non-finite entries");
  }

  static Theta scalar(double beta, double sigma2, double psi) {
    Theta t{Vector::Constant(1, beta), sigma2, psi};
    t.validate();
    return t;
  }
};

}  // namespace bml
