#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "bml/dataset.hpp"
#include "bml/error.hpp"
#include "bml/theta.hpp"

namespace bml {

/// Cross-product sums of a pair sample. Everything the likelihood needs is a
/// function of these and the pair count:
///
///   A = X1'X1 + X2'X2     B = X1'X2 + X2'X1
///   c = X1'y1 + X2'y2     d = X1'y2 + X2'y1
///   syy = y1'y1 + y2'y2   scross = y1'y2
///
/// For a single predictor these are the six scalar statistics alpha1..alpha6
/// with alpha1 = A, alpha2 = syy, alpha3 = c, alpha4 = d, alpha5 = B / 2 and
/// alpha6 = scross.
struct SufficientStats {
  Matrix A;
  Matrix B;
  Vector c;
  Vector d;
  double syy = 0.0;
  double scross = 0.0;
  std::size_t q = 0;

  std::size_t predictors() const noexcept { return static_cast<std::size_t>(c.size()); }

  double alpha1() const { return scalar_entry(A(0, 0)); }
  double alpha2() const { return syy; }
  double alpha3() const { return scalar_entry(c(0)); }
  double alpha4() const { return scalar_entry(d(0)); }
  double alpha5() const { return scalar_entry(B(0, 0)) / 2.0; }
  double alpha6() const { return scross; }

  /// Sum over pairs of e1^2 + e2^2 at slopes beta.
  double residual_square_sum(const Vector& beta) const {
    return syy - 2.0 * beta.dot(c) + beta.dot(A * beta);
  }

  /// Sum over pairs of e1 * e2 at slopes beta.
  double residual_cross_sum(const Vector& beta) const {
    return scross - beta.dot(d) + 0.5 * beta.dot(B * beta);
  }

 private:
  double scalar_entry(double v) const {
    if (predictors() != 1) {
      throw Error(ErrorCode::unsupported_dimension, "alpha statistics are defined for one predictor, have " +
                                                        std::to_string(predictors()));
    }
    return v;
  }
};

inline SufficientStats compute_stats(const PairSample& sample) {
  if (sample.pairs() == 0) throw Error(ErrorCode::empty_sample, "cannot summarize an empty pair sample");
  SufficientStats s;
  s.A = sample.X1.transpose() * sample.X1 + sample.X2.transpose() * sample.X2;
  const Matrix cross = sample.X1.transpose() * sample.X2;
  s.B = cross + cross.transpose();
  s.c = sample.X1.transpose() * sample.y1 + sample.X2.transpose() * sample.y2;
  s.d = sample.X1.transpose() * sample.y2 + sample.X2.transpose() * sample.y1;
  s.syy = sample.y1.squaredNorm() + sample.y2.squaredNorm();
  s.scross = sample.y1.dot(sample.y2);
  s.q = sample.pairs();
  return s;
}

struct ResidualMoments {
  double first_squares = 0.0;   // sum e1^2
  double second_squares = 0.0;  // sum e2^2
  double cross = 0.0;           // sum e1 * e2
};

inline ResidualMoments residual_cross_moments(const PairSample& sample, const Vector& beta) {
  if (static_cast<std::size_t>(beta.size()) != sample.predictors()) {
    throw Error(ErrorCode::invalid_dimension, "beta has " + std::to_string(beta.size()) + " entries for " +
                                                  std::to_string(sample.predictors()) + " predictors");
  }
  const Vector e1 = sample.y1 - sample.X1 * beta;
  const Vector e2 = sample.y2 - sample.X2 * beta;
  return {e1.squaredNorm(), e2.squaredNorm(), e1.dot(e2)};
}

namespace detail {

inline double log_likelihood_from_moments(double q, double sigma2, double psi, double squares, double cross) {
  const double one_minus = 1.0 - psi * psi;
  return -q * std::log(2.0 * std::numbers::pi) - q * std::log(sigma2) - 0.5 * q * std::log(one_minus) -
         (squares - 2.0 * psi * cross) / (2.0 * sigma2 * one_minus);
}

}  // namespace detail

/// Pairwise log-likelihood of the coded sample, evaluated from residuals.
inline double log_likelihood(const Theta& theta, const PairSample& sample) {
  theta.validate();
  const auto m = residual_cross_moments(sample, theta.beta);
  return detail::log_likelihood_from_moments(static_cast<double>(sample.pairs()), theta.sigma2, theta.psi,
                                             m.first_squares + m.second_squares, m.cross);
}

/// Same quantity evaluated from the sufficient statistics.
inline double log_likelihood(const Theta& theta, const SufficientStats& stats) {
  theta.validate();
  return detail::log_likelihood_from_moments(static_cast<double>(stats.q), theta.sigma2, theta.psi,
                                             stats.residual_square_sum(theta.beta),
                                             stats.residual_cross_sum(theta.beta));
}

/// Gradient of the log-likelihood, ordered (beta_1..beta_k, sigma2, psi).
inline Vector score(const Theta& theta, const SufficientStats& stats) {
  theta.validate();
  const auto k = static_cast<Eigen::Index>(stats.predictors());
  const double q = static_cast<double>(stats.q);
  const double s2 = theta.sigma2;
  const double psi = theta.psi;
  const double D = 1.0 - psi * psi;
  const double S = stats.residual_square_sum(theta.beta);
  const double C = stats.residual_cross_sum(theta.beta);

  Vector g(k + 2);
  g.head(k) = (stats.c - stats.A * theta.beta - psi * (stats.d - stats.B * theta.beta)) / (s2 * D);
  g(k) = -q / s2 + (S - 2.0 * psi * C) / (2.0 * s2 * s2 * D);
  g(k + 1) = q * psi / D - (psi * S - C * (1.0 + psi * psi)) / (s2 * D * D);
  return g;
}

/// Score reduced to (|d/dbeta|, d/dsigma2, d/dpsi); for k = 1 the first entry
/// is the signed beta derivative.
inline std::array<double, 3> collapsed_score(const Theta& theta, const SufficientStats& stats) {
  const Vector g = score(theta, stats);
  const auto k = static_cast<Eigen::Index>(stats.predictors());
  const double beta_part = k == 1 ? g(0) : g.head(k).norm();
  return {beta_part, g(k), g(k + 1)};
}

/// Negated matrix of second derivatives of the log-likelihood, ordered like
/// score(). Positive definite near the maximum.
inline Matrix hessian(const Theta& theta, const SufficientStats& stats) {
  theta.validate();
  const auto k = static_cast<Eigen::Index>(stats.predictors());
  const double q = static_cast<double>(stats.q);
  const double s2 = theta.sigma2;
  const double s4 = s2 * s2;
  const double psi = theta.psi;
  const double D = 1.0 - psi * psi;
  const double S = stats.residual_square_sum(theta.beta);
  const double C = stats.residual_cross_sum(theta.beta);
  const double Q = S - 2.0 * psi * C;
  const double N = psi * S - C * (1.0 + psi * psi);
  const Vector g = stats.c - stats.A * theta.beta - psi * (stats.d - stats.B * theta.beta);
  const Vector h = stats.d - stats.B * theta.beta;

  Matrix second(k + 2, k + 2);
  second.topLeftCorner(k, k) = -(stats.A - psi * stats.B) / (s2 * D);
  second.col(k).head(k) = -g / (s4 * D);
  second.col(k + 1).head(k) = (2.0 * psi * g - D * h) / (s2 * D * D);
  second(k, k) = q / s4 - Q / (s4 * s2 * D);
  second(k, k + 1) = N / (s4 * D * D);
  second(k + 1, k + 1) = q * (1.0 + psi * psi) / (D * D) - (Q * D + 4.0 * psi * N) / (s2 * D * D * D);
  second.row(k).head(k) = second.col(k).head(k).transpose();
  second.row(k + 1).head(k) = second.col(k + 1).head(k).transpose();
  second(k + 1, k) = second(k, k + 1);
  return -second;
}

}  // namespace bml
