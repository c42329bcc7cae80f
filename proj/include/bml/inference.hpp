#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bml/distributions.hpp"
#include "bml/error.hpp"
#include "bml/estimator.hpp"
#include "bml/likelihood.hpp"

namespace bml {

/// Expected information of (beta, sigma2, psi). The matrix is block diagonal:
/// a k x k block for beta and scalars for sigma2 and psi. Both the blocks and
/// their inverses are stored.
struct FisherInfo {
  Matrix beta_info;
  Matrix beta_inverse;
  double sigma2_info = 0.0;
  double sigma2_inverse = 0.0;
  double psi_info = 0.0;
  double psi_inverse = 0.0;

  /// Full (k+2) x (k+2) inverse with zero off-diagonal blocks.
  Matrix inverse() const {
    const auto k = beta_inverse.rows();
    Matrix out = Matrix::Zero(k + 2, k + 2);
    out.topLeftCorner(k, k) = beta_inverse;
    out(k, k) = sigma2_inverse;
    out(k + 1, k + 1) = psi_inverse;
    return out;
  }
};

/// Beta block:   I11^-1 = sigma2 (1 - psi^2) (A - psi B)^-1
/// sigma2 entry: I22^-1 = sigma2^3 (1 - psi^2) / (q sigma2 (1 + psi^2) - 2 psi C(beta))
/// psi entry:    I33^-1 = (1 - psi^2)^2 / (q (1 + psi^2))
/// C(beta) is the residual cross sum. At the estimate, psi C = q psi^2 sigma2
/// and the sigma2 entry collapses to sigma2^2 / q.
inline FisherInfo fisher_information(const Theta& theta, const SufficientStats& stats) {
  theta.validate();
  const auto k = static_cast<Eigen::Index>(stats.predictors());
  const double q = static_cast<double>(stats.q);
  const double s2 = theta.sigma2;
  const double psi = theta.psi;
  const double D = 1.0 - psi * psi;

  FisherInfo info;
  const Matrix weighted = stats.A - psi * stats.B;
  Eigen::LLT<Matrix> llt(weighted);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::rank_deficiency, "A - psi B is singular; beta information is not invertible");
  }
  info.beta_info = weighted / (s2 * D);
  info.beta_inverse = s2 * D * llt.solve(Matrix::Identity(k, k));

  const double sigma_denominator = q * s2 * (1.0 + psi * psi) - 2.0 * psi * stats.residual_cross_sum(theta.beta);
  info.sigma2_inverse = s2 * s2 * s2 * D / sigma_denominator;
  info.sigma2_info = 1.0 / info.sigma2_inverse;

  info.psi_info = q * (1.0 + psi * psi) / (D * D);
  info.psi_inverse = 1.0 / info.psi_info;
  return info;
}

struct WaldTest {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Wald test of psi = 0 using the expected information for psi.
inline WaldTest wald_test_psi(const EstimateReport& report, const FisherInfo& info) {
  WaldTest out;
  out.statistic = report.theta.psi * report.theta.psi / info.psi_inverse;
  out.p_value = chi_squared_upper_tail(out.statistic, 1.0);
  return out;
}

enum class StandardErrorMethod { expected, observed };

struct ParameterInterval {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// How beta-hat decomposes for a single predictor:
///   beta = (alpha3 - psi alpha4) / (alpha1 - 2 psi alpha5)
/// covariance (alpha3) plus the neighbor spillover term, over the predictor
/// variance (alpha1) plus its spatial autocovariance term.
struct SpilloverDecomposition {
  double covariance = 0.0;        // alpha3
  double spillover = 0.0;         // -psi alpha4
  double variance = 0.0;          // alpha1
  double autocovariance = 0.0;    // -2 psi alpha5

  double beta() const { return (covariance + spillover) / (variance + autocovariance); }
};

inline SpilloverDecomposition spillover_decomposition(const SufficientStats& stats, const Theta& theta) {
  if (stats.predictors() != 1) {
    throw Error(ErrorCode::unsupported_dimension, "spillover decomposition is defined for one predictor, have " +
                                                      std::to_string(stats.predictors()));
  }
  return {stats.alpha3(), -theta.psi * stats.alpha4(), stats.alpha1(), -2.0 * theta.psi * stats.alpha5()};
}

struct InferenceReport {
  double level = 0.95;
  StandardErrorMethod method = StandardErrorMethod::expected;
  std::vector<ParameterInterval> parameters;  // beta_1..beta_k, sigma2, psi
  WaldTest psi_test;
  std::optional<SpilloverDecomposition> spillover;
};

/// Standard errors, ordered (beta_1..beta_k, sigma2, psi). The observed
/// variant inverts the negated Hessian at the estimate.
inline Vector standard_errors(const EstimateReport& report, const SufficientStats& stats,
                              StandardErrorMethod method = StandardErrorMethod::expected) {
  if (method == StandardErrorMethod::expected) {
    return fisher_information(report.theta, stats).inverse().diagonal().cwiseSqrt();
  }
  const Matrix H = hessian(report.theta, stats);
  Eigen::LDLT<Matrix> ldlt(H);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw Error(ErrorCode::rank_deficiency, "observed information is not positive definite");
  }
  return ldlt.solve(Matrix::Identity(H.rows(), H.cols())).diagonal().cwiseSqrt();
}

/// Normal-approximation intervals estimate +/- z_{(1+level)/2} se.
inline InferenceReport confidence_intervals(const EstimateReport& report, const Vector& se, double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::invalid_parameter, "confidence level must lie in (0, 1), got " + std::to_string(level));
  }
  const auto k = report.theta.beta.size();
  if (se.size() != k + 2) throw Error(ErrorCode::invalid_dimension, "need k + 2 standard errors");
  const double z = normal_quantile(0.5 * (1.0 + level));

  InferenceReport out;
  out.level = level;
  auto add = [&](std::string name, double estimate, double s) {
    out.parameters.push_back({std::move(name), estimate, s, estimate - z * s, estimate + z * s});
  };
  for (Eigen::Index j = 0; j < k; ++j) add("beta" + std::to_string(j + 1), report.theta.beta(j), se(j));
  add("sigma2", report.theta.sigma2, se(k));
  add("psi", report.theta.psi, se(k + 1));
  return out;
}

inline InferenceReport confidence_intervals(const EstimateReport& report, const FisherInfo& info, double level) {
  InferenceReport out = confidence_intervals(report, Vector(info.inverse().diagonal().cwiseSqrt()), level);
  out.psi_test = wald_test_psi(report, info);
  return out;
}

/// Full inference bundle at the estimate: intervals, the Wald test on psi, and
/// the spillover decomposition when there is one predictor.
inline InferenceReport confidence_intervals(const EstimateReport& report, const SufficientStats& stats, double level,
                                            StandardErrorMethod method = StandardErrorMethod::expected) {
  const FisherInfo info = fisher_information(report.theta, stats);
  InferenceReport out = confidence_intervals(report, standard_errors(report, stats, method), level);
  out.method = method;
  out.psi_test = wald_test_psi(report, info);
  if (stats.predictors() == 1) out.spillover = spillover_decomposition(stats, report.theta);
  return out;
}

}  // namespace bml
