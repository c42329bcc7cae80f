#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "bml/coding.hpp"
#include "bml/dataset.hpp"
#include "bml/error.hpp"
#include "bml/likelihood.hpp"

namespace bml {

struct SolverOptions {
  /// Fixed-point stopping rule on max(|d beta|_inf, |d psi|).
  double tol = 1e-10;
  /// A fit is certified converged only if the score's max-norm is below this.
  double score_tol = 1e-8;
  std::size_t max_iter = 200;
  /// Newton steps on the full score after the fixed point settles.
  std::size_t polish_steps = 4;
  bool fix_psi_zero = false;
  /// psi is kept inside [-1 + margin, 1 - margin].
  double psi_margin = 1e-8;
  double sigma2_floor = 1e-12;
};

struct EstimateReport {
  Theta theta;
  double loglik = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double score_norm = 0.0;
  double coding_rate = 1.0;
  bool psi_at_bound = false;
};

namespace detail {

/// k + 2 pairs for the full model; with psi fixed only beta and sigma2 are
/// free, so 2q >= k + 1 observations suffice.
inline void check_pair_count(std::size_t q, std::size_t k, bool psi_fixed) {
  if (psi_fixed ? 2 * q < k + 1 : q < k + 2) {
    throw Error(ErrorCode::insufficient_pairs,
                std::string(psi_fixed ? "need 2q >= k + 1" : "need q >= k + 2") + " with k = " + std::to_string(k) +
                    ", have q = " + std::to_string(q));
  }
}

inline double clamp_psi(double psi, const SolverOptions& opt, bool& at_bound) {
  const double bound = 1.0 - opt.psi_margin;
  at_bound = std::abs(psi) >= bound;
  return std::clamp(psi, -bound, bound);
}

/// Damping rule shared by both solver paths: once successive psi updates
/// flip sign without shrinking by half, later updates are halved.
struct Damping {
  double factor = 1.0;
  double previous_step = 0.0;

  double apply(double step) {
    if (step * previous_step < 0.0 && std::abs(step) > 0.5 * std::abs(previous_step)) factor = 0.5;
    previous_step = step;
    return factor * step;
  }
};

inline double max_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

/// Max-norm of the score over the free parameters.
inline double free_score_norm(const Vector& g, bool psi_fixed) {
  return psi_fixed ? max_norm(g.head(g.size() - 1)) : max_norm(g);
}

inline void check_sigma2(double sigma2, const SolverOptions& opt) {
  if (!(sigma2 >= opt.sigma2_floor)) {
    throw Error(ErrorCode::degenerate_fit, "sigma2 estimate " + std::to_string(sigma2) + " below floor " +
                                               std::to_string(opt.sigma2_floor));
  }
}

/// Newton refinement on the score. Steps are kept only while they stay in the
/// parameter space and reduce the score norm.
inline void polish(Theta& theta, const SufficientStats& stats, const SolverOptions& opt, double& norm) {
  const auto k = static_cast<Eigen::Index>(stats.predictors());
  Vector g = score(theta, stats);
  norm = free_score_norm(g, opt.fix_psi_zero);
  for (std::size_t step = 0; step < opt.polish_steps && norm > 0.0; ++step) {
    Theta trial = theta;
    if (opt.fix_psi_zero) {
      const Matrix H = hessian(theta, stats).topLeftCorner(k + 1, k + 1);
      const Vector delta = H.ldlt().solve(g.head(k + 1));
      trial.beta += delta.head(k);
      trial.sigma2 += delta(k);
    } else {
      const Vector delta = hessian(theta, stats).ldlt().solve(g);
      trial.beta += delta.head(k);
      trial.sigma2 += delta(k);
      trial.psi += delta(k + 1);
    }
    if (!trial.valid() || std::abs(trial.psi) > 1.0 - opt.psi_margin) break;
    const Vector trial_g = score(trial, stats);
    const double trial_norm = free_score_norm(trial_g, opt.fix_psi_zero);
    if (!(trial_norm < norm)) break;
    theta = trial;
    g = trial_g;
    norm = trial_norm;
  }
}

}  // namespace detail

/// Pairwise maximum likelihood for k predictors.
///
/// Alternates the two closed-form conditional maximizers
///   beta(psi) = (A - psi B)^-1 (c - psi d)
///   psi(beta) = 2 C(beta) / S(beta)
/// from psi = 0, where S and C are the residual square and cross sums. At the
/// fixed point sigma2 = (S - 2 psi C) / (2 q (1 - psi^2)), then a few Newton
/// steps on the full score certify the stationary point.
inline EstimateReport estimate(const SufficientStats& stats, const SolverOptions& opt = {}) {
  const std::size_t k = stats.predictors();
  detail::check_pair_count(stats.q, k, opt.fix_psi_zero);
  const double q = static_cast<double>(stats.q);

  Eigen::ColPivHouseholderQR<Matrix> qr(stats.A);
  if (qr.rank() < static_cast<Eigen::Index>(k)) {
    throw Error(ErrorCode::rank_deficiency, "predictor cross-product matrix has rank " + std::to_string(qr.rank()) +
                                                " < " + std::to_string(k));
  }

  auto beta_given = [&](double psi) -> Vector {
    Eigen::LLT<Matrix> llt(stats.A - psi * stats.B);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::rank_deficiency, "A - psi B is not positive definite at psi = " + std::to_string(psi));
    }
    return llt.solve(stats.c - psi * stats.d);
  };

  EstimateReport report;
  Theta& theta = report.theta;
  bool at_bound = false;
  bool settled = opt.fix_psi_zero;

  theta.psi = 0.0;
  theta.beta = beta_given(0.0);
  report.iterations = 1;

  if (!opt.fix_psi_zero) {
    detail::Damping damping;
    for (std::size_t it = 1; it <= opt.max_iter; ++it) {
      report.iterations = it;
      const double S = stats.residual_square_sum(theta.beta);
      if (!(S > 0.0)) throw Error(ErrorCode::degenerate_fit, "residual sum of squares is zero");
      const double target = 2.0 * stats.residual_cross_sum(theta.beta) / S;
      const double psi = detail::clamp_psi(theta.psi + damping.apply(target - theta.psi), opt, at_bound);
      Vector beta = beta_given(psi);
      const double change = std::max(detail::max_norm(beta - theta.beta), std::abs(psi - theta.psi));
      theta.beta = std::move(beta);
      theta.psi = psi;
      if (change < opt.tol) {
        settled = true;
        break;
      }
    }
  }

  const double S = stats.residual_square_sum(theta.beta);
  const double C = stats.residual_cross_sum(theta.beta);
  theta.sigma2 = (S - 2.0 * theta.psi * C) / (2.0 * q * (1.0 - theta.psi * theta.psi));
  detail::check_sigma2(theta.sigma2, opt);

  if (!at_bound) detail::polish(theta, stats, opt, report.score_norm);
  else report.score_norm = detail::free_score_norm(score(theta, stats), opt.fix_psi_zero);
  detail::check_sigma2(theta.sigma2, opt);

  report.psi_at_bound = at_bound;
  report.converged = settled && !at_bound && report.score_norm <= opt.score_tol;
  report.loglik = log_likelihood(theta, stats);
  return report;
}

inline EstimateReport estimate(const PairSample& sample, const SolverOptions& opt = {}) {
  return estimate(compute_stats(sample), opt);
}

/// Codes nothing itself: estimates on the given coding and records the
/// fraction of the dataset's units it covers.
inline EstimateReport estimate(const SpatialDataset& data, const PairCoding& coding, const SolverOptions& opt = {}) {
  EstimateReport report = estimate(extract_pair_sample(data, coding), opt);
  report.coding_rate = coding.coding_rate(data.size());
  return report;
}

/// Single-predictor solver written directly in the six alpha statistics:
///   beta = (alpha3 - psi alpha4) / (alpha1 - 2 psi alpha5)
///   psi  = 2 (alpha6 - beta alpha4 + beta^2 alpha5) / (alpha2 - 2 beta alpha3 + beta^2 alpha1)
/// It runs the same iteration as estimate() and serves as its k = 1 reference.
inline EstimateReport estimate_scalar(const SufficientStats& stats, const SolverOptions& opt = {}) {
  if (stats.predictors() != 1) {
    throw Error(ErrorCode::unsupported_dimension, "scalar solver needs exactly one predictor");
  }
  detail::check_pair_count(stats.q, 1, opt.fix_psi_zero);
  const double q = static_cast<double>(stats.q);
  const double a1 = stats.alpha1(), a2 = stats.alpha2(), a3 = stats.alpha3();
  const double a4 = stats.alpha4(), a5 = stats.alpha5(), a6 = stats.alpha6();
  if (!(a1 > 0.0)) throw Error(ErrorCode::rank_deficiency, "alpha1 is zero");

  auto squares = [&](double b) { return a2 - 2.0 * b * a3 + b * b * a1; };
  auto cross = [&](double b) { return a6 - b * a4 + b * b * a5; };
  auto beta_given = [&](double psi) {
    const double denom = a1 - 2.0 * psi * a5;
    if (!(denom > 0.0)) throw Error(ErrorCode::rank_deficiency, "alpha1 - 2 psi alpha5 is not positive");
    return (a3 - psi * a4) / denom;
  };

  EstimateReport report;
  bool at_bound = false;
  bool settled = opt.fix_psi_zero;
  double beta = beta_given(0.0);
  double psi = 0.0;
  report.iterations = 1;

  if (!opt.fix_psi_zero) {
    detail::Damping damping;
    for (std::size_t it = 1; it <= opt.max_iter; ++it) {
      report.iterations = it;
      const double S = squares(beta);
      if (!(S > 0.0)) throw Error(ErrorCode::degenerate_fit, "residual sum of squares is zero");
      const double next_psi = detail::clamp_psi(psi + damping.apply(2.0 * cross(beta) / S - psi), opt, at_bound);
      const double next_beta = beta_given(next_psi);
      const double change = std::max(std::abs(next_beta - beta), std::abs(next_psi - psi));
      beta = next_beta;
      psi = next_psi;
      if (change < opt.tol) {
        settled = true;
        break;
      }
    }
  }

  double sigma2 = (squares(beta) - 2.0 * psi * cross(beta)) / (2.0 * q * (1.0 - psi * psi));
  detail::check_sigma2(sigma2, opt);

  // Score and negated curvature in alpha form.
  auto gradient = [&](double b, double s2, double p) -> Eigen::Vector3d {
    const double D = 1.0 - p * p;
    const double S = squares(b), C = cross(b);
    return {(a3 - b * a1 - p * (a4 - 2.0 * b * a5)) / (s2 * D), -q / s2 + (S - 2.0 * p * C) / (2.0 * s2 * s2 * D),
            q * p / D - (p * S - C * (1.0 + p * p)) / (s2 * D * D)};
  };
  auto curvature = [&](double b, double s2, double p) -> Eigen::Matrix3d {
    const double D = 1.0 - p * p;
    const double S = squares(b), C = cross(b);
    const double Q = S - 2.0 * p * C;
    const double N = p * S - C * (1.0 + p * p);
    const double g = a3 - b * a1 - p * (a4 - 2.0 * b * a5);
    const double h = a4 - 2.0 * b * a5;
    Eigen::Matrix3d m;
    m(0, 0) = -(a1 - 2.0 * p * a5) / (s2 * D);
    m(0, 1) = -g / (s2 * s2 * D);
    m(0, 2) = (2.0 * p * g - D * h) / (s2 * D * D);
    m(1, 1) = q / (s2 * s2) - Q / (s2 * s2 * s2 * D);
    m(1, 2) = N / (s2 * s2 * D * D);
    m(2, 2) = q * (1.0 + p * p) / (D * D) - (Q * D + 4.0 * p * N) / (s2 * D * D * D);
    m(1, 0) = m(0, 1);
    m(2, 0) = m(0, 2);
    m(2, 1) = m(1, 2);
    return -m;
  };
  auto norm_of = [&](const Eigen::Vector3d& g) {
    return opt.fix_psi_zero ? g.head<2>().cwiseAbs().maxCoeff() : g.cwiseAbs().maxCoeff();
  };

  Eigen::Vector3d g = gradient(beta, sigma2, psi);
  double norm = norm_of(g);
  for (std::size_t step = 0; !at_bound && step < opt.polish_steps && norm > 0.0; ++step) {
    Eigen::Vector3d delta = Eigen::Vector3d::Zero();
    const Eigen::Matrix3d H = curvature(beta, sigma2, psi);
    if (opt.fix_psi_zero) delta.head<2>() = H.topLeftCorner<2, 2>().ldlt().solve(g.head<2>());
    else delta = H.ldlt().solve(g);
    const double tb = beta + delta(0), ts = sigma2 + delta(1), tp = psi + delta(2);
    if (!(ts > 0.0) || !std::isfinite(tb) || std::abs(tp) > 1.0 - opt.psi_margin) break;
    const Eigen::Vector3d tg = gradient(tb, ts, tp);
    const double tn = norm_of(tg);
    if (!(tn < norm)) break;
    beta = tb;
    sigma2 = ts;
    psi = tp;
    g = tg;
    norm = tn;
  }
  detail::check_sigma2(sigma2, opt);

  report.theta = Theta{Vector::Constant(1, beta), sigma2, psi};
  report.score_norm = norm;
  report.psi_at_bound = at_bound;
  report.converged = settled && !at_bound && norm <= opt.score_tol;
  report.loglik = log_likelihood(report.theta, stats);
  return report;
}

}  // namespace bml
