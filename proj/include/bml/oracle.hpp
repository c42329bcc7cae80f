#pragma once

// Brute-force reference maximizer of the pairwise log-likelihood. It only
// shares the PairSample and Theta types with the rest of the library: the
// likelihood is re-evaluated pair by pair from the bivariate normal density,
// without sufficient statistics, so agreement with the estimator is evidence
// rather than a tautology. Slow by design; meant for verification only.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bml/dataset.hpp"
#include "bml/error.hpp"
#include "bml/theta.hpp"

namespace bml::oracle {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double width() const { return upper - lower; }
};

struct Bounds {
  std::vector<Interval> beta;
  Interval psi{-0.99, 0.99};
};

/// Grid points per beta axis and along psi.
struct Resolution {
  std::size_t beta = 400;
  std::size_t psi = 397;
};

struct OracleResult {
  Theta theta;
  double loglik = 0.0;
  Resolution resolution;
  std::size_t refinement_sweeps = 0;
  /// The maximizer sits within one grid step of a bound; the bounds are
  /// probably too tight and the result should not be trusted.
  bool on_boundary = false;
};

/// log f(e1, e2) of a bivariate normal with variances sigma2 and correlation psi.
inline double pair_log_density(double e1, double e2, double sigma2, double psi) {
  const double one_minus = 1.0 - psi * psi;
  return -std::log(2.0 * std::numbers::pi * sigma2 * std::sqrt(one_minus)) -
         (e1 * e1 - 2.0 * psi * e1 * e2 + e2 * e2) / (2.0 * sigma2 * one_minus);
}

namespace detail {

inline double residual(const Eigen::Ref<const Eigen::RowVectorXd>& x, double y, const std::vector<double>& beta) {
  double fit = 0.0;
  for (std::size_t c = 0; c < beta.size(); ++c) fit += x(static_cast<Eigen::Index>(c)) * beta[c];
  return y - fit;
}

struct Profiled {
  double sigma2;
  double loglik;
};

/// Log-likelihood at (beta, psi) with sigma2 replaced by its conditional
/// maximizer sum(e1^2 - 2 psi e1 e2 + e2^2) / (2 q (1 - psi^2)).
inline Profiled profile(const PairSample& sample, const std::vector<double>& beta, double psi) {
  const auto q = static_cast<Eigen::Index>(sample.pairs());
  std::vector<double> e1(static_cast<std::size_t>(q)), e2(static_cast<std::size_t>(q));
  double quad = 0.0;
  for (Eigen::Index j = 0; j < q; ++j) {
    const double a = residual(sample.X1.row(j), sample.y1(j), beta);
    const double b = residual(sample.X2.row(j), sample.y2(j), beta);
    e1[static_cast<std::size_t>(j)] = a;
    e2[static_cast<std::size_t>(j)] = b;
    quad += a * a - 2.0 * psi * a * b + b * b;
  }
  const double sigma2 = quad / (2.0 * static_cast<double>(q) * (1.0 - psi * psi));
  if (!(sigma2 > 0.0)) return {sigma2, -std::numeric_limits<double>::infinity()};
  double ll = 0.0;
  for (std::size_t j = 0; j < e1.size(); ++j) ll += pair_log_density(e1[j], e2[j], sigma2, psi);
  return {sigma2, ll};
}

inline std::vector<double> grid(const Interval& range, std::size_t points) {
  if (points <= 1 || range.width() == 0.0) return {0.5 * (range.lower + range.upper)};
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i) {
    out[i] = range.lower + range.width() * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return out;
}

inline double grid_step(const Interval& range, std::size_t points) {
  return points <= 1 ? 0.0 : range.width() / static_cast<double>(points - 1);
}

/// Golden-section maximization of f on [a, b].
template <typename F>
double golden_max(F&& f, double a, double b, double tol = 1e-11) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Bounds centered on the ordinary least-squares fit of the 2q stacked
/// units: beta_ols +/- 5 se_ols per slope, psi in [-0.99, 0.99].
inline Bounds default_bounds(const PairSample& sample) {
  const auto q = static_cast<Eigen::Index>(sample.pairs());
  const auto k = static_cast<Eigen::Index>(sample.predictors());
  Matrix X(2 * q, k);
  X << sample.X1, sample.X2;
  Vector y(2 * q);
  y << sample.y1, sample.y2;
  const Matrix gram = X.transpose() * X;
  const Matrix gram_inv = gram.inverse();
  const Vector b = gram_inv * (X.transpose() * y);
  const double dof = std::max<double>(1.0, static_cast<double>(2 * q - k));
  const double s2 = (y - X * b).squaredNorm() / dof;
  Bounds out;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double se = std::sqrt(s2 * gram_inv(j, j));
    const double half = std::max(5.0 * se, 1e-6);
    out.beta.push_back({b(j) - half, b(j) + half});
  }
  return out;
}

inline Resolution default_resolution(std::size_t k) {
  return k == 1 ? Resolution{400, 397} : Resolution{61, 61};
}

/// Grid search over (beta, psi) with sigma2 profiled out, followed by
/// coordinate-wise golden-section refinement until no coordinate moves by
/// more than 1e-7 in a sweep.
inline OracleResult brute_force_maximize(const PairSample& sample, std::optional<Bounds> bounds = std::nullopt,
                                         std::optional<Resolution> resolution = std::nullopt) {
  const std::size_t k = sample.predictors();
  if (k == 0 || k > 2) throw Error(ErrorCode::unsupported_dimension, "oracle supports one or two predictors");
  if (sample.pairs() < k + 2) throw Error(ErrorCode::insufficient_pairs, "oracle needs at least k + 2 pairs");
  const Bounds box = bounds ? *bounds : default_bounds(sample);
  const Resolution res = resolution ? *resolution : default_resolution(k);
  if (box.beta.size() != k) throw Error(ErrorCode::invalid_dimension, "bounds do not match predictor count");
  if (box.psi.lower <= -1.0 || box.psi.upper >= 1.0 || box.psi.lower > box.psi.upper) {
    throw Error(ErrorCode::invalid_parameter, "psi bounds must lie inside (-1, 1)");
  }

  std::vector<std::vector<double>> axes;
  for (const auto& iv : box.beta) axes.push_back(detail::grid(iv, res.beta));
  axes.push_back(detail::grid(box.psi, res.psi));

  // Coordinates: beta_1..beta_k, psi.
  std::vector<double> best(k + 1), point(k + 1);
  double best_ll = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(k + 1, 0);
  auto evaluate = [&](const std::vector<double>& p) {
    const std::vector<double> beta(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(k));
    return detail::profile(sample, beta, p[k]).loglik;
  };
  while (true) {
    for (std::size_t a = 0; a <= k; ++a) point[a] = axes[a][idx[a]];
    const double ll = evaluate(point);
    if (ll > best_ll) {
      best_ll = ll;
      best = point;
    }
    std::size_t a = 0;
    while (a <= k && ++idx[a] == axes[a].size()) idx[a++] = 0;
    if (a > k) break;
  }

  std::vector<Interval> ranges(box.beta);
  ranges.push_back(box.psi);
  std::vector<double> steps;
  for (std::size_t a = 0; a < k; ++a) steps.push_back(detail::grid_step(ranges[a], res.beta));
  steps.push_back(detail::grid_step(ranges[k], res.psi));

  OracleResult out;
  out.resolution = res;
  constexpr std::size_t max_sweeps = 2000;
  for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
    out.refinement_sweeps = sweep;
    double moved = 0.0;
    for (std::size_t a = 0; a <= k; ++a) {
      if (steps[a] == 0.0) continue;
      const double lo = std::max(ranges[a].lower, best[a] - steps[a]);
      const double hi = std::min(ranges[a].upper, best[a] + steps[a]);
      std::vector<double> trial = best;
      const double x = detail::golden_max(
          [&](double v) {
            trial[a] = v;
            return evaluate(trial);
          },
          lo, hi);
      trial[a] = x;
      const double ll = evaluate(trial);
      if (ll >= best_ll) {
        moved = std::max(moved, std::abs(x - best[a]));
        best = trial;
        best_ll = ll;
      }
    }
    if (moved < 1e-7) break;
  }

  for (std::size_t a = 0; a <= k; ++a) {
    if (steps[a] > 0.0 && (best[a] - ranges[a].lower < steps[a] || ranges[a].upper - best[a] < steps[a])) {
      out.on_boundary = true;
    }
  }

  const std::vector<double> beta(best.begin(), best.begin() + static_cast<std::ptrdiff_t>(k));
  const auto prof = detail::profile(sample, beta, best[k]);
  out.theta.beta = Eigen::Map<const Vector>(beta.data(), static_cast<Eigen::Index>(k));
  out.theta.sigma2 = prof.sigma2;
  out.theta.psi = best[k];
  out.loglik = prof.loglik;
  return out;
}

}  // namespace bml::oracle
