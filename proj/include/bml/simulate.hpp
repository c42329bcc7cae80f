#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "bml/dataset.hpp"
#include "bml/distributions.hpp"
#include "bml/error.hpp"
#include "bml/estimator.hpp"
#include "bml/graph.hpp"
#include "bml/inference.hpp"
#include "bml/likelihood.hpp"
#include "bml/parallel.hpp"
#include "bml/rng.hpp"

namespace bml {

/// Pair-level data-generating process: q independent pairs whose errors are
/// bivariate normal with variance sigma2 and correlation psi, predictors
/// standard normal and centered over the 2q units.
struct DgpConfig {
  std::size_t q = 100;
  Theta truth = Theta::scalar(1.0, 1.0, 0.0);
  std::uint64_t seed = 1;

  void validate() const {
    truth.validate();
    if (q == 0) throw Error(ErrorCode::invalid_parameter, "DGP needs q >= 1");
    if (truth.beta.size() == 0) throw Error(ErrorCode::invalid_parameter, "DGP needs at least one predictor");
  }
};

inline PairSample generate_pair_sample(std::size_t q, const Theta& truth, Rng& rng) {
  truth.validate();
  const auto rows = static_cast<Eigen::Index>(q);
  const auto k = truth.beta.size();
  Matrix X1(rows, k), X2(rows, k);
  for (Eigen::Index j = 0; j < rows; ++j) {
    for (Eigen::Index c = 0; c < k; ++c) {
      X1(j, c) = rng.normal();
      X2(j, c) = rng.normal();
    }
  }
  const Eigen::RowVectorXd means = (X1.colwise().sum() + X2.colwise().sum()) / (2.0 * static_cast<double>(q));
  X1.rowwise() -= means;
  X2.rowwise() -= means;

  const double sd = std::sqrt(truth.sigma2);
  const double orthogonal = std::sqrt(1.0 - truth.psi * truth.psi);
  Vector e1(rows), e2(rows);
  for (Eigen::Index j = 0; j < rows; ++j) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    e1(j) = sd * z1;
    e2(j) = sd * (truth.psi * z1 + orthogonal * z2);
  }
  Vector y1 = X1 * truth.beta + e1;
  Vector y2 = X2 * truth.beta + e2;
  return PairSample(std::move(y1), std::move(y2), std::move(X1), std::move(X2));
}

inline PairSample generate_pair_sample(const DgpConfig& config) {
  config.validate();
  Rng rng(config.seed);
  return generate_pair_sample(config.q, config.truth, rng);
}

/// Row-standardized contiguity weights: w_il = 1 / |N(i)| for l in N(i).
/// Isolated units get an all-zero row.
inline Eigen::SparseMatrix<double> row_standardized_weights(const NeighborGraph& graph) {
  std::vector<Eigen::Triplet<double>> entries;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto nb = graph.neighbors(i);
    for (std::size_t l : nb) {
      entries.emplace_back(static_cast<int>(i), static_cast<int>(l), 1.0 / static_cast<double>(nb.size()));
    }
  }
  const auto n = static_cast<Eigen::Index>(graph.size());
  Eigen::SparseMatrix<double> W(n, n);
  W.setFromTriplets(entries.begin(), entries.end());
  return W;
}

/// Spatial error model on a rook lattice: e = (I - lambda W)^-1 u with u iid
/// N(0, sigma2), y = X beta + e, X iid standard normal. The returned dataset
/// is centered.
inline SpatialDataset generate_lattice_sem(std::size_t rows, std::size_t cols, const Vector& beta, double sigma2,
                                           double lambda, std::uint64_t seed) {
  if (!(sigma2 > 0.0)) throw Error(ErrorCode::invalid_parameter, "sigma2 must be positive");
  if (!(std::abs(lambda) < 1.0)) {
    throw Error(ErrorCode::invalid_parameter, "lambda must lie in (-1, 1), got " + std::to_string(lambda));
  }
  if (1.0 - std::abs(lambda) < 1e-6) {
    throw Error(ErrorCode::conditioning, "I - lambda W is numerically singular at lambda = " + std::to_string(lambda));
  }
  NeighborGraph graph = build_lattice_graph(rows, cols, Contiguity::rook);
  const auto n = static_cast<Eigen::Index>(graph.size());
  const auto k = beta.size();

  Rng rng(seed);
  Matrix X(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < k; ++c) X(i, c) = rng.normal();
  }
  Vector u(n);
  const double sd = std::sqrt(sigma2);
  for (Eigen::Index i = 0; i < n; ++i) u(i) = sd * rng.normal();

  Eigen::SparseMatrix<double> system(n, n);
  system.setIdentity();
  system -= lambda * row_standardized_weights(graph);
  system.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(system);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::conditioning, "I - lambda W factorization failed");
  const Vector errors = lu.solve(u);
  if (lu.info() != Eigen::Success || !errors.allFinite()) {
    throw Error(ErrorCode::conditioning, "I - lambda W solve failed");
  }

  Vector y = X * beta + errors;
  SpatialDataset data(std::move(y), std::move(X), std::move(graph));
  data.center();
  return data;
}

struct ParameterSummary {
  std::string name;
  double truth = 0.0;
  double mean = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  double sd = 0.0;
  /// Mean over replications of the inverse-information diagonal at the true
  /// parameters.
  double fisher_variance = 0.0;
  double variance_ratio = 0.0;
};

struct ReplicationRecord {
  std::size_t replication = 0;
  bool converged = false;
  Theta estimate;
  Vector se;  // expected-information standard errors at the estimate
};

struct MonteCarloReport {
  std::size_t replications = 0;
  std::size_t failures = 0;
  std::size_t q = 0;
  Theta truth;
  std::vector<ParameterSummary> parameters;  // beta_1..beta_k, sigma2, psi
  Matrix correlation;                        // of the estimates, same order
  KolmogorovSmirnov normality;               // standardized beta_1
  std::vector<ReplicationRecord> records;

  const ParameterSummary& parameter(const std::string& name) const {
    for (const auto& p : parameters) {
      if (p.name == name) return p;
    }
    throw Error(ErrorCode::invalid_parameter, "no parameter named " + name);
  }
};

/// Replication r draws from stream (seed, r + 1), so results do not depend
/// on the thread count. Non-converged or failed fits are excluded from the
/// summaries and counted.
inline MonteCarloReport run_monte_carlo(const DgpConfig& config, std::size_t replications, std::uint64_t seed,
                                        const SolverOptions& options = {}, std::size_t threads = 0) {
  config.validate();
  if (replications == 0) throw Error(ErrorCode::invalid_parameter, "need at least one replication");
  const auto k = config.truth.beta.size();
  const auto p = k + 2;

  std::vector<ReplicationRecord> records(replications);
  std::vector<Vector> predicted(replications);
  parallel_for(replications, threads, [&](std::size_t r) {
    Rng rng(seed, r + 1);
    const PairSample sample = generate_pair_sample(config.q, config.truth, rng);
    ReplicationRecord& rec = records[r];
    rec.replication = r;
    try {
      const SufficientStats stats = compute_stats(sample);
      const EstimateReport fit = estimate(stats, options);
      rec.estimate = fit.theta;
      rec.converged = fit.converged;
      if (fit.converged) {
        rec.se = fisher_information(fit.theta, stats).inverse().diagonal().cwiseSqrt();
        predicted[r] = fisher_information(config.truth, stats).inverse().diagonal();
      }
    } catch (const Error&) {
      rec.converged = false;
    }
  });

  MonteCarloReport report;
  report.replications = replications;
  report.q = config.q;
  report.truth = config.truth;

  std::vector<Vector> kept;
  Vector predicted_sum = Vector::Zero(p);
  std::vector<double> standardized;
  for (std::size_t r = 0; r < replications; ++r) {
    const auto& rec = records[r];
    if (!rec.converged) {
      ++report.failures;
      continue;
    }
    Vector v(p);
    v.head(k) = rec.estimate.beta;
    v(k) = rec.estimate.sigma2;
    v(k + 1) = rec.estimate.psi;
    kept.push_back(v);
    predicted_sum += predicted[r];
    standardized.push_back((rec.estimate.beta(0) - config.truth.beta(0)) / rec.se(0));
  }
  if (kept.empty()) throw Error(ErrorCode::harness_failure, "every replication failed to converge");

  const double m = static_cast<double>(kept.size());
  Vector mean = Vector::Zero(p);
  for (const auto& v : kept) mean += v;
  mean /= m;
  Matrix cov = Matrix::Zero(p, p);
  for (const auto& v : kept) cov += (v - mean) * (v - mean).transpose();
  cov /= std::max(1.0, m - 1.0);

  Vector truth(p);
  truth.head(k) = config.truth.beta;
  truth(k) = config.truth.sigma2;
  truth(k + 1) = config.truth.psi;
  const Vector fisher = predicted_sum / m;

  for (Eigen::Index j = 0; j < p; ++j) {
    ParameterSummary s;
    s.name = j < k ? "beta" + std::to_string(j + 1) : (j == k ? "sigma2" : "psi");
    s.truth = truth(j);
    s.mean = mean(j);
    s.bias = mean(j) - truth(j);
    s.variance = cov(j, j);
    s.sd = std::sqrt(cov(j, j));
    s.fisher_variance = fisher(j);
    s.variance_ratio = cov(j, j) / fisher(j);
    report.parameters.push_back(std::move(s));
  }
  report.correlation = Matrix::Identity(p, p);
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = 0; b < p; ++b) {
      if (a != b && cov(a, a) > 0.0 && cov(b, b) > 0.0) {
        report.correlation(a, b) = cov(a, b) / std::sqrt(cov(a, a) * cov(b, b));
      }
    }
  }
  report.normality = ks_test(standardized, normal_cdf);
  report.records = std::move(records);
  return report;
}

}  // namespace bml
