#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bml/coding.hpp"
#include "bml/dataset.hpp"
#include "bml/error.hpp"
#include "bml/estimator.hpp"
#include "bml/likelihood.hpp"
#include "bml/parallel.hpp"

namespace bml {

struct ResampleSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double lower = 0.0;  // percentile interval
  double upper = 0.0;
};

struct CodingEstimate {
  std::size_t coding = 0;
  std::size_t pairs = 0;
  bool converged = false;
  Theta theta;
};

struct BootstrapReport {
  std::size_t codings = 0;
  std::size_t failures = 0;
  double level = 0.95;
  std::vector<ResampleSummary> parameters;  // beta_1..beta_k, sigma2, psi
  std::vector<CodingEstimate> estimates;    // one per coding, converged or not
};

/// Default subsample size for resampling: floor(n / 4) pairs. On sparse
/// lattices fewer pairs are admissible, in which case each coding is simply
/// maximal.
inline CodingMode default_resample_mode(std::size_t n) { return CodingMode::subsample(std::max<std::size_t>(1, n / 4)); }

/// Linear-interpolation sample quantile (type 7) of sorted values.
inline double sorted_quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return std::nan("");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Re-estimates under B random codings of the same dataset and summarizes
/// the spread of the estimates. Codings may share units; the summaries make
/// no independence claim across codings.
inline BootstrapReport coding_bootstrap(const SpatialDataset& data, std::size_t codings, CodingMode mode,
                                        std::uint64_t seed, const SolverOptions& options = {}, double level = 0.95,
                                        std::size_t threads = 0) {
  if (codings == 0) throw Error(ErrorCode::invalid_parameter, "need at least one coding");
  if (data.graph.edge_count() == 0) throw Error(ErrorCode::empty_coding, "dataset graph has no edges");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::invalid_parameter, "level must lie in (0, 1)");

  BootstrapReport report;
  report.codings = codings;
  report.level = level;
  report.estimates.resize(codings);
  parallel_for(codings, threads, [&](std::size_t b) {
    CodingEstimate& out = report.estimates[b];
    out.coding = b;
    const PairCoding coding = code_pairs(data.graph, coding_stream_seed(seed, b), mode);
    out.pairs = coding.size();
    try {
      const EstimateReport fit = estimate(data, coding, options);
      out.theta = fit.theta;
      out.converged = fit.converged;
    } catch (const Error&) {
      out.converged = false;
    }
  });

  const auto k = static_cast<Eigen::Index>(data.predictors());
  std::vector<std::vector<double>> columns(static_cast<std::size_t>(k + 2));
  for (const auto& e : report.estimates) {
    if (!e.converged) {
      ++report.failures;
      continue;
    }
    for (Eigen::Index j = 0; j < k; ++j) columns[static_cast<std::size_t>(j)].push_back(e.theta.beta(j));
    columns[static_cast<std::size_t>(k)].push_back(e.theta.sigma2);
    columns[static_cast<std::size_t>(k + 1)].push_back(e.theta.psi);
  }
  if (report.failures == codings) throw Error(ErrorCode::bootstrap_failure, "no coding produced a converged fit");

  const double tail = 0.5 * (1.0 - level);
  for (Eigen::Index j = 0; j < k + 2; ++j) {
    auto values = columns[static_cast<std::size_t>(j)];
    const double m = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= m;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    std::sort(values.begin(), values.end());

    ResampleSummary s;
    s.name = j < k ? "beta" + std::to_string(j + 1) : (j == k ? "sigma2" : "psi");
    s.mean = mean;
    s.sd = values.size() > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;
    s.lower = sorted_quantile(values, tail);
    s.upper = sorted_quantile(values, 1.0 - tail);
    report.parameters.push_back(std::move(s));
  }
  return report;
}

/// Besag-style average of the converged per-coding estimates. The averaged
/// sigma2 and psi are put back inside the parameter space.
inline Theta besag_average(const BootstrapReport& report, double psi_margin = 1e-8) {
  Theta avg;
  std::size_t count = 0;
  for (const auto& e : report.estimates) {
    if (!e.converged) continue;
    if (count == 0) {
      avg.beta = Vector::Zero(e.theta.beta.size());
      avg.sigma2 = 0.0;
      avg.psi = 0.0;
    }
    avg.beta += e.theta.beta;
    avg.sigma2 += e.theta.sigma2;
    avg.psi += e.theta.psi;
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::bootstrap_failure, "no converged coding to average");
  const double m = static_cast<double>(count);
  avg.beta /= m;
  avg.sigma2 = std::max(avg.sigma2 / m, std::numeric_limits<double>::min());
  avg.psi = std::clamp(avg.psi / m, -1.0 + psi_margin, 1.0 - psi_margin);
  return avg;
}

}  // namespace bml
