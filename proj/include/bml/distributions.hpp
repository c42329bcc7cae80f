#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace bml {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_quantile(double p) { return boost::math::quantile(boost::math::normal_distribution<>(), p); }

/// Upper tail P(X > x) of a chi-square variable with `dof` degrees of freedom.
inline double chi_squared_upper_tail(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<>(dof), x));
}

struct KolmogorovSmirnov {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Limiting Kolmogorov upper tail Q(t) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 t^2).
inline double kolmogorov_upper_tail(double t) {
  if (t < 0.2) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * t * t);
    sum += (j % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// One-sample KS test against a continuous CDF. The p-value uses the
/// Stephens finite-sample scaling (sqrt(n) + 0.12 + 0.11 / sqrt(n)) D.
inline KolmogorovSmirnov ks_test(std::vector<double> values, const std::function<double(double)>& cdf) {
  KolmogorovSmirnov out;
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = cdf(values[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double root_n = std::sqrt(n);
  out.statistic = d;
  out.p_value = kolmogorov_upper_tail((root_n + 0.12 + 0.11 / root_n) * d);
  return out;
}

}  // namespace bml
