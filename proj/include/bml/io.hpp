#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bml/coding.hpp"
#include "bml/dataset.hpp"
#include "bml/error.hpp"
#include "bml/estimator.hpp"
#include "bml/graph.hpp"
#include "bml/inference.hpp"
#include "bml/resample.hpp"
#include "bml/simulate.hpp"

namespace bml::io {

using nlohmann::json;

/// Raw table read from a dataset CSV: header `id,<response>,<x1>,...,<xk>`.
struct DataTable {
  std::vector<std::string> columns;
  std::vector<long long> ids;
  std::vector<double> y;
  std::vector<std::vector<double>> x;  // row-major, k entries per row
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] inline void parse_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::parse_error, "line " + std::to_string(line) + ": " + what);
}

/// Locale-independent decimal parse of the whole field. NA, empty and
/// non-finite values are rejected.
inline double parse_double(std::string_view field, std::size_t line) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value, std::chars_format::general);
  if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    parse_fail(line, "expected a finite number, got '" + std::string(field) + "'");
  }
  return value;
}

template <typename Int>
Int parse_integer(std::string_view field, std::size_t line) {
  Int value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    parse_fail(line, "expected an integer, got '" + std::string(field) + "'");
  }
  return value;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline DataTable read_table_csv(std::istream& in) {
  DataTable table;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split(line, ',');
    if (table.columns.empty()) {
      if (fields.size() < 3) detail::parse_fail(line_no, "header needs id, response and at least one predictor");
      for (auto f : fields) table.columns.emplace_back(f);
      width = fields.size();
      continue;
    }
    if (fields.size() != width) {
      detail::parse_fail(line_no, "expected " + std::to_string(width) + " fields, got " +
                                      std::to_string(fields.size()));
    }
    table.ids.push_back(detail::parse_integer<long long>(fields[0], line_no));
    table.y.push_back(detail::parse_double(fields[1], line_no));
    std::vector<double> row;
    for (std::size_t c = 2; c < width; ++c) row.push_back(detail::parse_double(fields[c], line_no));
    table.x.push_back(std::move(row));
  }
  if (table.columns.empty()) throw Error(ErrorCode::parse_error, "line 1: missing header row");
  return table;
}

/// Undirected edge list, one `i l` pair of 0-based unit indices per line.
/// Blank lines and lines starting with '#' are skipped. The unit count is
/// `n` when given, otherwise one past the largest index.
inline NeighborGraph read_edge_list(std::istream& in, std::optional<std::size_t> n = std::nullopt) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::string line;
  std::size_t line_no = 0;
  std::size_t max_index = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    std::istringstream fields{std::string(body)};
    std::string a, b, extra;
    if (!(fields >> a >> b) || (fields >> extra)) detail::parse_fail(line_no, "expected two unit indices");
    const auto i = detail::parse_integer<std::size_t>(a, line_no);
    const auto l = detail::parse_integer<std::size_t>(b, line_no);
    max_index = std::max({max_index, i, l});
    edges.emplace_back(i, l);
  }
  const std::size_t units = n.value_or(edges.empty() ? 0 : max_index + 1);
  if (!edges.empty() && max_index >= units) {
    throw Error(ErrorCode::join_error, "edge list references unit " + std::to_string(max_index) + " but only " +
                                           std::to_string(units) + " units exist");
  }
  return NeighborGraph::from_edges(units, edges);
}

/// Joins a table to a graph: ids must be exactly 0..n-1, in any order. Row
/// with id i becomes unit i.
inline SpatialDataset make_dataset(const DataTable& table, NeighborGraph graph) {
  const std::size_t n = graph.size();
  if (table.ids.size() != n) {
    throw Error(ErrorCode::join_error, "table has " + std::to_string(table.ids.size()) + " rows but graph has " +
                                           std::to_string(n) + " units");
  }
  const auto k = static_cast<Eigen::Index>(table.columns.size() - 2);
  Vector y(static_cast<Eigen::Index>(n));
  Matrix X(static_cast<Eigen::Index>(n), k);
  std::vector<char> seen(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const long long id = table.ids[r];
    if (id < 0 || static_cast<std::size_t>(id) >= n) {
      throw Error(ErrorCode::join_error, "unit id " + std::to_string(id) + " is not a graph unit");
    }
    const auto u = static_cast<std::size_t>(id);
    if (seen[u]) throw Error(ErrorCode::join_error, "unit id " + std::to_string(id) + " appears twice");
    seen[u] = 1;
    y(static_cast<Eigen::Index>(u)) = table.y[r];
    for (Eigen::Index c = 0; c < k; ++c) X(static_cast<Eigen::Index>(u), c) = table.x[r][static_cast<std::size_t>(c)];
  }
  return SpatialDataset(std::move(y), std::move(X), std::move(graph));
}

inline void write_dataset_csv(std::ostream& out, const SpatialDataset& data) {
  out << "id,y";
  for (std::size_t c = 0; c < data.predictors(); ++c) out << ",x" << (c + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < data.y.size(); ++i) {
    out << i << ',' << detail::format_double(data.y(i));
    for (Eigen::Index c = 0; c < data.X.cols(); ++c) out << ',' << detail::format_double(data.X(i, c));
    out << '\n';
  }
}

inline json coding_to_json(const PairCoding& coding) {
  json arr = json::array();
  for (const auto& p : coding.pairs) arr.push_back({p.first, p.second});
  return arr;
}

inline PairCoding coding_from_json(const json& arr) {
  if (!arr.is_array()) throw Error(ErrorCode::parse_error, "coding must be a JSON array of [i, l] pairs");
  PairCoding coding;
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_unsigned() || !p[1].is_number_unsigned()) {
      throw Error(ErrorCode::parse_error, "coding entries must be [i, l] pairs of non-negative integers");
    }
    coding.pairs.push_back({p[0].get<std::size_t>(), p[1].get<std::size_t>()});
  }
  return coding;
}

inline json theta_to_json(const Theta& theta) {
  return {{"beta", std::vector<double>(theta.beta.data(), theta.beta.data() + theta.beta.size())},
          {"sigma2", theta.sigma2},
          {"psi", theta.psi}};
}

inline json estimate_to_json(const EstimateReport& r) {
  json j = theta_to_json(r.theta);
  j["loglik"] = r.loglik;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["score_norm"] = r.score_norm;
  j["coding_rate"] = r.coding_rate;
  j["psi_at_bound"] = r.psi_at_bound;
  return j;
}

inline json inference_to_json(const InferenceReport& r) {
  json params = json::array();
  for (const auto& p : r.parameters) {
    params.push_back({{"name", p.name}, {"estimate", p.estimate}, {"se", p.se}, {"lower", p.lower}, {"upper", p.upper}});
  }
  json j{{"level", r.level},
         {"se_method", r.method == StandardErrorMethod::expected ? "expected" : "observed"},
         {"parameters", params},
         {"wald_psi", {{"statistic", r.psi_test.statistic}, {"p_value", r.psi_test.p_value}}}};
  if (r.spillover) {
    j["spillover"] = {{"covariance", r.spillover->covariance},
                      {"spillover", r.spillover->spillover},
                      {"variance", r.spillover->variance},
                      {"autocovariance", r.spillover->autocovariance},
                      {"beta", r.spillover->beta()}};
  }
  return j;
}

inline json monte_carlo_to_json(const MonteCarloReport& r) {
  json params = json::array();
  for (const auto& p : r.parameters) {
    params.push_back({{"name", p.name},
                      {"truth", p.truth},
                      {"mean", p.mean},
                      {"bias", p.bias},
                      {"variance", p.variance},
                      {"sd", p.sd},
                      {"fisher_variance", p.fisher_variance},
                      {"variance_ratio", p.variance_ratio}});
  }
  json corr = json::array();
  for (Eigen::Index a = 0; a < r.correlation.rows(); ++a) {
    std::vector<double> row(static_cast<std::size_t>(r.correlation.cols()));
    for (Eigen::Index b = 0; b < r.correlation.cols(); ++b) row[static_cast<std::size_t>(b)] = r.correlation(a, b);
    corr.push_back(row);
  }
  return {{"replications", r.replications},
          {"failures", r.failures},
          {"q", r.q},
          {"truth", theta_to_json(r.truth)},
          {"parameters", params},
          {"correlation", corr},
          {"normality", {{"ks_statistic", r.normality.statistic}, {"p_value", r.normality.p_value}}}};
}

inline json bootstrap_to_json(const BootstrapReport& r) {
  json params = json::array();
  for (const auto& p : r.parameters) {
    params.push_back({{"name", p.name}, {"mean", p.mean}, {"sd", p.sd}, {"lower", p.lower}, {"upper", p.upper}});
  }
  return {{"codings", r.codings}, {"failures", r.failures}, {"level", r.level}, {"parameters", params},
          {"besag_average", theta_to_json(besag_average(r))}};
}

/// One row per replication: rep, converged, beta_1..beta_k, sigma2, psi.
inline void write_replications_csv(std::ostream& out, const MonteCarloReport& r) {
  const auto k = r.truth.beta.size();
  out << "replication,converged";
  for (Eigen::Index j = 0; j < k; ++j) out << ",beta" << (j + 1);
  out << ",sigma2,psi\n";
  for (const auto& rec : r.records) {
    out << rec.replication << ',' << (rec.converged ? 1 : 0);
    for (Eigen::Index j = 0; j < k; ++j) {
      out << ',' << (rec.estimate.beta.size() == k ? detail::format_double(rec.estimate.beta(j)) : std::string("nan"));
    }
    out << ',' << detail::format_double(rec.estimate.sigma2) << ',' << detail::format_double(rec.estimate.psi) << '\n';
  }
}

inline void write_codings_csv(std::ostream& out, const BootstrapReport& r, std::size_t k) {
  out << "coding,pairs,converged";
  for (std::size_t j = 0; j < k; ++j) out << ",beta" << (j + 1);
  out << ",sigma2,psi\n";
  for (const auto& e : r.estimates) {
    out << e.coding << ',' << e.pairs << ',' << (e.converged ? 1 : 0);
    for (std::size_t j = 0; j < k; ++j) {
      out << ','
          << (static_cast<std::size_t>(e.theta.beta.size()) == k
                  ? detail::format_double(e.theta.beta(static_cast<Eigen::Index>(j)))
                  : std::string("nan"));
    }
    out << ',' << detail::format_double(e.theta.sigma2) << ',' << detail::format_double(e.theta.psi) << '\n';
  }
}

}  // namespace bml::io
