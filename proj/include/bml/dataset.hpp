#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "bml/coding.hpp"
#include "bml/error.hpp"
#include "bml/graph.hpp"

namespace bml {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Observations on n spatial units: response y, n x k predictors X, and the
/// contiguity graph. The model has no intercept, so estimation expects
/// centered data; `center()` subtracts column means and remembers them.
struct SpatialDataset {
  Vector y;
  Matrix X;
  NeighborGraph graph;
  bool centered = false;
  double y_mean = 0.0;
  Vector x_means;

  SpatialDataset() = default;

  SpatialDataset(Vector response, Matrix predictors, NeighborGraph g)
      : y(std::move(response)), X(std::move(predictors)), graph(std::move(g)), x_means(Vector::Zero(X.cols())) {
    if (y.size() != static_cast<Eigen::Index>(graph.size()) || X.rows() != y.size()) {
      throw Error(ErrorCode::invalid_dimension, "dataset has " + std::to_string(y.size()) + " responses, " +
                                                    std::to_string(X.rows()) + " predictor rows and " +
                                                    std::to_string(graph.size()) + " graph units");
    }
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(y.size()); }
  std::size_t predictors() const noexcept { return static_cast<std::size_t>(X.cols()); }

  /// Subtracts column means from y and X. Calling it twice is a no-op.
  void center() {
    if (centered) return;
    if (y.size() > 0) {
      y_mean = y.mean();
      x_means = X.colwise().mean().transpose();
      y.array() -= y_mean;
      X.rowwise() -= x_means.transpose();
    }
    centered = true;
  }

  bool is_centered(double tol = 1e-9) const {
    if (y.size() == 0) return true;
    if (std::abs(y.mean()) > tol) return false;
    return X.cols() == 0 || X.colwise().mean().cwiseAbs().maxCoeff() <= tol;
  }
};

/// Responses and predictors of the coded pairs. Row j of (y1, X1) belongs to
/// the first member of pair j, row j of (y2, X2) to the second.
struct PairSample {
  Vector y1;
  Vector y2;
  Matrix X1;
  Matrix X2;

  PairSample() = default;
  PairSample(Vector first_y, Vector second_y, Matrix first_x, Matrix second_x)
      : y1(std::move(first_y)), y2(std::move(second_y)), X1(std::move(first_x)), X2(std::move(second_x)) {
    if (y2.size() != y1.size() || X1.rows() != y1.size() || X2.rows() != y1.size() || X1.cols() != X2.cols()) {
      throw Error(ErrorCode::invalid_dimension, "pair sample containers disagree on q or k");
    }
  }

  std::size_t pairs() const noexcept { return static_cast<std::size_t>(y1.size()); }
  std::size_t predictors() const noexcept { return static_cast<std::size_t>(X1.cols()); }
};

inline PairSample extract_pair_sample(const SpatialDataset& data, const PairCoding& coding) {
  const auto q = static_cast<Eigen::Index>(coding.size());
  const auto k = data.X.cols();
  const std::size_t n = data.size();
  PairSample sample{Vector(q), Vector(q), Matrix(q, k), Matrix(q, k)};
  for (Eigen::Index j = 0; j < q; ++j) {
    const auto [i, l] = coding.pairs[static_cast<std::size_t>(j)];
    if (i >= n || l >= n) {
      throw Error(ErrorCode::invalid_coding, "pair " + std::to_string(j) + " references unit outside [0, " +
                                                 std::to_string(n) + ")");
    }
    const auto ii = static_cast<Eigen::Index>(i);
    const auto ll = static_cast<Eigen::Index>(l);
    sample.y1(j) = data.y(ii);
    sample.y2(j) = data.y(ll);
    sample.X1.row(j) = data.X.row(ii);
    sample.X2.row(j) = data.X.row(ll);
  }
  return sample;
}

}  // namespace bml
