#pragma once

// Test-side reference computations. Nothing here calls into the code under
// test beyond the plain data containers.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bml/dataset.hpp"
#include "bml/graph.hpp"
#include "bml/rng.hpp"
#include "bml/theta.hpp"

namespace bml::test {

struct NaiveStats {
  Matrix A, B;
  Vector c, d;
  double syy = 0.0;
  double scross = 0.0;
};

/// Element-by-element sums in the order a textbook would write them.
inline NaiveStats naive_stats(const PairSample& s) {
  const auto q = s.y1.size();
  const auto k = s.X1.cols();
  NaiveStats out{Matrix::Zero(k, k), Matrix::Zero(k, k), Vector::Zero(k), Vector::Zero(k)};
  for (Eigen::Index j = 0; j < q; ++j) {
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) {
        out.A(a, b) += s.X1(j, a) * s.X1(j, b) + s.X2(j, a) * s.X2(j, b);
        out.B(a, b) += s.X1(j, a) * s.X2(j, b) + s.X2(j, a) * s.X1(j, b);
      }
      out.c(a) += s.X1(j, a) * s.y1(j) + s.X2(j, a) * s.y2(j);
      out.d(a) += s.X1(j, a) * s.y2(j) + s.X2(j, a) * s.y1(j);
    }
    out.syy += s.y1(j) * s.y1(j) + s.y2(j) * s.y2(j);
    out.scross += s.y1(j) * s.y2(j);
  }
  return out;
}

struct NaiveMoments {
  double first = 0.0, second = 0.0, cross = 0.0;
};

inline NaiveMoments naive_moments(const PairSample& s, const Vector& beta) {
  NaiveMoments m;
  for (Eigen::Index j = 0; j < s.y1.size(); ++j) {
    double e1 = s.y1(j), e2 = s.y2(j);
    for (Eigen::Index a = 0; a < beta.size(); ++a) {
      e1 -= s.X1(j, a) * beta(a);
      e2 -= s.X2(j, a) * beta(a);
    }
    m.first += e1 * e1;
    m.second += e2 * e2;
    m.cross += e1 * e2;
  }
  return m;
}

/// Sum of bivariate normal log-densities with covariance sigma2 [[1, psi], [psi, 1]],
/// using an explicit 2x2 inverse and determinant.
inline double density_loglik(const Theta& t, const PairSample& s) {
  Eigen::Matrix2d cov;
  cov << t.sigma2, t.sigma2 * t.psi, t.sigma2 * t.psi, t.sigma2;
  const Eigen::Matrix2d inv = cov.inverse();
  const double norm = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(cov.determinant());
  double total = 0.0;
  for (Eigen::Index j = 0; j < s.y1.size(); ++j) {
    Eigen::Vector2d e(s.y1(j) - s.X1.row(j).dot(t.beta), s.y2(j) - s.X2.row(j).dot(t.beta));
    total += norm - 0.5 * e.dot(inv * e);
  }
  return total;
}

/// Packs theta as (beta, sigma2, psi).
inline Vector pack(const Theta& t) {
  const auto k = t.beta.size();
  Vector v(k + 2);
  v.head(k) = t.beta;
  v(k) = t.sigma2;
  v(k + 1) = t.psi;
  return v;
}

inline Theta unpack(const Vector& v) {
  const auto k = v.size() - 2;
  return Theta{v.head(k), v(k), v(k + 1)};
}

/// Central differences with a per-coordinate relative step.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double rel = 1e-5) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel * std::max(1.0, std::abs(x(i)));
    Vector up = x, down = x;
    up(i) += h;
    down(i) -= h;
    g(i) = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double rel = 1e-6) {
  const Vector f0 = f(x);
  Matrix J(f0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel * std::max(1.0, std::abs(x(i)));
    Vector up = x, down = x;
    up(i) += h;
    down(i) -= h;
    J.col(i) = (f(up) - f(down)) / (2.0 * h);
  }
  return J;
}

/// Pair sample drawn directly: standard normal X, correlated normal errors.
inline PairSample draw_sample(Rng& rng, std::size_t q, const Theta& t) {
  const auto n = static_cast<Eigen::Index>(q);
  const auto k = t.beta.size();
  PairSample s{Vector(n), Vector(n), Matrix(n, k), Matrix(n, k)};
  const double sd = std::sqrt(t.sigma2);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index a = 0; a < k; ++a) {
      s.X1(j, a) = rng.normal();
      s.X2(j, a) = rng.normal();
    }
    const double z1 = rng.normal(), z2 = rng.normal();
    s.y1(j) = s.X1.row(j).dot(t.beta) + sd * z1;
    s.y2(j) = s.X2.row(j).dot(t.beta) + sd * (t.psi * z1 + std::sqrt(1.0 - t.psi * t.psi) * z2);
  }
  return s;
}

/// Largest set of edges whose endpoints are pairwise non-adjacent across
/// edges (and disjoint), by exhaustive backtracking. Small graphs only.
inline std::size_t max_independent_pairs(const NeighborGraph& g) {
  const auto edges = g.edges();
  std::vector<std::pair<std::size_t, std::size_t>> chosen;
  std::size_t best = 0;
  auto compatible = [&](std::pair<std::size_t, std::size_t> e) {
    for (const auto& c : chosen) {
      for (std::size_t u : {e.first, e.second}) {
        for (std::size_t v : {c.first, c.second}) {
          if (u == v || g.adjacent(u, v)) return false;
        }
      }
    }
    return true;
  };
  std::function<void(std::size_t)> recurse = [&](std::size_t from) {
    best = std::max(best, chosen.size());
    if (chosen.size() + (edges.size() - from) <= best) return;
    for (std::size_t i = from; i < edges.size(); ++i) {
      if (!compatible(edges[i])) continue;
      chosen.push_back(edges[i]);
      recurse(i + 1);
      chosen.pop_back();
    }
  };
  recurse(0);
  return best;
}

/// Coding invariants checked by explicit set operations: each pair is an
/// edge, no unit is reused, and no unit of one pair lies in N(i) u N(l) of
/// another. Returns an empty string when all hold.
inline std::string coding_problem(const NeighborGraph& g, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  auto hood = [&](std::size_t u) {
    const auto nb = g.neighbors(u);
    return std::set<std::size_t>(nb.begin(), nb.end());
  };
  std::set<std::size_t> used;
  for (auto [i, l] : pairs) {
    if (i >= g.size() || l >= g.size()) return "index out of range";
    if (hood(i).count(l) == 0) return "pair is not an edge";
    if (!used.insert(i).second || !used.insert(l).second) return "unit reused";
  }
  for (std::size_t a = 0; a < pairs.size(); ++a) {
    std::set<std::size_t> joint = hood(pairs[a].first);
    const auto second = hood(pairs[a].second);
    joint.insert(second.begin(), second.end());
    for (std::size_t b = 0; b < pairs.size(); ++b) {
      if (a != b && (joint.count(pairs[b].first) || joint.count(pairs[b].second))) return "buffer violated";
    }
  }
  return {};
}

/// Random sparse graph: each unordered pair is an edge with probability p.
inline NeighborGraph random_graph(Rng& rng, std::size_t n, double p) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = i + 1; l < n; ++l) {
      if (rng.uniform(0.0, 1.0) < p) edges.emplace_back(i, l);
    }
  }
  return NeighborGraph::from_edges(n, edges);
}

}  // namespace bml::test
