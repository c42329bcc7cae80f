#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bml/error.hpp"

namespace bml {

enum class Contiguity { rook, queen };

/// Symmetric, irreflexive adjacency over n spatial units.
///
/// Neighbor lists are kept sorted and de-duplicated, so membership tests are
/// logarithmic. Construction validates every invariant; a NeighborGraph that
/// exists is always well formed.
class NeighborGraph {
 public:
  NeighborGraph() = default;

  NeighborGraph(std::size_t n, std::vector<std::vector<std::size_t>> adjacency)
      : adjacency_(std::move(adjacency)) {
    if (adjacency_.size() != n) {
      throw Error(ErrorCode::invalid_graph, "adjacency has " + std::to_string(adjacency_.size()) +
                                                " lists for " + std::to_string(n) + " units");
    }
    for (auto& list : adjacency_) {
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l : adjacency_[i]) {
        if (l >= n) {
          throw Error(ErrorCode::invalid_graph,
                      "neighbor index " + std::to_string(l) + " out of range for unit " + std::to_string(i));
        }
        if (l == i) throw Error(ErrorCode::invalid_graph, "self loop at unit " + std::to_string(i));
        if (!std::binary_search(adjacency_[l].begin(), adjacency_[l].end(), i)) {
          throw Error(ErrorCode::invalid_graph,
                      "asymmetric adjacency between " + std::to_string(i) + " and " + std::to_string(l));
        }
      }
    }
  }

  /// Builds a graph from an undirected edge list. Each edge is inserted in
  /// both directions; duplicates collapse.
  static NeighborGraph from_edges(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges) {
    std::vector<std::vector<std::size_t>> adjacency(n);
    for (auto [i, l] : edges) {
      if (i >= n || l >= n) {
        throw Error(ErrorCode::invalid_graph,
                    "edge (" + std::to_string(i) + ", " + std::to_string(l) + ") out of range");
      }
      if (i == l) throw Error(ErrorCode::invalid_graph, "self loop at unit " + std::to_string(i));
      adjacency[i].push_back(l);
      adjacency[l].push_back(i);
    }
    return NeighborGraph(n, std::move(adjacency));
  }

  std::size_t size() const noexcept { return adjacency_.size(); }
  bool empty() const noexcept { return adjacency_.empty(); }

  std::span<const std::size_t> neighbors(std::size_t i) const { return adjacency_.at(i); }

  bool adjacent(std::size_t i, std::size_t l) const {
    const auto& list = adjacency_.at(i);
    return std::binary_search(list.begin(), list.end(), l);
  }

  std::size_t edge_count() const noexcept {
    std::size_t degree_sum = 0;
    for (const auto& list : adjacency_) degree_sum += list.size();
    return degree_sum / 2;
  }

  /// Undirected edges with i < l, in lexicographic order.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < adjacency_.size(); ++i) {
      for (std::size_t l : adjacency_[i]) {
        if (i < l) out.emplace_back(i, l);
      }
    }
    return out;
  }

 private:
  std::vector<std::vector<std::size_t>> adjacency_;
};

/// Contiguity graph of a rows x cols lattice; unit (r, c) has index r * cols + c.
inline NeighborGraph build_lattice_graph(std::size_t rows, std::size_t cols, Contiguity scheme) {
  if (rows == 0 || cols == 0) {
    throw Error(ErrorCode::invalid_dimension,
                "lattice needs at least one row and column, got " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::vector<std::vector<std::size_t>> adjacency(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      auto& list = adjacency[r * cols + c];
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          if (scheme == Contiguity::rook && dr != 0 && dc != 0) continue;
          const auto rr = static_cast<std::ptrdiff_t>(r) + dr;
          const auto cc = static_cast<std::ptrdiff_t>(c) + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(rows) ||
              cc >= static_cast<std::ptrdiff_t>(cols)) {
            continue;
          }
          list.push_back(static_cast<std::size_t>(rr) * cols + static_cast<std::size_t>(cc));
        }
      }
    }
  }
  return NeighborGraph(rows * cols, std::move(adjacency));
}

}  // namespace bml
