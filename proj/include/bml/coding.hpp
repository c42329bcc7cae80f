#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bml/error.hpp"
#include "bml/graph.hpp"
#include "bml/rng.hpp"

namespace bml {

struct UnitPair {
  std::size_t first;
  std::size_t second;

  friend bool operator==(const UnitPair&, const UnitPair&) = default;
};

/// Ordered list of coded neighbor pairs. The first member of each pair is
/// the unit picked by the scan, the second its randomly drawn neighbor.
struct PairCoding {
  std::vector<UnitPair> pairs;

  std::size_t size() const noexcept { return pairs.size(); }
  bool empty() const noexcept { return pairs.empty(); }

  /// Fraction of the n units that are a member of some pair.
  double coding_rate(std::size_t n) const { return n == 0 ? 0.0 : 2.0 * static_cast<double>(size()) / static_cast<double>(n); }

  friend bool operator==(const PairCoding&, const PairCoding&) = default;
};

/// Exhaustive coding keeps adding pairs until none is admissible; a
/// subsample stops after `max_pairs` pairs (or earlier, if the graph runs
/// out of admissible pairs).
struct CodingMode {
  std::optional<std::size_t> max_pairs;

  static CodingMode exhaustive() { return {}; }
  static CodingMode subsample(std::size_t q) {
    if (q == 0) throw Error(ErrorCode::invalid_parameter, "subsample coding needs q >= 1");
    return CodingMode{q};
  }
  bool is_exhaustive() const noexcept { return !max_pairs.has_value(); }
};

/// Returns a description of the first violated coding invariant, or nothing
/// if the coding is valid for the graph. Checks membership (second unit is a
/// neighbor of the first), disjointness, and buffer independence: for any two
/// pairs (i, l) and (j, k), neither j nor k lies in N(i) or N(l).
inline std::optional<std::string> find_coding_violation(const NeighborGraph& graph, const PairCoding& coding) {
  const std::size_t n = graph.size();
  for (std::size_t a = 0; a < coding.size(); ++a) {
    const auto [i, l] = coding.pairs[a];
    if (i >= n || l >= n) return "pair " + std::to_string(a) + " has an index out of range";
    if (!graph.adjacent(i, l)) return "pair " + std::to_string(a) + " joins non-neighbors";
  }
  for (std::size_t a = 0; a < coding.size(); ++a) {
    const auto [i, l] = coding.pairs[a];
    for (std::size_t b = a + 1; b < coding.size(); ++b) {
      const auto [j, k] = coding.pairs[b];
      if (i == j || i == k || l == j || l == k) {
        return "pairs " + std::to_string(a) + " and " + std::to_string(b) + " share a unit";
      }
      for (std::size_t unit : {j, k}) {
        if (graph.adjacent(i, unit) || graph.adjacent(l, unit)) {
          return "pair " + std::to_string(b) + " lies in the buffer of pair " + std::to_string(a);
        }
      }
    }
  }
  return std::nullopt;
}

/// Draws a bivariate coding by randomized greedy construction.
///
/// Units are scanned in a random order. A unit that is still free is paired
/// with a neighbor drawn uniformly among its free neighbors; both units and
/// their joint neighborhood are then blocked. A single scan already yields a
/// maximal coding, because blocking never frees a unit again.
inline PairCoding code_pairs(const NeighborGraph& graph, std::uint64_t seed,
                             CodingMode mode = CodingMode::exhaustive()) {
  if (graph.empty()) throw Error(ErrorCode::empty_coding, "graph has no units");
  if (graph.edge_count() == 0) throw Error(ErrorCode::empty_coding, "graph has no edges");

  Rng rng(seed);
  std::vector<std::size_t> order(graph.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  std::vector<char> blocked(graph.size(), 0);
  std::vector<std::size_t> candidates;
  PairCoding coding;
  const std::size_t limit = mode.max_pairs.value_or(graph.size());

  for (std::size_t i : order) {
    if (coding.size() >= limit) break;
    if (blocked[i]) continue;
    candidates.clear();
    for (std::size_t l : graph.neighbors(i)) {
      if (!blocked[l]) candidates.push_back(l);
    }
    if (candidates.empty()) continue;
    const std::size_t l = candidates[rng.index(candidates.size())];
    coding.pairs.push_back({i, l});
    blocked[i] = blocked[l] = 1;
    for (std::size_t u : graph.neighbors(i)) blocked[u] = 1;
    for (std::size_t u : graph.neighbors(l)) blocked[u] = 1;
  }
  return coding;
}

/// Seed of the b-th coding in a family; b = 0 maps to the base seed.
constexpr std::uint64_t coding_stream_seed(std::uint64_t seed, std::uint64_t b) {
  // splitmix64 increment keeps consecutive streams far apart
  return seed + b * 0x9E3779B97F4A7C15ull;
}

/// B codings from B distinct streams; coding b uses stream seed derived from
/// (seed, b). With B = 1 the result equals code_pairs(graph, seed, mode).
inline std::vector<PairCoding> enumerate_codings(const NeighborGraph& graph, std::size_t count, std::uint64_t seed,
                                                 CodingMode mode = CodingMode::exhaustive()) {
  if (count == 0) throw Error(ErrorCode::invalid_parameter, "need at least one coding");
  std::vector<PairCoding> out;
  out.reserve(count);
  for (std::size_t b = 0; b < count; ++b) {
    out.push_back(code_pairs(graph, coding_stream_seed(seed, b), mode));
  }
  return out;
}

}  // namespace bml
