#pragma once

// Same-person pair constraints: for every pair (i, j) both rows are forced to
// share one representative feature, f_i = f_j = f_s with s in {i, j}.
//
// Which member represents the pair is chosen by one of four strategies:
//
//   random       seeded coin flip per pair
//   partial      larger |R(., k)| on the unmerged set, ties to the lower index
//   optimal      forward pass over the layered selection graph (below)
//   brute_force  exhaustive 2^N_P enumeration; the exact optimum of the
//                canonical objective, used as an oracle
//
// All strategies are compared with one yardstick, objective_value(): merge
// every pair according to the selection, recompute the k-reciprocal sets on
// the merged features and sum |R(s_p, k)| over pairs.
//
// Pairs sharing a row are merged sequentially in list order; a merge copies
// the *current* feature of the chosen member, so later merges overwrite
// earlier ones.

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "prefine/embeddings.hpp"
#include "prefine/reranking.hpp"

namespace prefine {

enum class Strategy { none, random, partial, optimal, brute_force };

std::string_view to_string(Strategy s);
// Throws ParameterError on an unknown name.
Strategy parse_strategy(std::string_view name);

inline constexpr std::size_t kBruteForceMaxPairs = 20;

struct Selection {
  Strategy strategy = Strategy::none;
  std::vector<Index> choices;  // s_p, one per pair, always a member of pair p
  std::optional<std::size_t> objective;

  bool operator==(const Selection&) const = default;
};

// Throws ContractError when the selection does not fit the pair list.
void check_selection(const PairList& pairs, const Selection& sel);

// Row -> original row whose features it carries after the merges.
std::vector<Index> merge_sources(std::size_t n, const PairList& pairs,
                                 std::span<const Index> choices);

EmbeddingSet apply_merge(const EmbeddingSet& emb, const PairList& pairs, const Selection& sel);

Selection select_random(const PairList& pairs, std::uint64_t seed);
Selection select_partial(const PairList& pairs, const NeighborSets& nbrs);
Selection select_optimal(const PairList& pairs, const EmbeddingSet& emb, std::size_t k);
// Throws GuardError when pairs.size() > kBruteForceMaxPairs.
Selection brute_force_select(const PairList& pairs, const EmbeddingSet& emb, std::size_t k);

std::size_t objective_value(const PairList& pairs, const EmbeddingSet& emb,
                            const Selection& sel, std::size_t k);

// Runs `strategy` (not none) and fills in the canonical objective.
Selection select(Strategy strategy, const PairList& pairs, const EmbeddingSet& emb,
                 std::size_t k, std::uint64_t seed);

// Layered DAG behind select_optimal. Layer p holds the two members of pair p;
// a source feeds layer 0 and layer N_P-1 feeds a sink. Every source-to-sink
// path visits one node per layer, so paths and selections correspond 1:1.
//
// The cost of entering candidate c of layer p is |R(c, k)| once the pairs on
// the path (layers < p) and pair p itself are merged, p toward c. Later pairs
// stay unmerged. Edges into the sink cost 0.
//
// Neighborhoods of a merged state are evaluated lazily from the distance
// matrix of the unmerged set: a merged row x carries the features of original
// row source[x], so its distance to y is D(source[x], source[y]). Only N(c)
// and the lists of rows that may be reciprocal to c are ranked.
class SelectionGraph {
 public:
  SelectionGraph(const PairList& pairs, const EmbeddingSet& emb, std::size_t k);

  std::size_t layers() const { return pairs_.size(); }
  Index candidate(std::size_t layer, int slot) const {
    return slot == 0 ? pairs_[layer].first : pairs_[layer].second;
  }
  std::size_t k() const { return k_; }

  // Unmerged state: every row carries its own features.
  std::vector<Index> initial_state() const;
  // Merge pair `layer` toward candidate(layer, slot).
  void advance(std::vector<Index>& state, std::size_t layer, int slot) const;

  std::size_t edge_cost(const std::vector<Index>& state, std::size_t layer, int slot) const;
  std::size_t sink_cost() const { return 0; }

  // R(row, k) in the given merged state, ascending.
  std::vector<Index> reciprocal_set(const std::vector<Index>& state, Index row) const;

 private:
  std::vector<Index> knn_row(const std::vector<Index>& state, Index row) const;

  PairList pairs_;
  std::size_t k_;
  DistanceMatrix base_distance_;
  std::vector<Index> base_class_;
};

}  // namespace prefine
