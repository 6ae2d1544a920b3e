#include "prefine/pair_constraints.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <string>

#include "prefine/error.hpp"
#include "prefine/rng.hpp"

namespace prefine {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::none: return "none";
    case Strategy::random: return "random";
    case Strategy::partial: return "partial";
    case Strategy::optimal: return "optimal";
    case Strategy::brute_force: return "brute_force";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::none, Strategy::random, Strategy::partial, Strategy::optimal,
                 Strategy::brute_force}) {
    if (name == to_string(s)) return s;
  }
  if (name == "brute-force") return Strategy::brute_force;
  throw ParameterError("unknown strategy '" + std::string(name) +
                       "' (expected none|random|partial|optimal|brute_force)");
}

void check_selection(const PairList& pairs, const Selection& sel) {
  if (sel.choices.size() != pairs.size()) {
    throw ContractError("selection has " + std::to_string(sel.choices.size()) +
                        " choices for " + std::to_string(pairs.size()) + " pairs");
  }
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (sel.choices[p] != pairs[p].first && sel.choices[p] != pairs[p].second) {
      throw ContractError("choice " + std::to_string(sel.choices[p]) + " for pair " +
                          std::to_string(p) + " is not a member of the pair");
    }
  }
}

std::vector<Index> merge_sources(std::size_t n, const PairList& pairs,
                                 std::span<const Index> choices) {
  std::vector<Index> src(n);
  std::iota(src.begin(), src.end(), Index{0});
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const Index from = src[choices[p]];
    src[pairs[p].first] = from;
    src[pairs[p].second] = from;
  }
  return src;
}

EmbeddingSet apply_merge(const EmbeddingSet& emb, const PairList& pairs, const Selection& sel) {
  check_selection(pairs, sel);
  for (const auto& p : pairs) {
    if (p.second >= emb.size()) throw ContractError("pair index out of range for embedding set");
  }
  EmbeddingSet out = emb;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const Index s = sel.choices[p];
    const Index other = (s == pairs[p].first) ? pairs[p].second : pairs[p].first;
    out.copy_row(s, other);
  }
  return out;
}

Selection select_random(const PairList& pairs, std::uint64_t seed) {
  Selection sel{Strategy::random, {}, std::nullopt};
  sel.choices.reserve(pairs.size());
  SplitMix64 rng(seed);
  for (const auto& p : pairs) sel.choices.push_back((rng.next() >> 63) ? p.second : p.first);
  return sel;
}

Selection select_partial(const PairList& pairs, const NeighborSets& nbrs) {
  Selection sel{Strategy::partial, {}, std::nullopt};
  sel.choices.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto ri = nbrs.reciprocal_count(p.first);
    const auto rj = nbrs.reciprocal_count(p.second);
    sel.choices.push_back(rj > ri ? p.second : p.first);
  }
  return sel;
}

std::size_t objective_value(const PairList& pairs, const EmbeddingSet& emb,
                            const Selection& sel, std::size_t k) {
  if (pairs.empty()) {
    check_selection(pairs, sel);
    return 0;
  }
  const auto merged = apply_merge(emb, pairs, sel);
  const auto nbrs = compute_neighbor_sets(merged, k);
  std::size_t total = 0;
  for (Index s : sel.choices) total += nbrs.reciprocal_count(s);
  return total;
}

// ---------------------------------------------------------------------------
// SelectionGraph

SelectionGraph::SelectionGraph(const PairList& pairs, const EmbeddingSet& emb, std::size_t k)
    : pairs_(pairs), k_(k) {
  if (k < 1 || k > emb.size()) {
    throw ParameterError("k must satisfy 1 <= k <= n (k=" + std::to_string(k) +
                         ", n=" + std::to_string(emb.size()) + ")");
  }
  base_distance_ = cosine_distance_matrix(emb);
  base_class_ = duplicate_classes(emb);
}

std::vector<Index> SelectionGraph::initial_state() const {
  std::vector<Index> state(base_class_.size());
  std::iota(state.begin(), state.end(), Index{0});
  return state;
}

void SelectionGraph::advance(std::vector<Index>& state, std::size_t layer, int slot) const {
  const Index from = state[candidate(layer, slot)];
  state[pairs_[layer].first] = from;
  state[pairs_[layer].second] = from;
}

std::vector<Index> SelectionGraph::knn_row(const std::vector<Index>& state, Index row) const {
  const auto d = base_distance_.row(state[row]);
  return detail::k_nearest(state.size(), k_, [&](Index j) { return d[state[j]]; });
}

std::vector<Index> SelectionGraph::reciprocal_set(const std::vector<Index>& state,
                                                  Index row) const {
  const auto n = state.size();
  auto cls = [&](Index x) { return base_class_[state[x]]; };
  auto classes_of = [&](const std::vector<Index>& nn) {
    std::vector<Index> c;
    c.reserve(nn.size());
    for (Index y : nn) c.push_back(cls(y));
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    return c;
  };

  const auto own = classes_of(knn_row(state, row));
  const Index row_class = cls(row);
  std::vector<Index> out;
  for (Index y = 0; y < n; ++y) {
    if (!std::binary_search(own.begin(), own.end(), cls(y))) continue;
    const auto theirs = classes_of(knn_row(state, y));
    if (std::binary_search(theirs.begin(), theirs.end(), row_class)) out.push_back(y);
  }
  return out;
}

std::size_t SelectionGraph::edge_cost(const std::vector<Index>& state, std::size_t layer,
                                      int slot) const {
  auto merged = state;
  advance(merged, layer, slot);
  return reciprocal_set(merged, candidate(layer, slot)).size();
}

// ---------------------------------------------------------------------------

namespace {

struct PathLabel {
  std::vector<std::uint8_t> path;  // slot per layer so far
  std::vector<Index> state;
  std::size_t value = 0;
};

// Higher value wins; equal values go to the lexicographically smaller path.
bool better(std::size_t value_a, const std::vector<std::uint8_t>& path_a, std::size_t value_b,
            const std::vector<std::uint8_t>& path_b) {
  if (value_a != value_b) return value_a > value_b;
  return path_a < path_b;
}

// Objective of a full merge, recomputing every neighbor list. The merged
// distance between i and j is the base distance between their sources, and
// two merged rows are bit-identical exactly when their sources' classes agree.
std::size_t merged_objective(const DistanceMatrix& base, const std::vector<Index>& base_class,
                             const PairList& pairs, const std::vector<Index>& choices,
                             std::size_t k) {
  const auto n = base.size();
  const auto src = merge_sources(n, pairs, choices);

  constexpr Index unset = static_cast<Index>(-1);
  std::vector<Index> first(n, unset);
  std::vector<Index> cls(n);
  for (Index i = 0; i < n; ++i) {
    auto& f = first[base_class[src[i]]];
    if (f == unset) f = i;
    cls[i] = f;
  }

  std::vector<std::vector<Index>> knn(n);
  for (Index i = 0; i < n; ++i) {
    const auto row = base.row(src[i]);
    knn[i] = detail::k_nearest(n, k, [&](Index j) { return row[src[j]]; });
  }
  const auto recip = detail::reciprocal_sets(knn, cls);
  std::size_t total = 0;
  for (Index s : choices) total += recip[s].size();
  return total;
}

std::vector<Index> choices_from_slots(const PairList& pairs,
                                      const std::vector<std::uint8_t>& slots) {
  std::vector<Index> choices(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    choices[p] = slots[p] ? pairs[p].second : pairs[p].first;
  }
  return choices;
}

}  // namespace

Selection select_optimal(const PairList& pairs, const EmbeddingSet& emb, std::size_t k) {
  Selection sel{Strategy::optimal, {}, 0};
  if (pairs.empty()) return sel;

  const SelectionGraph graph(pairs, emb, k);

  // Label-setting sweep: one best label per node of the current layer.
  std::vector<PathLabel> frontier(1);
  frontier[0].state = graph.initial_state();

  for (std::size_t layer = 0; layer < graph.layers(); ++layer) {
    std::vector<std::array<std::size_t, 2>> costs(frontier.size());
    for (std::size_t u = 0; u < frontier.size(); ++u) {
      for (int slot = 0; slot < 2; ++slot) {
        costs[u][slot] = graph.edge_cost(frontier[u].state, layer, slot);
      }
    }
    std::vector<PathLabel> next(2);
    for (int slot = 0; slot < 2; ++slot) {
      std::size_t best = 0;
      for (std::size_t u = 1; u < frontier.size(); ++u) {
        if (better(frontier[u].value + costs[u][slot], frontier[u].path,
                   frontier[best].value + costs[best][slot], frontier[best].path)) {
          best = u;
        }
      }
      auto& label = next[slot];
      label.path = frontier[best].path;
      label.path.push_back(static_cast<std::uint8_t>(slot));
      label.state = frontier[best].state;
      graph.advance(label.state, layer, slot);
      label.value = frontier[best].value + costs[best][slot];
    }
    frontier = std::move(next);
  }

  const auto& winner =
      better(frontier[1].value + graph.sink_cost(), frontier[1].path,
             frontier[0].value + graph.sink_cost(), frontier[0].path)
          ? frontier[1]
          : frontier[0];
  sel.choices = choices_from_slots(pairs, winner.path);
  sel.objective = objective_value(pairs, emb, sel, k);
  return sel;
}

Selection brute_force_select(const PairList& pairs, const EmbeddingSet& emb, std::size_t k) {
  const auto np = pairs.size();
  if (np > kBruteForceMaxPairs) {
    throw GuardError("brute_force_select refuses " + std::to_string(np) +
                     " pairs (limit " + std::to_string(kBruteForceMaxPairs) +
                     ", 2^N_P enumeration)");
  }
  if (k < 1 || k > emb.size()) {
    throw ParameterError("k must satisfy 1 <= k <= n (k=" + std::to_string(k) +
                         ", n=" + std::to_string(emb.size()) + ")");
  }
  for (const auto& p : pairs) {
    if (p.second >= emb.size()) throw ContractError("pair index out of range for embedding set");
  }
  Selection sel{Strategy::brute_force, {}, 0};
  if (np == 0) return sel;

  // Mask bit (np-1-p) is the slot of pair p, so numeric order on masks is
  // lexicographic order on choice vectors.
  const std::uint64_t total = std::uint64_t{1} << np;
  auto slots_of = [np](std::uint64_t mask) {
    std::vector<std::uint8_t> slots(np);
    for (std::size_t p = 0; p < np; ++p) slots[p] = (mask >> (np - 1 - p)) & 1U;
    return slots;
  };

  const auto base = cosine_distance_matrix(emb);
  const auto base_class = duplicate_classes(emb);
  std::vector<std::size_t> scores(total);
  const auto count = static_cast<std::int64_t>(total);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t m = 0; m < count; ++m) {
    const auto choices = choices_from_slots(pairs, slots_of(static_cast<std::uint64_t>(m)));
    scores[static_cast<std::size_t>(m)] = merged_objective(base, base_class, pairs, choices, k);
  }

  std::uint64_t best = 0;
  for (std::uint64_t m = 1; m < total; ++m) {
    if (scores[m] > scores[best]) best = m;
  }
  sel.choices = choices_from_slots(pairs, slots_of(best));
  sel.objective = scores[best];
  return sel;
}

Selection select(Strategy strategy, const PairList& pairs, const EmbeddingSet& emb,
                 std::size_t k, std::uint64_t seed) {
  Selection sel;
  switch (strategy) {
    case Strategy::none:
      throw ContractError("select: strategy 'none' performs no selection");
    case Strategy::random:
      sel = select_random(pairs, seed);
      break;
    case Strategy::partial:
      sel = select_partial(pairs, compute_neighbor_sets(emb, k));
      break;
    case Strategy::optimal:
      return select_optimal(pairs, emb, k);
    case Strategy::brute_force:
      return brute_force_select(pairs, emb, k);
  }
  sel.objective = objective_value(pairs, emb, sel, k);
  return sel;
}

}  // namespace prefine
