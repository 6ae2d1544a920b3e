#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>

#include "instances.hpp"
#include "oracles.hpp"
#include "prefine/error.hpp"
#include "prefine/pair_constraints.hpp"

using namespace prefine;

namespace {

bool same_row(const EmbeddingSet& a, Index i, const EmbeddingSet& b, Index j) {
  return std::memcmp(a.row(i).data(), b.row(j).data(), a.dim() * sizeof(float)) == 0;
}

PairList disjoint_pairs(std::size_t count, std::size_t stride = 2) {
  std::vector<std::pair<Index, Index>> raw;
  for (std::size_t p = 0; p < count; ++p) raw.push_back({stride * p, stride * p + 1});
  return PairList::from_pairs(raw, stride * count + 1);
}

std::vector<Selection> all_selections(const PairList& pairs) {
  std::vector<Selection> out;
  for (std::uint64_t m = 0; m < (1ULL << pairs.size()); ++m) {
    Selection s{Strategy::brute_force, {}, std::nullopt};
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const bool second = (m >> (pairs.size() - 1 - p)) & 1U;
      s.choices.push_back(second ? pairs[p].second : pairs[p].first);
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST(Strategy, ParseAndPrint) {
  EXPECT_EQ(parse_strategy("optimal"), Strategy::optimal);
  EXPECT_EQ(parse_strategy("brute-force"), Strategy::brute_force);
  EXPECT_EQ(to_string(Strategy::brute_force), "brute_force");
  EXPECT_THROW(parse_strategy("greedy"), ParameterError);
}

TEST(ApplyMerge, SinglePair) {
  auto emb = oracle::random_set(4, 3, 1);
  auto out = apply_merge(emb, PairList::from_pairs({{0, 1}}, 4), {Strategy::random, {0}, {}});
  EXPECT_TRUE(same_row(out, 0, emb, 0));
  EXPECT_TRUE(same_row(out, 1, emb, 0));
  EXPECT_TRUE(same_row(out, 2, emb, 2));
}

TEST(ApplyMerge, EmptyIsIdentity) {
  auto emb = oracle::random_set(4, 3, 1);
  EXPECT_EQ(apply_merge(emb, PairList{}, {}), emb);
}

TEST(ApplyMerge, LaterMergesOverwrite) {
  auto emb = oracle::random_set(3, 3, 2);
  auto pairs = PairList::from_pairs({{0, 1}, {1, 2}}, 3);
  Selection sel{Strategy::random, {0, 2}, {}};
  auto out = apply_merge(emb, pairs, sel);
  EXPECT_TRUE(same_row(out, 0, emb, 0));
  EXPECT_TRUE(same_row(out, 1, emb, 2));
  EXPECT_TRUE(same_row(out, 2, emb, 2));
  EXPECT_EQ(merge_sources(3, pairs, sel.choices), (std::vector<Index>{0, 2, 2}));

  // choosing the freshly overwritten row 1 carries row 0's features on
  Selection chain{Strategy::random, {0, 1}, {}};
  auto out2 = apply_merge(emb, pairs, chain);
  EXPECT_TRUE(same_row(out2, 2, emb, 0));
  EXPECT_EQ(merge_sources(3, pairs, chain.choices), (std::vector<Index>{0, 0, 0}));
}

TEST(ApplyMerge, SelectionMustFit) {
  auto emb = oracle::random_set(4, 3, 1);
  auto pairs = PairList::from_pairs({{0, 1}}, 4);
  EXPECT_THROW(apply_merge(emb, pairs, {Strategy::random, {2}, {}}), ContractError);
  EXPECT_THROW(apply_merge(emb, pairs, {Strategy::random, {}, {}}), ContractError);
}

TEST(SelectRandom, DeterministicAndBalanced) {
  auto pairs = disjoint_pairs(10000);
  auto a = select_random(pairs, 99);
  EXPECT_EQ(a, select_random(pairs, 99));
  EXPECT_NE(a, select_random(pairs, 100));
  std::size_t first = 0;
  for (std::size_t p = 0; p < pairs.size(); ++p) first += a.choices[p] == pairs[p].first;
  EXPECT_NEAR(double(first) / 10000.0, 0.5, 0.02);
  EXPECT_TRUE(select_random(PairList{}, 1).choices.empty());
}

TEST(SelectPartial, ArgmaxAndTie) {
  NeighborSets nbrs;
  nbrs.reciprocal = {{0, 1, 2, 3, 4}, {0, 1, 2}, {1, 2, 3}, {0, 3, 4}};
  auto pairs = PairList::from_pairs({{0, 1}, {2, 3}, {1, 2}}, 4);
  auto sel = select_partial(pairs, nbrs);
  EXPECT_EQ(sel.choices, (std::vector<Index>{0, 2, 1}));
}

TEST(SelectPartial, MatchesOracleCounts) {
  auto emb = oracle::random_set(20, 5, 31);
  auto pairs = PairList::from_pairs({{0, 7}, {3, 12}, {19, 4}, {8, 9}}, 20);
  auto ref = oracle::rerank(emb, 5);
  auto sel = select_partial(pairs, compute_neighbor_sets(emb, 5));
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto ri = ref.reciprocal[pairs[p].first].size();
    const auto rj = ref.reciprocal[pairs[p].second].size();
    EXPECT_EQ(sel.choices[p], rj > ri ? pairs[p].second : pairs[p].first);
  }
}

// One layer: the larger |R| after merging toward each member, ties to the lower index.
TEST(SelectOptimal, SinglePairEqualsMergedArgmax) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto emb = oracle::random_set(30, 6, seed);
    auto pairs = PairList::from_pairs({{seed, 20 + seed}}, 30);
    auto opt = select_optimal(pairs, emb, 6);
    EXPECT_EQ(opt.choices, brute_force_select(pairs, emb, 6).choices);
  }
}

TEST(SelectionGraph, EdgeCostMergesOwnPair) {
  auto emb = oracle::random_set(40, 4, 13);
  auto pairs = PairList::from_pairs({{0, 1}, {2, 9}, {10, 30}}, 40);
  SelectionGraph graph(pairs, emb, 7);
  auto state = graph.initial_state();
  graph.advance(state, 0, 1);
  for (int slot = 0; slot < 2; ++slot) {
    const Index c = graph.candidate(1, slot);
    auto two = PairList::from_pairs({{0, 1}, {2, 9}}, 40);
    Selection sel{Strategy::optimal, {1, c}, {}};
    auto full = oracle::rerank(apply_merge(emb, two, sel), 7);
    EXPECT_EQ(graph.edge_cost(state, 1, slot), full.reciprocal[c].size());
  }
}

TEST(SelectOptimal, EmptyPairs) {
  auto emb = oracle::random_set(5, 3, 1);
  auto sel = select_optimal(PairList{}, emb, 2);
  EXPECT_TRUE(sel.choices.empty());
  EXPECT_EQ(sel.objective, 0u);
}

TEST(SelectOptimal, PathIndependentEqualsBruteForce) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto c = instances::path_independent(seed, 5);
    ASSERT_TRUE(instances::members_isolated(c));
    EXPECT_EQ(select_optimal(c.pairs, c.emb, c.k).choices,
              brute_force_select(c.pairs, c.emb, c.k).choices);
  }
}

TEST(SelectionGraph, LazyNeighborhoodsMatchFullRecompute) {
  auto emb = oracle::random_set(40, 4, 12);
  auto pairs = PairList::from_pairs({{0, 1}, {1, 5}, {2, 9}, {10, 30}, {9, 31}}, 40);
  SelectionGraph graph(pairs, emb, 7);
  ASSERT_EQ(graph.layers(), 5u);
  for (std::uint64_t m = 0; m < 32; m += 3) {
    auto state = graph.initial_state();
    Selection prefix{Strategy::optimal, {}, {}};
    PairList done;
    std::vector<std::pair<Index, Index>> raw;
    for (std::size_t p = 0; p < 5; ++p) {
      const int slot = (m >> p) & 1U;
      graph.advance(state, p, slot);
      prefix.choices.push_back(graph.candidate(p, slot));
      raw.push_back({pairs[p].first, pairs[p].second});
      done = PairList::from_pairs(raw, 40);
      auto full = compute_neighbor_sets(apply_merge(emb, done, prefix), 7);
      for (Index row = 0; row < 40; ++row) {
        EXPECT_EQ(graph.reciprocal_set(state, row), full.reciprocal[row]) << m << " " << row;
      }
    }
  }
}

TEST(BruteForce, SmallCases) {
  auto emb = oracle::random_set(30, 5, 8);
  auto none = brute_force_select(PairList{}, emb, 5);
  EXPECT_TRUE(none.choices.empty());
  EXPECT_EQ(none.objective, 0u);

  auto one = PairList::from_pairs({{4, 17}}, 30);
  const auto a = objective_value(one, emb, {Strategy::brute_force, {4}, {}}, 5);
  const auto b = objective_value(one, emb, {Strategy::brute_force, {17}, {}}, 5);
  auto bf = brute_force_select(one, emb, 5);
  EXPECT_EQ(bf.objective, std::max(a, b));
  EXPECT_EQ(bf.choices[0], b > a ? 17u : 4u);
}

TEST(BruteForce, ExhaustiveRescoring) {
  // overlapping pairs exercise the sequential merge inside the scorer
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto emb = oracle::random_set(35, 4, 50 + seed);
    auto pairs = PairList::from_pairs({{0, 3}, {3, 11}, {5, 20}, {21, 34}}, 35);
    auto bf = brute_force_select(pairs, emb, 5);
    std::size_t best = 0;
    const Selection* winner = nullptr;
    auto candidates = all_selections(pairs);
    for (const auto& s : candidates) {
      const auto v = objective_value(pairs, emb, s, 5);
      if (!winner || v > best) {
        best = v;
        winner = &s;
      }
    }
    EXPECT_EQ(bf.objective, best);
    EXPECT_EQ(bf.choices, winner->choices);
    EXPECT_EQ(objective_value(pairs, emb, bf, 5), *bf.objective);
  }
}

TEST(BruteForce, GuardRefusesLargeInputs) {
  auto pairs = disjoint_pairs(21);
  auto emb = oracle::random_set(43, 2, 1);
  EXPECT_THROW(brute_force_select(pairs, emb, 3), GuardError);
  EXPECT_THROW(select(Strategy::brute_force, pairs, emb, 3, 0), GuardError);
}

TEST(Objective, EmptyAndSaturated) {
  auto emb = oracle::random_set(12, 3, 4);
  EXPECT_EQ(objective_value(PairList{}, emb, {}, 3), 0u);
  auto pairs = PairList::from_pairs({{0, 1}, {2, 3}, {4, 9}}, 12);
  auto sel = select_random(pairs, 3);
  EXPECT_EQ(objective_value(pairs, emb, sel, 12), 3u * 12u);
}

TEST(Select, FillsObjectiveAndRejectsNone) {
  auto emb = oracle::random_set(25, 4, 5);
  auto pairs = PairList::from_pairs({{0, 1}, {2, 3}}, 25);
  for (auto s : {Strategy::random, Strategy::partial, Strategy::optimal, Strategy::brute_force}) {
    auto sel = select(s, pairs, emb, 4, 7);
    EXPECT_EQ(sel.strategy, s);
    ASSERT_TRUE(sel.objective.has_value());
    EXPECT_EQ(*sel.objective, objective_value(pairs, emb, sel, 4));
  }
  EXPECT_THROW(select(Strategy::none, pairs, emb, 4, 0), ContractError);
}
