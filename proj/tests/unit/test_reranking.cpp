#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "prefine/error.hpp"
#include "prefine/parallel.hpp"
#include "prefine/reranking.hpp"

using namespace prefine;

namespace {

EmbeddingSet on_arc(const std::vector<double>& angles) {
  std::vector<std::vector<float>> r;
  for (double a : angles) r.push_back({float(std::cos(a)), float(std::sin(a))});
  return oracle::rows(r);
}

std::vector<Index> all_indices(std::size_t n) {
  std::vector<Index> v(n);
  std::iota(v.begin(), v.end(), Index{0});
  return v;
}

}  // namespace

TEST(Knn, TiesBrokenByIndex) {
  auto emb = oracle::rows({{1, 0}, {1, 0}, {1, 0}});
  auto nbrs = compute_knn(emb, 2);
  EXPECT_EQ(nbrs.knn[0], (std::vector<Index>{0, 1}));
  EXPECT_EQ(nbrs.knn[2], (std::vector<Index>{0, 1}));
}

TEST(Knn, PointsOnArc) {
  auto nbrs = compute_knn(on_arc({0.0, 0.3, 0.6, 0.9}), 2);
  EXPECT_EQ(nbrs.knn[0], (std::vector<Index>{0, 1}));
  EXPECT_EQ(nbrs.knn[3], (std::vector<Index>{3, 2}));
}

TEST(Knn, FullNeighborhood) {
  auto emb = oracle::random_set(15, 6, 2);
  auto nbrs = compute_neighbor_sets(emb, 15);
  for (Index i = 0; i < 15; ++i) {
    auto sorted = nbrs.knn[i];
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, all_indices(15));
    EXPECT_EQ(nbrs.reciprocal[i], all_indices(15));
  }
}

TEST(Knn, RejectsBadK) {
  auto emb = oracle::random_set(5, 3, 1);
  EXPECT_THROW(compute_knn(emb, 0), ParameterError);
  EXPECT_THROW(compute_knn(emb, 6), ParameterError);
}

TEST(Knn, LargeAndSmallKPathsAgreeWithFullSort) {
  auto emb = oracle::random_set(200, 8, 9);
  const auto d = oracle::distances(emb);
  for (std::size_t k : {1, 5, 20, 25, 26, 199, 200}) {
    auto nbrs = compute_knn(emb, k);
    for (Index i = 0; i < emb.size(); i += 13) EXPECT_EQ(nbrs.knn[i], oracle::knn(d, i, k)) << k;
  }
}

TEST(Reciprocal, MutualConfigurationEqualsKnn) {
  // two tight, well separated pairs
  auto emb = on_arc({0.0, 0.05, 1.5, 1.55});
  auto nbrs = compute_neighbor_sets(emb, 2);
  for (Index i = 0; i < 4; ++i) {
    auto sorted = nbrs.knn[i];
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(nbrs.reciprocal[i], sorted);
  }
}

TEST(Reciprocal, HubIsExcludedWhenNotReciprocal) {
  auto emb = oracle::random_set(20, 4, 17);
  const std::size_t k = 4;
  auto nbrs = compute_neighbor_sets(emb, k);
  auto ref = oracle::rerank(emb, k);
  std::size_t hub_cases = 0;
  for (Index i = 0; i < 20; ++i) {
    EXPECT_EQ(nbrs.reciprocal[i], ref.reciprocal[i]);
    for (Index j : nbrs.knn[i]) {
      const auto& nj = nbrs.knn[j];
      if (std::find(nj.begin(), nj.end(), i) == nj.end()) {
        ++hub_cases;
        const auto& ri = nbrs.reciprocal[i];
        EXPECT_EQ(std::find(ri.begin(), ri.end(), j), ri.end());
      }
    }
  }
  EXPECT_GT(hub_cases, 0u);
}

TEST(Reciprocal, SymmetricAndMonotoneInK) {
  auto emb = oracle::random_set(60, 5, 4);
  std::vector<std::vector<Index>> prev;
  for (std::size_t k = 1; k <= 12; ++k) {
    auto nbrs = compute_neighbor_sets(emb, k);
    for (Index i = 0; i < 60; ++i) {
      for (Index j : nbrs.reciprocal[i]) {
        const auto& rj = nbrs.reciprocal[j];
        EXPECT_TRUE(std::binary_search(rj.begin(), rj.end(), i));
      }
      if (!prev.empty()) {
        EXPECT_TRUE(std::includes(nbrs.reciprocal[i].begin(), nbrs.reciprocal[i].end(),
                                  prev[i].begin(), prev[i].end()));
      }
    }
    prev = nbrs.reciprocal;
  }
}

TEST(Reciprocal, DuplicateRowsShareEverything) {
  // rows 1 and 4 coincide; k = 3 cuts between them for some rows
  auto emb = oracle::rows({{1, 0, 0}, {0.9f, 0.1f, 0}, {0.8f, 0.3f, 0.1f}, {0.7f, 0.2f, 0.4f},
                           {0.9f, 0.1f, 0}, {0, 1, 0}, {0, 0.9f, 0.2f}});
  for (std::size_t k = 1; k <= 7; ++k) {
    auto r = rerank(emb, k);
    EXPECT_EQ(r.neighbors.reciprocal[1], r.neighbors.reciprocal[4]) << k;
    EXPECT_EQ(r.jaccard(1, 4), 0.0) << k;
    EXPECT_EQ(r.jaccard(4, 1), 0.0) << k;
  }
}

TEST(Weights, DiagonalAndDistanceHalf) {
  const float s = std::sqrt(3.0f) / 2.0f;
  auto emb = oracle::rows({{1, 0}, {0.5f, s}});
  auto nbrs = compute_neighbor_sets(emb, 2);
  auto m = weight_matrix(emb, nbrs);
  EXPECT_EQ(m.at(0, 0), 1.0);
  EXPECT_NEAR(m.at(0, 1), std::exp(-0.5), 1e-7);
  EXPECT_NEAR(m.at(0, 1), 0.6065, 1e-4);
}

TEST(Weights, ZeroOutsideReciprocalSet) {
  auto emb = oracle::random_set(30, 4, 8);
  auto nbrs = compute_neighbor_sets(emb, 3);
  auto m = weight_matrix(cosine_distance_matrix(emb), nbrs);
  for (Index i = 0; i < 30; ++i) {
    for (Index j = 0; j < 30; ++j) {
      const auto& r = nbrs.reciprocal[i];
      if (!std::binary_search(r.begin(), r.end(), j)) EXPECT_EQ(m.at(i, j), 0.0);
    }
  }
}

TEST(Jaccard, HandExample) {
  WeightMatrix m;
  m.rows = {{{0, 1.0}, {1, 0.5}}, {{0, 0.5}, {1, 1.0}}, {{2, 1.0}}};
  auto j = jaccard(m);
  EXPECT_DOUBLE_EQ(j(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(j(1, 0), 0.5);
  EXPECT_EQ(j(0, 2), 1.0);
  EXPECT_EQ(j(2, 2), 0.0);
}

TEST(Jaccard, MatchesDenseOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto emb = oracle::random_set(25 + seed, 6, 100 + seed);
    const std::size_t k = 2 + seed % 7;
    auto r = rerank(emb, k);
    auto ref = oracle::rerank(emb, k);
    for (Index i = 0; i < emb.size(); ++i) {
      for (Index j = 0; j < emb.size(); ++j) {
        EXPECT_NEAR(r.jaccard(i, j), ref.jaccard[i][j], 1e-12);
        EXPECT_EQ(r.jaccard(i, j), r.jaccard(j, i));
      }
    }
  }
}

TEST(Jaccard, ThreadCountDoesNotChangeBits) {
  auto emb = oracle::random_set(300, 16, 6);
  set_thread_count(1);
  auto a = rerank(emb, 10);
  set_thread_count(4);
  auto b = rerank(emb, 10);
  set_thread_count(1);
  EXPECT_EQ(a.jaccard, b.jaccard);
  EXPECT_EQ(a.neighbors.reciprocal, b.neighbors.reciprocal);
}

TEST(Parallel, RejectsNonPositive) { EXPECT_THROW(set_thread_count(0), ParameterError); }
