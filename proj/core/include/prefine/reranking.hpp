#pragma once

// k-reciprocal re-ranking: cosine distances -> k-nearest sets -> k-reciprocal
// sets -> exponential weight matrix M -> Jaccard distance matrix.
//
//   M(i, j)  = exp(-d(i, j)) if j is a k-reciprocal neighbor of i, else 0
//   dJ(i, j) = 1 - sum_c min(M(i,c), M(j,c)) / sum_c max(M(i,c), M(j,c))
//
// Neighbor ranking is by (distance, index), so results are deterministic.
// Reciprocity is evaluated up to bit-identical rows: a row counts as present
// in N(x, k) when any row with the very same features is. Without duplicates
// this is the textbook definition; with them it guarantees that two identical
// rows receive identical M rows (and hence dJ = 0), whatever position the
// k-th neighbor cut falls at.

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "prefine/embeddings.hpp"

namespace prefine {

// Dense row-major n x n matrix of doubles.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), values_(n * n, fill) {}

  std::size_t size() const { return n_; }
  double& operator()(Index i, Index j) { return values_[i * n_ + j]; }
  double operator()(Index i, Index j) const { return values_[i * n_ + j]; }
  std::span<const double> row(Index i) const { return {values_.data() + i * n_, n_}; }
  std::span<const double> values() const { return values_; }

  bool operator==(const SquareMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

using DistanceMatrix = SquareMatrix;
using JaccardMatrix = SquareMatrix;

// All pairwise cosine distances; each unordered pair evaluated once.
DistanceMatrix cosine_distance_matrix(const EmbeddingSet& emb);

// Per-row class id = smallest index of a row with bit-identical features.
std::vector<Index> duplicate_classes(const EmbeddingSet& emb);

struct NeighborSets {
  std::size_t k = 0;
  // N(i, k): the k nearest rows by (distance, index); self normally first.
  std::vector<std::vector<Index>> knn;
  std::vector<Index> duplicate_class;
  // R(i, k), ascending. Empty until compute_reciprocal runs.
  std::vector<std::vector<Index>> reciprocal;

  std::size_t size() const { return knn.size(); }
  std::size_t reciprocal_count(Index i) const { return reciprocal[i].size(); }
};

namespace detail {

// Indices of the k smallest dist(j) over j in [0, n), ordered by (dist, j).
template <typename DistFn>
std::vector<Index> k_nearest(std::size_t n, std::size_t k, DistFn&& dist) {
  const auto take = std::min(k, n);
  if (take * 8 >= n) {
    std::vector<std::pair<double, Index>> order(n);
    for (Index j = 0; j < n; ++j) order[j] = {dist(j), j};
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                      order.end());
    std::vector<Index> out(take);
    for (std::size_t r = 0; r < take; ++r) out[r] = order[r].second;
    return out;
  }
  // Sorted running list of the best candidates; most j fail the first test.
  std::vector<std::pair<double, Index>> best;
  best.reserve(take + 1);
  for (Index j = 0; j < n; ++j) {
    const std::pair<double, Index> cand{dist(j), j};
    if (best.size() == take && !(cand < best.back())) continue;
    best.insert(std::upper_bound(best.begin(), best.end(), cand), cand);
    if (best.size() > take) best.pop_back();
  }
  std::vector<Index> out(take);
  for (std::size_t r = 0; r < take; ++r) out[r] = best[r].second;
  return out;
}

// R(i) for every row given knn lists and duplicate classes.
std::vector<std::vector<Index>> reciprocal_sets(const std::vector<std::vector<Index>>& knn,
                                                const std::vector<Index>& duplicate_class);

}  // namespace detail

// Throws ParameterError unless 1 <= k <= n.
NeighborSets compute_knn(const EmbeddingSet& emb, std::size_t k);
NeighborSets compute_knn(const DistanceMatrix& dist, std::vector<Index> duplicate_class,
                         std::size_t k);

void compute_reciprocal(NeighborSets& nbrs);

// compute_knn followed by compute_reciprocal.
NeighborSets compute_neighbor_sets(const EmbeddingSet& emb, std::size_t k);

// Sparse rows of M; entries ascending by column.
struct WeightMatrix {
  struct Entry {
    Index column;
    double weight;
  };
  std::vector<std::vector<Entry>> rows;

  std::size_t size() const { return rows.size(); }
  double at(Index i, Index j) const;
};

WeightMatrix weight_matrix(const DistanceMatrix& dist, const NeighborSets& nbrs);
WeightMatrix weight_matrix(const EmbeddingSet& emb, const NeighborSets& nbrs);

// Symmetric, zero diagonal, entries in [0, 1]. Sums run over columns in
// ascending order, so output does not depend on thread count.
JaccardMatrix jaccard(const WeightMatrix& weights);

struct RerankResult {
  NeighborSets neighbors;
  WeightMatrix weights;
  JaccardMatrix jaccard;
};

RerankResult rerank(const EmbeddingSet& emb, std::size_t k);

}  // namespace prefine
