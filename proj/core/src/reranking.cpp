#include "prefine/reranking.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

#include "prefine/error.hpp"

namespace prefine {

DistanceMatrix cosine_distance_matrix(const EmbeddingSet& emb) {
  const auto n = emb.size();
  DistanceMatrix dist(n);
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t si = 0; si < rows; ++si) {
    const auto i = static_cast<Index>(si);
    const auto fi = emb.row(i);
    for (Index j = i + 1; j < n; ++j) {
      const double d = cosine_distance(fi, emb.row(j));
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  return dist;
}

std::vector<Index> duplicate_classes(const EmbeddingSet& emb) {
  const auto n = emb.size();
  const auto bytes = emb.dim() * sizeof(float);
  auto cmp = [&](Index a, Index b) {
    return std::memcmp(emb.row(a).data(), emb.row(b).data(), bytes);
  };
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return cmp(a, b) < 0; });

  std::vector<Index> cls(n);
  for (std::size_t s = 0; s < n;) {
    std::size_t e = s + 1;
    while (e < n && cmp(order[s], order[e]) == 0) ++e;
    // stable sort keeps indices ascending inside a run
    for (std::size_t t = s; t < e; ++t) cls[order[t]] = order[s];
    s = e;
  }
  return cls;
}

namespace detail {

std::vector<std::vector<Index>> reciprocal_sets(const std::vector<std::vector<Index>>& knn,
                                                const std::vector<Index>& duplicate_class) {
  const auto n = knn.size();
  std::vector<std::vector<Index>> members(n);
  for (Index i = 0; i < n; ++i) members[duplicate_class[i]].push_back(i);

  // Classes present in each N(x, k), sorted for binary search.
  std::vector<std::vector<Index>> classes(n);
  for (Index x = 0; x < n; ++x) {
    auto& c = classes[x];
    c.reserve(knn[x].size());
    for (Index y : knn[x]) c.push_back(duplicate_class[y]);
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
  }

  std::vector<std::vector<Index>> out(n);
  for (Index i = 0; i < n; ++i) {
    const Index ci = duplicate_class[i];
    auto& r = out[i];
    for (Index c : classes[i]) {
      for (Index j : members[c]) {
        if (std::binary_search(classes[j].begin(), classes[j].end(), ci)) r.push_back(j);
      }
    }
    std::sort(r.begin(), r.end());
  }
  return out;
}

}  // namespace detail

NeighborSets compute_knn(const DistanceMatrix& dist, std::vector<Index> duplicate_class,
                         std::size_t k) {
  const auto n = dist.size();
  if (k < 1 || k > n) {
    throw ParameterError("k must satisfy 1 <= k <= n (k=" + std::to_string(k) +
                         ", n=" + std::to_string(n) + ")");
  }
  if (duplicate_class.size() != n) {
    throw ContractError("duplicate class vector does not match distance matrix");
  }
  NeighborSets out;
  out.k = k;
  out.duplicate_class = std::move(duplicate_class);
  out.knn.resize(n);
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t si = 0; si < rows; ++si) {
    const auto i = static_cast<Index>(si);
    const auto row = dist.row(i);
    out.knn[i] = detail::k_nearest(n, k, [&](Index j) { return row[j]; });
  }
  return out;
}

NeighborSets compute_knn(const EmbeddingSet& emb, std::size_t k) {
  if (k < 1 || k > emb.size()) {
    throw ParameterError("k must satisfy 1 <= k <= n (k=" + std::to_string(k) +
                         ", n=" + std::to_string(emb.size()) + ")");
  }
  return compute_knn(cosine_distance_matrix(emb), duplicate_classes(emb), k);
}

void compute_reciprocal(NeighborSets& nbrs) {
  nbrs.reciprocal = detail::reciprocal_sets(nbrs.knn, nbrs.duplicate_class);
}

NeighborSets compute_neighbor_sets(const EmbeddingSet& emb, std::size_t k) {
  auto nbrs = compute_knn(emb, k);
  compute_reciprocal(nbrs);
  return nbrs;
}

double WeightMatrix::at(Index i, Index j) const {
  const auto& r = rows[i];
  auto it = std::lower_bound(r.begin(), r.end(), j,
                             [](const Entry& e, Index col) { return e.column < col; });
  return (it != r.end() && it->column == j) ? it->weight : 0.0;
}

WeightMatrix weight_matrix(const DistanceMatrix& dist, const NeighborSets& nbrs) {
  if (nbrs.reciprocal.size() != dist.size()) {
    throw ContractError("weight_matrix: reciprocal sets missing or sized differently");
  }
  WeightMatrix m;
  m.rows.resize(dist.size());
  for (Index i = 0; i < dist.size(); ++i) {
    auto& row = m.rows[i];
    row.reserve(nbrs.reciprocal[i].size());
    for (Index j : nbrs.reciprocal[i]) row.push_back({j, std::exp(-dist(i, j))});
  }
  return m;
}

WeightMatrix weight_matrix(const EmbeddingSet& emb, const NeighborSets& nbrs) {
  if (nbrs.reciprocal.size() != emb.size()) {
    throw ContractError("weight_matrix: reciprocal sets missing or sized differently");
  }
  WeightMatrix m;
  m.rows.resize(emb.size());
  for (Index i = 0; i < emb.size(); ++i) {
    auto& row = m.rows[i];
    for (Index j : nbrs.reciprocal[i]) {
      row.push_back({j, std::exp(-cosine_distance(emb.row(i), emb.row(j)))});
    }
  }
  return m;
}

namespace {

// 1 - sum(min)/sum(max) over the union of two sorted sparse rows. Columns
// absent from both rows contribute exact zeros to the dense sum, so walking
// the union in ascending order reproduces the dense evaluation bit-for-bit.
double jaccard_rows(const std::vector<WeightMatrix::Entry>& a,
                    const std::vector<WeightMatrix::Entry>& b) {
  double num = 0.0;
  double den = 0.0;
  std::size_t p = 0, q = 0;
  while (p < a.size() || q < b.size()) {
    if (q == b.size() || (p < a.size() && a[p].column < b[q].column)) {
      den += a[p++].weight;
    } else if (p == a.size() || b[q].column < a[p].column) {
      den += b[q++].weight;
    } else {
      num += std::min(a[p].weight, b[q].weight);
      den += std::max(a[p].weight, b[q].weight);
      ++p;
      ++q;
    }
  }
  if (den == 0.0) return 0.0;  // two empty rows are identical
  return 1.0 - num / den;
}

}  // namespace

JaccardMatrix jaccard(const WeightMatrix& weights) {
  const auto n = weights.size();
  JaccardMatrix out(n, 1.0);

  // Inverted index: rows having a nonzero in each column. Rows with disjoint
  // supports keep the initial 1.0 (sum of minima is exactly 0).
  std::vector<std::vector<Index>> by_column(n);
  for (Index i = 0; i < n; ++i) {
    for (const auto& e : weights.rows[i]) by_column[e.column].push_back(i);
  }

  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel
  {
    std::vector<Index> stamp(n, n);
#pragma omp for schedule(dynamic, 8)
    for (std::ptrdiff_t si = 0; si < rows; ++si) {
      const auto i = static_cast<Index>(si);
      out(i, i) = 0.0;
      for (const auto& e : weights.rows[i]) {
        for (Index j : by_column[e.column]) {
          if (j <= i || stamp[j] == i) continue;
          stamp[j] = i;
          const double d = jaccard_rows(weights.rows[i], weights.rows[j]);
          out(i, j) = d;
          out(j, i) = d;
        }
      }
    }
  }
  return out;
}

RerankResult rerank(const EmbeddingSet& emb, std::size_t k) {
  RerankResult r;
  const auto dist = cosine_distance_matrix(emb);
  r.neighbors = compute_knn(dist, duplicate_classes(emb), k);
  compute_reciprocal(r.neighbors);
  r.weights = weight_matrix(dist, r.neighbors);
  r.jaccard = jaccard(r.weights);
  return r;
}

}  // namespace prefine
