#pragma once

// Slow, direct reference implementations used by the tests. They share no
// code with the library beyond EmbeddingSet for input.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "prefine/embeddings.hpp"
#include "prefine/rng.hpp"

namespace oracle {

using Dense = std::vector<std::vector<double>>;

inline double dot(const prefine::EmbeddingSet& emb, std::size_t i, std::size_t j) {
  const auto a = emb.row(i);
  const auto b = emb.row(j);
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += double(a[c]) * double(b[c]);
  return s;
}

inline Dense distances(const prefine::EmbeddingSet& emb) {
  const auto n = emb.size();
  Dense d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      d[i][j] = i == j ? 0.0 : std::clamp(1.0 - dot(emb, i, j), 0.0, 2.0);
  return d;
}

// Full sort by (distance, index), first k.
inline std::vector<std::size_t> knn(const Dense& d, std::size_t i, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t j = 0; j < d.size(); ++j) all.push_back({d[i][j], j});
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < k; ++r) out.push_back(all[r].second);
  return out;
}

struct Rerank {
  std::vector<std::vector<std::size_t>> knn;
  std::vector<std::vector<std::size_t>> reciprocal;  // ascending
  Dense weights;
  Dense jaccard;
};

// Textbook definition, valid when no two rows coincide.
inline Rerank rerank(const prefine::EmbeddingSet& emb, std::size_t k) {
  const auto n = emb.size();
  const auto d = distances(emb);
  Rerank r;
  for (std::size_t i = 0; i < n; ++i) r.knn.push_back(knn(d, i, k));
  auto contains = [](const std::vector<std::size_t>& v, std::size_t x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  r.reciprocal.resize(n);
  r.weights.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (contains(r.knn[i], j) && contains(r.knn[j], i)) {
        r.reciprocal[i].push_back(j);
        r.weights[i][j] = std::exp(-d[i][j]);
      }
    }
  }
  r.jaccard.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double lo = 0.0, hi = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        lo += std::min(r.weights[i][c], r.weights[j][c]);
        hi += std::max(r.weights[i][c], r.weights[j][c]);
      }
      r.jaccard[i][j] = hi == 0.0 ? 0.0 : 1.0 - lo / hi;
    }
  }
  return r;
}

struct Retrieval {
  double mean_ap = 0.0;
  double cmc1 = 0.0, cmc5 = 0.0, cmc10 = 0.0;
  std::size_t evaluated = 0;
};

// AP by counting: for every positive g, precision at its rank is the number
// of positives ranked no later than g over g's rank. Ranks come from pairwise
// comparisons instead of a sort.
inline Retrieval retrieval(const prefine::EmbeddingSet& emb, const std::vector<std::size_t>& query,
                           const std::vector<std::size_t>& gallery, const Dense& d) {
  Retrieval out;
  for (std::size_t q : query) {
    const auto& qm = emb.meta(q);
    std::vector<std::size_t> pool;
    for (std::size_t g : gallery) {
      const auto& gm = emb.meta(g);
      if (g == q) continue;
      if (gm.true_identity == qm.true_identity && gm.camera_id == qm.camera_id) continue;
      pool.push_back(g);
    }
    auto before = [&](std::size_t a, std::size_t b) {
      return d[q][a] < d[q][b] || (d[q][a] == d[q][b] && a < b);
    };
    auto rank = [&](std::size_t g) {
      std::size_t r = 1;
      for (std::size_t h : pool) r += before(h, g);
      return r;
    };
    std::vector<std::size_t> positives;
    for (std::size_t g : pool)
      if (emb.meta(g).true_identity == qm.true_identity) positives.push_back(g);
    if (positives.empty()) continue;
    double ap = 0.0;
    std::size_t best = pool.size() + 1;
    for (std::size_t g : positives) {
      const auto rg = rank(g);
      std::size_t upto = 0;
      for (std::size_t h : positives) upto += rank(h) <= rg;
      ap += double(upto) / double(rg);
      best = std::min(best, rg);
    }
    out.mean_ap += ap / double(positives.size());
    out.cmc1 += best <= 1;
    out.cmc5 += best <= 5;
    out.cmc10 += best <= 10;
    ++out.evaluated;
  }
  if (out.evaluated) {
    const double e = double(out.evaluated);
    out.mean_ap /= e;
    out.cmc1 /= e;
    out.cmc5 /= e;
    out.cmc10 /= e;
  }
  return out;
}

// Pair-counting F over all i < j; noise (-1) never shares a cluster.
inline double pairwise_f(const std::vector<std::int32_t>& labels,
                         const std::vector<std::optional<std::int64_t>>& truth) {
  double both = 0, pred = 0, real = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!truth[i]) continue;
    for (std::size_t j = i + 1; j < labels.size(); ++j) {
      if (!truth[j]) continue;
      const bool p = labels[i] != -1 && labels[i] == labels[j];
      const bool t = *truth[i] == *truth[j];
      pred += p;
      real += t;
      both += p && t;
    }
  }
  if (pred == 0 && real == 0) return 1.0;
  const double precision = pred > 0 ? both / pred : 0.0;
  const double recall = real > 0 ? both / real : 0.0;
  return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

// n random unit rows with optional identities/cameras.
inline prefine::EmbeddingSet random_set(std::size_t n, std::size_t dim, std::uint64_t seed,
                                        std::size_t identities = 0, std::size_t cameras = 1) {
  prefine::SplitMix64 rng(seed);
  std::vector<float> f(n * dim);
  for (auto& x : f) x = static_cast<float>(rng.normal());
  std::vector<prefine::SampleMeta> meta;
  for (std::size_t i = 0; i < n; ++i) {
    prefine::SampleMeta m;
    m.sample_id = "r" + std::to_string(i);
    m.camera_id = static_cast<std::int64_t>(rng.below(cameras));
    if (identities) m.true_identity = static_cast<std::int64_t>(rng.below(identities));
    meta.push_back(m);
  }
  return prefine::EmbeddingSet::from_rows(n, dim, std::move(f), std::move(meta));
}

// Rows given as plain vectors (normalized by from_rows).
inline prefine::EmbeddingSet rows(const std::vector<std::vector<float>>& r) {
  std::vector<float> f;
  for (const auto& row : r) f.insert(f.end(), row.begin(), row.end());
  return prefine::EmbeddingSet::from_rows(r.size(), r.front().size(), std::move(f));
}

}  // namespace oracle
