#include "prefine/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <string>
#include <unordered_set>

#include "prefine/error.hpp"

namespace prefine {

EmbeddingSet EmbeddingSet::from_rows(std::size_t n, std::size_t dim,
                                     std::vector<float> features,
                                     std::vector<SampleMeta> meta,
                                     BuildStats* stats) {
  if (n == 0 || dim == 0) {
    throw InputError("embedding set must have n >= 1 and dim >= 1");
  }
  if (features.size() != n * dim) {
    throw InputError("feature payload has " + std::to_string(features.size()) +
                     " values, expected " + std::to_string(n * dim));
  }
  if (meta.empty()) {
    meta.resize(n);
    for (std::size_t i = 0; i < n; ++i) meta[i].sample_id = std::to_string(i);
  } else if (meta.size() != n) {
    throw InputError("metadata has " + std::to_string(meta.size()) +
                     " records but embeddings have " + std::to_string(n) + " rows");
  }

  std::unordered_set<std::string> seen;
  seen.reserve(n);
  for (const auto& m : meta) {
    if (!seen.insert(m.sample_id).second) {
      throw InputError("duplicate sample_id '" + m.sample_id + "'");
    }
  }

  std::size_t renormalized = 0;
  for (std::size_t i = 0; i < n; ++i) {
    float* r = features.data() + i * dim;
    double sq = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      if (!std::isfinite(r[c])) {
        throw InputError("non-finite value at row " + std::to_string(i) +
                         ", column " + std::to_string(c));
      }
      sq += static_cast<double>(r[c]) * r[c];
    }
    const double norm = std::sqrt(sq);
    if (norm == 0.0) {
      throw InputError("row " + std::to_string(i) + " has zero norm");
    }
    if (std::abs(norm - 1.0) > kNormTolerance) {
      for (std::size_t c = 0; c < dim; ++c) {
        r[c] = static_cast<float>(r[c] / norm);
      }
      ++renormalized;
    }
  }
  if (stats) stats->renormalized_rows = renormalized;

  EmbeddingSet out;
  out.n_ = n;
  out.dim_ = dim;
  out.features_ = std::move(features);
  out.meta_ = std::move(meta);
  return out;
}

bool EmbeddingSet::has_identities() const {
  return !meta_.empty() && std::all_of(meta_.begin(), meta_.end(), [](const SampleMeta& m) {
           return m.true_identity.has_value();
         });
}

void EmbeddingSet::copy_row(Index src, Index dst) {
  if (src == dst) return;
  std::copy_n(features_.begin() + static_cast<std::ptrdiff_t>(src * dim_), dim_,
              features_.begin() + static_cast<std::ptrdiff_t>(dst * dim_));
}

double cosine_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw InputError("cosine_distance: dimension mismatch (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  }
  if (a.data() == b.data() ||
      std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0) {
    return 0.0;
  }
  double dot = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    dot += static_cast<double>(a[c]) * static_cast<double>(b[c]);
  }
  return std::clamp(1.0 - dot, 0.0, 2.0);
}

PairList PairList::from_pairs(const std::vector<std::pair<Index, Index>>& raw,
                              std::size_t n) {
  PairList out;
  std::set<std::pair<Index, Index>> seen;
  for (std::size_t p = 0; p < raw.size(); ++p) {
    auto [i, j] = raw[p];
    if (i == j) {
      throw InputError("self-pair (" + std::to_string(i) + "," + std::to_string(j) +
                       ") at position " + std::to_string(p));
    }
    if (i >= n || j >= n) {
      throw InputError("pair (" + std::to_string(i) + "," + std::to_string(j) +
                       ") at position " + std::to_string(p) + " out of range for n=" +
                       std::to_string(n));
    }
    if (i > j) std::swap(i, j);
    if (seen.emplace(i, j).second) out.pairs_.push_back({i, j});
  }
  return out;
}

RetrievalSplit default_split(const EmbeddingSet& emb) {
  RetrievalSplit split;
  std::unordered_set<std::int64_t> seen;
  for (Index i = 0; i < emb.size(); ++i) {
    const auto& id = emb.meta(i).true_identity;
    if (!id) continue;
    if (seen.insert(*id).second) {
      split.query.push_back(i);
    } else {
      split.gallery.push_back(i);
    }
  }
  return split;
}

}  // namespace prefine
