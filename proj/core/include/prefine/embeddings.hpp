#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace prefine {

using Index = std::size_t;

struct SampleMeta {
  std::string sample_id;
  std::int64_t camera_id = 0;
  std::int64_t frame_index = 0;
  std::optional<std::int64_t> true_identity;

  bool operator==(const SampleMeta&) const = default;
};

// Row-major n x dim matrix of unit-norm f32 features plus per-row metadata.
//
// Construction through `from_rows` validates shape, rejects non-finite values
// and L2-normalizes every row whose norm is off by more than kNormTolerance.
// Rows already within tolerance are kept bit-for-bit so that save/load is a
// fixed point.
class EmbeddingSet {
 public:
  static constexpr double kNormTolerance = 1e-6;

  EmbeddingSet() = default;

  struct BuildStats {
    std::size_t renormalized_rows = 0;
  };

  static EmbeddingSet from_rows(std::size_t n, std::size_t dim,
                                std::vector<float> features,
                                std::vector<SampleMeta> meta = {},
                                BuildStats* stats = nullptr);

  std::size_t size() const { return n_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return n_ == 0; }

  std::span<const float> row(Index i) const {
    return {features_.data() + i * dim_, dim_};
  }
  std::span<const float> features() const { return features_; }
  const SampleMeta& meta(Index i) const { return meta_[i]; }
  const std::vector<SampleMeta>& meta() const { return meta_; }

  bool has_identities() const;

  // Copy of this set where row `dst` holds the features of row `src`.
  // Used by the merge step; metadata is untouched.
  void copy_row(Index src, Index dst);

  bool operator==(const EmbeddingSet&) const = default;

 private:
  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> features_;
  std::vector<SampleMeta> meta_;
};

// 1 - <a, b> for unit vectors, accumulated in double in ascending component
// order and clamped to [0, 2]. Bit-identical inputs return exactly 0.
double cosine_distance(std::span<const float> a, std::span<const float> b);

struct IndexPair {
  Index first = 0;   // always < second
  Index second = 0;

  bool operator==(const IndexPair&) const = default;
};

// Same-person pair list. Stored canonically (first < second), duplicates
// dropped, list order is the processing order.
class PairList {
 public:
  PairList() = default;

  // Canonicalizes and deduplicates; throws InputError on i == j or index >= n.
  static PairList from_pairs(const std::vector<std::pair<Index, Index>>& raw,
                             std::size_t n);

  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const IndexPair& operator[](std::size_t p) const { return pairs_[p]; }
  auto begin() const { return pairs_.begin(); }
  auto end() const { return pairs_.end(); }
  const std::vector<IndexPair>& pairs() const { return pairs_; }

  bool operator==(const PairList&) const = default;

 private:
  std::vector<IndexPair> pairs_;
};

// Query/gallery partition used by retrieval evaluation.
struct RetrievalSplit {
  std::vector<Index> query;
  std::vector<Index> gallery;

  bool operator==(const RetrievalSplit&) const = default;
};

struct DatasetBundle {
  EmbeddingSet embeddings;
  PairList pairs;
  std::optional<RetrievalSplit> split;

  double pair_ratio() const {
    return embeddings.empty() ? 0.0
                              : static_cast<double>(pairs.size()) /
                                    static_cast<double>(embeddings.size());
  }
};

// One query per identity (its first sample), everything else in the gallery.
// Samples without identity are left out of both sides.
RetrievalSplit default_split(const EmbeddingSet& emb);

}  // namespace prefine
