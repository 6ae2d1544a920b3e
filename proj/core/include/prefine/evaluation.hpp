#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "prefine/clustering.hpp"
#include "prefine/embeddings.hpp"
#include "prefine/reranking.hpp"

namespace prefine {

inline constexpr std::array<std::size_t, 3> kCmcRanks{1, 5, 10};

struct RetrievalMetrics {
  double mean_ap = 0.0;
  std::array<double, kCmcRanks.size()> cmc{};  // aligned with kCmcRanks
  std::size_t queries_evaluated = 0;
  std::size_t queries_without_positives = 0;

  double cmc_at(std::size_t rank) const;
};

// Throws InputError if an index is out of range, a referenced sample lacks
// true_identity, or the same sample sits on both sides.
void validate_split(const EmbeddingSet& emb, const RetrievalSplit& split);

// Cross-camera protocol: for each query the gallery is ranked by ascending
// distance (ties by index) after dropping entries that share both identity
// and camera with the query. Queries left without a positive are skipped and
// counted.
RetrievalMetrics evaluate_retrieval(const EmbeddingSet& emb, const RetrievalSplit& split);
// Same protocol over an arbitrary distance matrix (e.g. re-ranked Jaccard).
RetrievalMetrics evaluate_retrieval(const EmbeddingSet& emb, const RetrievalSplit& split,
                                    const SquareMatrix& distances);

using Truth = std::vector<std::optional<std::int64_t>>;
Truth truth_of(const EmbeddingSet& emb);

struct PairwiseScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Pair-counting F1 between pseudo-labels and ground truth. Noise samples act
// as singletons; samples without a true identity are ignored.
PairwiseScores pairwise_scores(const PseudoLabels& labels, const Truth& truth);
double pairwise_f(const PseudoLabels& labels, const Truth& truth);

struct PairAgreement {
  double value = 1.0;            // agreed / all pairs
  double non_noise_value = 1.0;  // agreed / pairs with no noise member
  std::size_t pairs = 0;
  std::size_t agreed = 0;
  std::size_t noise_pairs = 0;
  bool empty = true;  // no pairs: values reported as 1.0
};

// A pair agrees when both members carry the same non-noise label.
PairAgreement pair_agreement(const PseudoLabels& labels, const PairList& pairs);

}  // namespace prefine
