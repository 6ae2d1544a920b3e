#include "prefine/evaluation.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <string>
#include <unordered_set>
#include <utility>

#include "prefine/error.hpp"

namespace prefine {

double RetrievalMetrics::cmc_at(std::size_t rank) const {
  for (std::size_t r = 0; r < kCmcRanks.size(); ++r) {
    if (kCmcRanks[r] == rank) return cmc[r];
  }
  throw ParameterError("CMC is only tracked at ranks 1, 5 and 10");
}

void validate_split(const EmbeddingSet& emb, const RetrievalSplit& split) {
  for (const auto* side : {&split.query, &split.gallery}) {
    for (Index i : *side) {
      if (i >= emb.size()) {
        throw InputError("split references sample " + std::to_string(i) +
                         " but n=" + std::to_string(emb.size()));
      }
      if (!emb.meta(i).true_identity) {
        throw InputError("split sample '" + emb.meta(i).sample_id + "' has no true_identity");
      }
    }
  }
  std::unordered_set<Index> gallery(split.gallery.begin(), split.gallery.end());
  for (Index q : split.query) {
    if (gallery.count(q)) {
      throw InputError("sample '" + emb.meta(q).sample_id + "' is both query and gallery");
    }
  }
}

namespace {

struct QueryResult {
  bool has_positive = false;
  double ap = 0.0;
  std::size_t first_hit_rank = 0;  // 1-based
};

template <typename DistFn>
RetrievalMetrics evaluate(const EmbeddingSet& emb, const RetrievalSplit& split, DistFn&& dist) {
  validate_split(emb, split);
  std::vector<QueryResult> results(split.query.size());

  const auto queries = static_cast<std::ptrdiff_t>(split.query.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t sq = 0; sq < queries; ++sq) {
    const Index q = split.query[static_cast<std::size_t>(sq)];
    const auto& qm = emb.meta(q);
    std::vector<std::pair<double, Index>> ranked;
    ranked.reserve(split.gallery.size());
    for (Index g : split.gallery) {
      const auto& gm = emb.meta(g);
      if (g == q || (gm.true_identity == qm.true_identity && gm.camera_id == qm.camera_id)) {
        continue;
      }
      ranked.emplace_back(dist(q, g), g);
    }
    std::sort(ranked.begin(), ranked.end());

    auto& res = results[static_cast<std::size_t>(sq)];
    std::size_t hits = 0;
    double precision_sum = 0.0;
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      if (emb.meta(ranked[r].second).true_identity != qm.true_identity) continue;
      ++hits;
      if (hits == 1) res.first_hit_rank = r + 1;
      precision_sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
    res.has_positive = hits > 0;
    if (res.has_positive) res.ap = precision_sum / static_cast<double>(hits);
  }

  RetrievalMetrics m;
  double ap_sum = 0.0;
  std::array<std::size_t, kCmcRanks.size()> within{};
  for (const auto& res : results) {
    if (!res.has_positive) {
      ++m.queries_without_positives;
      continue;
    }
    ++m.queries_evaluated;
    ap_sum += res.ap;
    for (std::size_t r = 0; r < kCmcRanks.size(); ++r) {
      within[r] += (res.first_hit_rank <= kCmcRanks[r]);
    }
  }
  if (m.queries_evaluated > 0) {
    const auto denom = static_cast<double>(m.queries_evaluated);
    m.mean_ap = ap_sum / denom;
    for (std::size_t r = 0; r < kCmcRanks.size(); ++r) {
      m.cmc[r] = static_cast<double>(within[r]) / denom;
    }
  }
  return m;
}

double choose2(std::size_t c) {
  const auto x = static_cast<double>(c);
  return x * (x - 1.0) / 2.0;
}

}  // namespace

RetrievalMetrics evaluate_retrieval(const EmbeddingSet& emb, const RetrievalSplit& split) {
  return evaluate(emb, split,
                  [&](Index q, Index g) { return cosine_distance(emb.row(q), emb.row(g)); });
}

RetrievalMetrics evaluate_retrieval(const EmbeddingSet& emb, const RetrievalSplit& split,
                                    const SquareMatrix& distances) {
  if (distances.size() != emb.size()) {
    throw ContractError("distance matrix size does not match embedding set");
  }
  return evaluate(emb, split, [&](Index q, Index g) { return distances(q, g); });
}

Truth truth_of(const EmbeddingSet& emb) {
  Truth t;
  t.reserve(emb.size());
  for (const auto& m : emb.meta()) t.push_back(m.true_identity);
  return t;
}

PairwiseScores pairwise_scores(const PseudoLabels& labels, const Truth& truth) {
  if (labels.size() != truth.size()) {
    throw ContractError("pairwise_f: label and truth lengths differ");
  }
  // Contingency counts; noise samples never share a cluster.
  std::map<std::int32_t, std::size_t> cluster_sizes;
  std::map<std::int64_t, std::size_t> identity_sizes;
  std::map<std::pair<std::int32_t, std::int64_t>, std::size_t> cells;
  std::size_t clustered = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!truth[i]) continue;
    ++identity_sizes[*truth[i]];
    if (labels.labels[i] == kNoise) continue;
    ++clustered;
    ++cluster_sizes[labels.labels[i]];
    ++cells[{labels.labels[i], *truth[i]}];
  }
  if (clustered == 0) {
    std::cerr << "warning: pairwise_f: no non-noise samples, reporting 0\n";
    return {};
  }

  double same_both = 0.0, same_cluster = 0.0, same_identity = 0.0;
  for (const auto& [key, c] : cells) same_both += choose2(c);
  for (const auto& [key, c] : cluster_sizes) same_cluster += choose2(c);
  for (const auto& [key, c] : identity_sizes) same_identity += choose2(c);

  PairwiseScores s;
  if (same_cluster == 0.0 && same_identity == 0.0) {
    // all singletons on both sides: the partitions agree
    s.precision = s.recall = s.f1 = 1.0;
    return s;
  }
  s.precision = same_cluster > 0.0 ? same_both / same_cluster : 0.0;
  s.recall = same_identity > 0.0 ? same_both / same_identity : 0.0;
  s.f1 = (s.precision + s.recall) > 0.0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

double pairwise_f(const PseudoLabels& labels, const Truth& truth) {
  return pairwise_scores(labels, truth).f1;
}

PairAgreement pair_agreement(const PseudoLabels& labels, const PairList& pairs) {
  PairAgreement a;
  a.pairs = pairs.size();
  a.empty = pairs.empty();
  if (a.empty) return a;
  for (const auto& p : pairs) {
    const auto li = labels.labels.at(p.first);
    const auto lj = labels.labels.at(p.second);
    if (li == kNoise || lj == kNoise) {
      ++a.noise_pairs;
      continue;
    }
    a.agreed += (li == lj);
  }
  a.value = static_cast<double>(a.agreed) / static_cast<double>(a.pairs);
  const auto clean = a.pairs - a.noise_pairs;
  a.non_noise_value = clean > 0 ? static_cast<double>(a.agreed) / static_cast<double>(clean) : 1.0;
  return a;
}

}  // namespace prefine
