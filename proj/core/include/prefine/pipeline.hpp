#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "prefine/clustering.hpp"
#include "prefine/embeddings.hpp"
#include "prefine/evaluation.hpp"
#include "prefine/pair_constraints.hpp"
#include "prefine/synthgen.hpp"

namespace prefine {

struct RefineParams {
  std::size_t k = 20;
  double eps = 0.6;
  std::size_t min_pts = 4;
  Strategy strategy = Strategy::optimal;
  std::uint64_t seed = 0;
  bool jaccard_eval = false;  // also score retrieval on re-ranked distances

  void validate() const;
};

struct RefineResult {
  std::optional<Selection> selection;  // absent for Strategy::none
  EmbeddingSet merged;
  JaccardMatrix jaccard;
  PseudoLabels labels;
  std::optional<RetrievalMetrics> retrieval;
  std::optional<RetrievalMetrics> retrieval_jaccard;
  std::optional<PairwiseScores> pairwise;
  std::optional<PairAgreement> agreement;
};

// One refinement pass over fixed embeddings:
// select + merge -> re-rank -> DBSCAN -> relabel -> metrics.
// Strategy::none is the unconstrained baseline and never touches bundle.pairs.
RefineResult refine_bundle(const DatasetBundle& bundle, const RefineParams& params);

struct PipelineConfig {
  RefineParams params;
  std::filesystem::path embeddings;
  std::filesystem::path pairs;  // required unless strategy is none
  std::filesystem::path split;  // optional
  std::filesystem::path out_dir = "out";
  bool dump_jaccard = false;
};

// File-level driver. Writes into out_dir:
//   labels.csv        every sample, -1 for noise
//   train_labels.csv  non-noise samples only
//   selection.csv     pair_index,i,j,chosen (strategies other than none)
//   report.json       parameters, input digests, stage digests, metrics
//   jaccard.prfy      optional dump of the re-ranked distance matrix
// Nothing timing- or thread-dependent goes into any output. On failure the
// files written so far are removed and the error names the failing stage.
RefineResult run_refinement(const PipelineConfig& cfg);

// Serialized reports (stable key order, 2-space indent).
std::string selection_csv(const PairList& pairs, const Selection& sel);
std::string selection_report_json(const Selection& sel, std::size_t k, std::uint64_t seed);
std::string cluster_report_json(const PseudoLabels& labels, double eps, std::size_t min_pts);
std::string metrics_report_json(const std::optional<RetrievalMetrics>& retrieval,
                                const std::optional<PairwiseScores>& pairwise,
                                const std::optional<PairAgreement>& agreement);
// Fixed-format "metric value" table, values to 4 decimals.
std::string metrics_table(const std::optional<RetrievalMetrics>& retrieval,
                          const std::optional<PairwiseScores>& pairwise,
                          const std::optional<PairAgreement>& agreement);

struct SeedRecord {
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::none;
  std::size_t num_pairs = 0;
  std::optional<std::size_t> objective;
  double pairwise_f = 0.0;
};

struct StrategySummary {
  Strategy strategy = Strategy::none;
  std::size_t runs = 0;
  double objective_mean = 0.0;
  double objective_std = 0.0;
  bool has_objective = false;
  double pairwise_f_mean = 0.0;
  double pairwise_f_std = 0.0;
};

struct SelectionBenchmark {
  std::size_t num_seeds = 0;
  std::vector<SeedRecord> records;
  std::vector<StrategySummary> summary;  // none, random, partial, optimal[, brute_force]
};

// For each seed base.seed + s (s < num_seeds): generate a bundle, refine it
// under every strategy and record objective_value and pairwise F.
// brute_force joins whenever a bundle has at most `brute_force_max_pairs` pairs.
SelectionBenchmark run_selection_benchmark(const SynthConfig& base, const RefineParams& params,
                                           std::size_t num_seeds,
                                           std::size_t brute_force_max_pairs = 12);

std::string benchmark_table(const SelectionBenchmark& bench);
std::string benchmark_json(const SelectionBenchmark& bench);

}  // namespace prefine
