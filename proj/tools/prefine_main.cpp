// prefine: command-line front end for the pseudo-label refinement library.
//
//   prefine synth            generate a synthetic multi-camera bundle
//   prefine select           choose pair representatives (random/partial/optimal/brute_force)
//   prefine rerank           k-reciprocal Jaccard distance matrix
//   prefine cluster          DBSCAN on a Jaccard matrix
//   prefine eval             retrieval and label-quality metrics
//   prefine refine           end-to-end pass
//   prefine bench-selection  strategy comparison over seeds
//
// Exit codes: 0 ok, 2 input error, 3 parameter error, 4 guard refusal.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "prefine/clustering.hpp"
#include "prefine/error.hpp"
#include "prefine/evaluation.hpp"
#include "prefine/io.hpp"
#include "prefine/pair_constraints.hpp"
#include "prefine/parallel.hpp"
#include "prefine/pipeline.hpp"
#include "prefine/reranking.hpp"
#include "prefine/synthgen.hpp"

namespace fs = std::filesystem;
using namespace prefine;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitParameter = 3;
constexpr int kExitGuard = 4;

struct SharedOptions {
  std::size_t k = 20;
  double eps = 0.6;
  std::size_t min_pts = 4;
  std::string strategy = "optimal";
  std::uint64_t seed = 0;
  int threads = 1;
  fs::path out_dir = "out";

  RefineParams params() const {
    RefineParams p;
    p.k = k;
    p.eps = eps;
    p.min_pts = min_pts;
    p.strategy = parse_strategy(strategy);
    p.seed = seed;
    return p;
  }
};

void add_synth_options(CLI::App* cmd, SynthConfig& cfg) {
  cmd->add_option("--identities", cfg.num_identities, "Number of identities")->capture_default_str();
  cmd->add_option("--per-identity", cfg.samples_per_identity, "Samples per identity")
      ->capture_default_str();
  cmd->add_option("--dim", cfg.dim, "Feature dimension")->capture_default_str();
  cmd->add_option("--cameras", cfg.num_cameras, "Number of cameras")->capture_default_str();
  cmd->add_option("--spread", cfg.cluster_spread, "Within-identity noise scale")
      ->capture_default_str();
  cmd->add_option("--camera-shift", cfg.camera_shift, "Per-camera offset magnitude")
      ->capture_default_str();
  cmd->add_option("--outlier-rate", cfg.outlier_rate, "Fraction of heavy-noise samples")
      ->capture_default_str();
  cmd->add_option("--pair-ratio", cfg.pair_ratio, "|pairs| / n")->capture_default_str();
}

nlohmann::ordered_json summary_json(const DatasetSummary& s, const SynthBundle& synth) {
  nlohmann::ordered_json j;
  j["n"] = s.n;
  j["dim"] = s.dim;
  j["num_identities"] = s.num_identities;
  j["num_pairs"] = s.num_pairs;
  j["pair_ratio"] = s.pair_ratio;
  j["requested_pairs"] = synth.requested_pairs;
  j["pair_shortfall"] = synth.pair_shortfall;
  nlohmann::ordered_json cams;
  for (const auto& [cam, count] : s.per_camera) cams[std::to_string(cam)] = count;
  j["per_camera"] = cams;
  return j;
}

int run_synth(const SharedOptions& shared, SynthConfig cfg) {
  cfg.seed = shared.seed;
  const auto synth = generate(cfg);
  const auto& b = synth.bundle;
  fs::create_directories(shared.out_dir);
  io::save_embeddings(shared.out_dir / "embeddings.prfy", b.embeddings);
  io::save_pairs(shared.out_dir / "pairs.csv", b.pairs);
  io::save_split(shared.out_dir / "split.json", *b.split);
  const auto summary = summary_json(describe(b), synth);
  io::write_text(shared.out_dir / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  if (synth.pair_shortfall) {
    std::cerr << "warning: only " << b.pairs.size() << " of " << synth.requested_pairs
              << " requested pairs could be formed\n";
  }
  return kExitOk;
}

int run_select(const SharedOptions& shared, const fs::path& embeddings, const fs::path& pairs_path,
               bool write_merged) {
  const auto params = shared.params();
  if (params.strategy == Strategy::none) {
    throw ParameterError("select needs a strategy other than 'none'");
  }
  const auto emb = io::load_embeddings(embeddings);
  const auto pairs = io::load_pairs(pairs_path, emb.size());
  if (params.strategy == Strategy::brute_force && pairs.size() > kBruteForceMaxPairs) {
    throw GuardError("brute_force refuses " + std::to_string(pairs.size()) + " pairs (limit " +
                     std::to_string(kBruteForceMaxPairs) + ")");
  }
  const auto sel = select(params.strategy, pairs, emb, params.k, params.seed);
  fs::create_directories(shared.out_dir);
  io::write_text(shared.out_dir / "selection.csv", selection_csv(pairs, sel));
  const auto report = selection_report_json(sel, params.k, params.seed);
  io::write_text(shared.out_dir / "selection.json", report);
  if (write_merged) {
    io::save_embeddings(shared.out_dir / "merged.prfy", apply_merge(emb, pairs, sel));
  }
  std::cout << report;
  return kExitOk;
}

void dump_matrix(const fs::path& path, const SquareMatrix& m) {
  std::vector<float> f(m.values().begin(), m.values().end());
  io::write_matrix(path, m.size(), m.size(), f);
}

int run_rerank(const SharedOptions& shared, const fs::path& embeddings) {
  const auto emb = io::load_embeddings(embeddings);
  const auto r = rerank(emb, shared.k);
  fs::create_directories(shared.out_dir);
  dump_matrix(shared.out_dir / "jaccard.prfy", r.jaccard);

  std::size_t total = 0;
  for (Index i = 0; i < emb.size(); ++i) total += r.neighbors.reciprocal_count(i);
  nlohmann::ordered_json j;
  j["n"] = emb.size();
  j["k"] = shared.k;
  j["mean_reciprocal_size"] = static_cast<double>(total) / static_cast<double>(emb.size());
  io::write_text(shared.out_dir / "rerank.json", j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int run_cluster(const SharedOptions& shared, const fs::path& jaccard_path,
                const fs::path& embeddings) {
  if (jaccard_path.empty() && embeddings.empty()) {
    throw InputError("cluster needs --jaccard or --embeddings");
  }
  EmbeddingSet emb;
  if (!embeddings.empty()) emb = io::load_embeddings(embeddings);

  SquareMatrix dj;
  if (!jaccard_path.empty()) {
    const auto m = io::read_matrix(jaccard_path);
    if (m.rows != m.cols) throw InputError(jaccard_path.string() + ": matrix is not square");
    dj = SquareMatrix(m.rows);
    for (Index i = 0; i < m.rows; ++i) {
      for (Index j = 0; j < m.cols; ++j) dj(i, j) = m.values[i * m.cols + j];
    }
  } else {
    dj = rerank(emb, shared.k).jaccard;
  }
  if (emb.empty()) {
    // ids default to row numbers
    emb = EmbeddingSet::from_rows(dj.size(), 1, std::vector<float>(dj.size(), 1.0f));
  } else if (emb.size() != dj.size()) {
    throw InputError("Jaccard matrix and embeddings disagree on n");
  }

  const auto labels = relabel_contiguous(dbscan(dj, shared.eps, shared.min_pts).labels);
  fs::create_directories(shared.out_dir);
  io::save_labels(shared.out_dir / "labels.csv", emb, labels.labels);
  const auto report = cluster_report_json(labels, shared.eps, shared.min_pts);
  io::write_text(shared.out_dir / "cluster_report.json", report);
  std::cout << report;
  return kExitOk;
}

int run_eval(const SharedOptions& shared, const fs::path& embeddings, const fs::path& split_path,
             const fs::path& labels_path, const fs::path& pairs_path, bool use_jaccard) {
  const auto emb = io::load_embeddings(embeddings);
  const auto split = split_path.empty() ? default_split(emb) : io::load_split(split_path, emb.size());

  std::optional<RetrievalMetrics> retrieval;
  if (!split.query.empty()) {
    retrieval = use_jaccard ? evaluate_retrieval(emb, split, rerank(emb, shared.k).jaccard)
                            : evaluate_retrieval(emb, split);
  }
  std::optional<PairwiseScores> pairwise;
  std::optional<PairAgreement> agreement;
  if (!labels_path.empty()) {
    const auto labels = relabel_contiguous(io::load_labels(labels_path, emb));
    pairwise = pairwise_scores(labels, truth_of(emb));
    if (!pairs_path.empty()) {
      agreement = pair_agreement(labels, io::load_pairs(pairs_path, emb.size()));
    }
  }
  fs::create_directories(shared.out_dir);
  io::write_text(shared.out_dir / "metrics.json", metrics_report_json(retrieval, pairwise, agreement));
  std::cout << metrics_table(retrieval, pairwise, agreement);
  return kExitOk;
}

int run_refine(const SharedOptions& shared, PipelineConfig cfg, bool jaccard_eval) {
  cfg.params = shared.params();
  cfg.params.jaccard_eval = jaccard_eval;
  cfg.out_dir = shared.out_dir;
  const auto r = run_refinement(cfg);
  std::cout << "clusters: " << r.labels.num_clusters
            << "  noise_fraction: " << r.labels.noise_fraction() << "\n";
  std::cout << metrics_table(r.retrieval, r.pairwise, r.agreement);
  return kExitOk;
}

int run_bench(const SharedOptions& shared, SynthConfig cfg, std::size_t seeds,
              std::size_t brute_max) {
  cfg.seed = shared.seed;
  const auto bench = run_selection_benchmark(cfg, shared.params(), seeds, brute_max);
  fs::create_directories(shared.out_dir);
  io::write_text(shared.out_dir / "bench_selection.json", benchmark_json(bench));
  std::cout << benchmark_table(bench);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-label refinement with same-person pair constraints"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.fallthrough();
  app.set_config("--config", "", "key = value file; command-line flags take precedence");

  SharedOptions shared;
  app.add_option("--k", shared.k, "Neighborhood size for k-reciprocal sets")->capture_default_str();
  app.add_option("--eps", shared.eps, "DBSCAN radius on Jaccard distance")->capture_default_str();
  app.add_option("--min-pts", shared.min_pts, "DBSCAN density threshold (self included)")
      ->capture_default_str();
  app.add_option("--strategy", shared.strategy,
                 "none | random | partial | optimal | brute_force")
      ->capture_default_str();
  app.add_option("--seed", shared.seed, "Top-level seed")->capture_default_str();
  app.add_option("--threads", shared.threads, "Worker threads (never changes outputs)")
      ->capture_default_str();
  app.add_option("--out-dir", shared.out_dir, "Output directory")->capture_default_str();

  SynthConfig synth_cfg;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-camera bundle");
  add_synth_options(synth, synth_cfg);

  fs::path embeddings, pairs, split, labels, jaccard_in;
  bool merged_out = false, dump_jaccard = false, jaccard_eval = false;

  auto* select_cmd = app.add_subcommand("select", "Choose a representative per pair");
  select_cmd->add_option("--embeddings", embeddings, "Embedding file (.prfy)")->required();
  select_cmd->add_option("--pairs", pairs, "Pair list CSV")->required();
  select_cmd->add_flag("--merged", merged_out, "Also write merged.prfy");

  auto* rerank_cmd = app.add_subcommand("rerank", "Compute the Jaccard distance matrix");
  rerank_cmd->add_option("--embeddings", embeddings, "Embedding file (.prfy)")->required();

  auto* cluster_cmd = app.add_subcommand("cluster", "DBSCAN into pseudo-labels");
  cluster_cmd->add_option("--jaccard", jaccard_in, "Jaccard matrix (.prfy, n x n)");
  cluster_cmd->add_option("--embeddings", embeddings, "Embeddings (ids; re-ranked if no --jaccard)");

  auto* eval_cmd = app.add_subcommand("eval", "Retrieval and pseudo-label metrics");
  eval_cmd->add_option("--embeddings", embeddings, "Embedding file with identities")->required();
  eval_cmd->add_option("--split", split, "Query/gallery split JSON");
  eval_cmd->add_option("--labels", labels, "Labels CSV to score");
  eval_cmd->add_option("--pairs", pairs, "Pair list for pair agreement");
  eval_cmd->add_flag("--rerank", jaccard_eval, "Rank by Jaccard distance instead of cosine");

  PipelineConfig pipeline;
  auto* refine_cmd = app.add_subcommand("refine", "End-to-end refinement pass");
  refine_cmd->add_option("--embeddings", pipeline.embeddings, "Embedding file (.prfy)")->required();
  refine_cmd->add_option("--pairs", pipeline.pairs, "Pair list CSV");
  refine_cmd->add_option("--split", pipeline.split, "Query/gallery split JSON");
  refine_cmd->add_flag("--dump-jaccard", dump_jaccard, "Write jaccard.prfy");
  refine_cmd->add_flag("--jaccard-eval", jaccard_eval, "Also evaluate on re-ranked distances");

  SynthConfig bench_cfg;
  std::size_t seeds = 10, brute_max = 12;
  auto* bench_cmd = app.add_subcommand("bench-selection", "Compare selection strategies");
  add_synth_options(bench_cmd, bench_cfg);
  bench_cmd->add_option("--seeds", seeds, "Number of seeds")->capture_default_str();
  bench_cmd->add_option("--brute-force-max", brute_max, "Include brute_force when N_P <= this")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitParameter;
  }

  try {
    set_thread_count(shared.threads);
    if (*synth) return run_synth(shared, synth_cfg);
    if (*select_cmd) return run_select(shared, embeddings, pairs, merged_out);
    if (*rerank_cmd) return run_rerank(shared, embeddings);
    if (*cluster_cmd) return run_cluster(shared, jaccard_in, embeddings);
    if (*eval_cmd) return run_eval(shared, embeddings, split, labels, pairs, jaccard_eval);
    if (*refine_cmd) {
      pipeline.dump_jaccard = dump_jaccard;
      return run_refine(shared, pipeline, jaccard_eval);
    }
    if (*bench_cmd) return run_bench(shared, bench_cfg, seeds, brute_max);
  } catch (const GuardError& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kExitGuard;
  } catch (const ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return kExitParameter;
  } catch (const Error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
