#include "prefine/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include <json.hpp>

#include "prefine/digest.hpp"
#include "prefine/error.hpp"
#include "prefine/io.hpp"

namespace prefine {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

void RefineParams::validate() const {
  if (k < 1) throw ParameterError("k must be >= 1");
  if (!(eps > 0.0 && eps <= 1.0)) throw ParameterError("eps must lie in (0, 1]");
  if (min_pts < 1) throw ParameterError("min_pts must be >= 1");
}

namespace {

// Re-throws with the stage name prefixed, keeping the exception category.
template <typename F>
auto run_stage(const char* name, F&& body) -> decltype(body()) {
  auto tag = [name](const std::exception& e) { return std::string(name) + ": " + e.what(); };
  try {
    return body();
  } catch (const GuardError& e) {
    throw GuardError(tag(e));
  } catch (const ParameterError& e) {
    throw ParameterError(tag(e));
  } catch (const ContractError& e) {
    throw ContractError(tag(e));
  } catch (const InputError& e) {
    throw InputError(tag(e));
  } catch (const Error& e) {
    throw Error(tag(e));
  }
}

void check_guard(const RefineParams& params, const PairList& pairs) {
  if (params.strategy == Strategy::brute_force && pairs.size() > kBruteForceMaxPairs) {
    throw GuardError("brute_force refuses " + std::to_string(pairs.size()) + " pairs (limit " +
                     std::to_string(kBruteForceMaxPairs) + ")");
  }
}

bool any_identity(const EmbeddingSet& emb) {
  for (const auto& m : emb.meta()) {
    if (m.true_identity) return true;
  }
  return false;
}

ordered_json retrieval_json(const RetrievalMetrics& m) {
  ordered_json j;
  j["mAP"] = m.mean_ap;
  ordered_json cmc;
  for (std::size_t r = 0; r < kCmcRanks.size(); ++r) {
    cmc["rank" + std::to_string(kCmcRanks[r])] = m.cmc[r];
  }
  j["cmc"] = cmc;
  j["queries_evaluated"] = m.queries_evaluated;
  j["queries_without_positives"] = m.queries_without_positives;
  return j;
}

ordered_json metrics_json(const std::optional<RetrievalMetrics>& retrieval,
                          const std::optional<PairwiseScores>& pairwise,
                          const std::optional<PairAgreement>& agreement) {
  ordered_json j = ordered_json::object();
  if (retrieval) j["retrieval"] = retrieval_json(*retrieval);
  if (pairwise) {
    j["pairwise_f"] = pairwise->f1;
    j["pairwise_precision"] = pairwise->precision;
    j["pairwise_recall"] = pairwise->recall;
  }
  if (agreement) {
    ordered_json a;
    a["value"] = agreement->value;
    a["non_noise_value"] = agreement->non_noise_value;
    a["pairs"] = agreement->pairs;
    a["agreed"] = agreement->agreed;
    a["noise_pairs"] = agreement->noise_pairs;
    a["empty"] = agreement->empty;
    j["pair_agreement"] = a;
  }
  return j;
}

ordered_json cluster_json(const PseudoLabels& labels, double eps, std::size_t min_pts) {
  ordered_json j;
  j["eps"] = eps;
  j["min_pts"] = min_pts;
  j["num_clusters"] = labels.num_clusters;
  j["noise_fraction"] = labels.noise_fraction();
  return j;
}

ordered_json selection_json(const Selection& sel, std::size_t k, std::uint64_t seed) {
  ordered_json j;
  j["strategy"] = std::string(to_string(sel.strategy));
  j["objective"] = sel.objective ? ordered_json(*sel.objective) : ordered_json();
  j["k"] = k;
  j["seed"] = seed;
  return j;
}

}  // namespace

RefineResult refine_bundle(const DatasetBundle& bundle, const RefineParams& params) {
  params.validate();
  const auto& emb = bundle.embeddings;
  const bool constrained = params.strategy != Strategy::none;
  if (constrained) check_guard(params, bundle.pairs);

  RefineResult r;
  if (constrained) {
    r.selection = run_stage("select", [&] {
      return select(params.strategy, bundle.pairs, emb, params.k, params.seed);
    });
    r.merged = run_stage("merge", [&] { return apply_merge(emb, bundle.pairs, *r.selection); });
  } else {
    r.merged = emb;
  }

  r.jaccard = run_stage("rerank", [&] { return rerank(r.merged, params.k).jaccard; });
  r.labels = run_stage("cluster", [&] {
    return relabel_contiguous(dbscan(r.jaccard, params.eps, params.min_pts).labels);
  });

  run_stage("evaluate", [&] {
    if (any_identity(emb)) {
      r.pairwise = pairwise_scores(r.labels, truth_of(emb));
      const auto split = bundle.split ? *bundle.split : default_split(emb);
      r.retrieval = evaluate_retrieval(emb, split);
      if (params.jaccard_eval) {
        const auto& dj = constrained ? rerank(emb, params.k).jaccard : r.jaccard;
        r.retrieval_jaccard = evaluate_retrieval(emb, split, dj);
      }
    }
    if (constrained) r.agreement = pair_agreement(r.labels, bundle.pairs);
  });
  return r;
}

RefineResult run_refinement(const PipelineConfig& cfg) {
  const auto& params = cfg.params;
  params.validate();
  const bool constrained = params.strategy != Strategy::none;

  DatasetBundle bundle;
  ordered_json inputs;
  run_stage("load", [&] {
    bundle.embeddings = io::load_embeddings(cfg.embeddings);
    inputs["embeddings"] = {{"path", cfg.embeddings.string()},
                            {"sha256", sha256_file(cfg.embeddings)}};
    const auto meta = io::metadata_path(cfg.embeddings);
    if (fs::exists(meta)) {
      inputs["metadata"] = {{"path", meta.string()}, {"sha256", sha256_file(meta)}};
    }
    if (constrained) {
      if (cfg.pairs.empty()) throw InputError("strategy requires a pair list (--pairs)");
      bundle.pairs = io::load_pairs(cfg.pairs, bundle.embeddings.size());
      inputs["pairs"] = {{"path", cfg.pairs.string()}, {"sha256", sha256_file(cfg.pairs)}};
    }
    if (!cfg.split.empty()) {
      bundle.split = io::load_split(cfg.split, bundle.embeddings.size());
      inputs["split"] = {{"path", cfg.split.string()}, {"sha256", sha256_file(cfg.split)}};
    }
  });
  if (constrained) check_guard(params, bundle.pairs);

  auto result = refine_bundle(bundle, params);

  ordered_json report;
  report["tool"] = "prefine";
  report["config"] = {{"k", params.k},
                      {"eps", params.eps},
                      {"min_pts", params.min_pts},
                      {"strategy", std::string(to_string(params.strategy))},
                      {"seed", params.seed},
                      {"jaccard_eval", params.jaccard_eval}};
  report["inputs"] = inputs;
  report["dataset"] = {{"n", bundle.embeddings.size()},
                       {"dim", bundle.embeddings.dim()},
                       {"num_pairs", bundle.pairs.size()},
                       {"pair_ratio", bundle.pair_ratio()}};
  if (result.selection) {
    report["selection"] = selection_json(*result.selection, params.k, params.seed);
  }
  report["clustering"] = cluster_json(result.labels, params.eps, params.min_pts);
  report["digests"] = {
      {"merged_features", sha256_of(result.merged.features())},
      {"jaccard", sha256_of(result.jaccard.values())},
      {"labels", sha256_of(std::span<const std::int32_t>(result.labels.labels))}};
  auto metrics = metrics_json(result.retrieval, result.pairwise, result.agreement);
  if (result.retrieval_jaccard) metrics["retrieval_jaccard"] = retrieval_json(*result.retrieval_jaccard);
  report["metrics"] = metrics;

  std::vector<fs::path> written;
  auto emit = [&](const fs::path& path, auto&& writer) {
    written.push_back(path);
    writer(path);
  };
  try {
    run_stage("write", [&] {
      fs::create_directories(cfg.out_dir);
      const auto& emb = bundle.embeddings;
      emit(cfg.out_dir / "labels.csv",
           [&](const fs::path& p) { io::save_labels(p, emb, result.labels.labels); });
      emit(cfg.out_dir / "train_labels.csv", [&](const fs::path& p) {
        std::ostringstream os;
        os << "sample_id,label\n";
        for (Index i = 0; i < emb.size(); ++i) {
          if (result.labels.labels[i] != kNoise) {
            os << emb.meta(i).sample_id << ',' << result.labels.labels[i] << '\n';
          }
        }
        io::write_text(p, os.str());
      });
      if (result.selection) {
        emit(cfg.out_dir / "selection.csv", [&](const fs::path& p) {
          io::write_text(p, selection_csv(bundle.pairs, *result.selection));
        });
      }
      if (cfg.dump_jaccard) {
        emit(cfg.out_dir / "jaccard.prfy", [&](const fs::path& p) {
          const auto& v = result.jaccard.values();
          std::vector<float> f(v.begin(), v.end());
          io::write_matrix(p, result.jaccard.size(), result.jaccard.size(), f);
        });
      }
      emit(cfg.out_dir / "report.json",
           [&](const fs::path& p) { io::write_text(p, report.dump(2) + "\n"); });
    });
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    throw;
  }
  return result;
}

std::string selection_csv(const PairList& pairs, const Selection& sel) {
  check_selection(pairs, sel);
  std::ostringstream os;
  os << "pair_index,i,j,chosen\n";
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    os << p << ',' << pairs[p].first << ',' << pairs[p].second << ',' << sel.choices[p] << '\n';
  }
  return os.str();
}

std::string selection_report_json(const Selection& sel, std::size_t k, std::uint64_t seed) {
  return selection_json(sel, k, seed).dump(2) + "\n";
}

std::string cluster_report_json(const PseudoLabels& labels, double eps, std::size_t min_pts) {
  return cluster_json(labels, eps, min_pts).dump(2) + "\n";
}

std::string metrics_report_json(const std::optional<RetrievalMetrics>& retrieval,
                                const std::optional<PairwiseScores>& pairwise,
                                const std::optional<PairAgreement>& agreement) {
  return metrics_json(retrieval, pairwise, agreement).dump(2) + "\n";
}

std::string metrics_table(const std::optional<RetrievalMetrics>& retrieval,
                          const std::optional<PairwiseScores>& pairwise,
                          const std::optional<PairAgreement>& agreement) {
  std::ostringstream os;
  char line[96];
  auto row = [&](const char* name, double value) {
    std::snprintf(line, sizeof(line), "%-22s %10.4f\n", name, value);
    os << line;
  };
  std::snprintf(line, sizeof(line), "%-22s %10s\n", "metric", "value");
  os << line;
  if (retrieval) {
    row("mAP", retrieval->mean_ap);
    row("CMC rank-1", retrieval->cmc_at(1));
    row("CMC rank-5", retrieval->cmc_at(5));
    row("CMC rank-10", retrieval->cmc_at(10));
  }
  if (pairwise) {
    row("pairwise_precision", pairwise->precision);
    row("pairwise_recall", pairwise->recall);
    row("pairwise_f", pairwise->f1);
  }
  if (agreement) {
    row("pair_agreement", agreement->value);
    row("pair_agreement_clean", agreement->non_noise_value);
  }
  return os.str();
}

// ---------------------------------------------------------------------------

namespace {

void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (xs.empty()) return;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

SelectionBenchmark run_selection_benchmark(const SynthConfig& base, const RefineParams& params,
                                           std::size_t num_seeds,
                                           std::size_t brute_force_max_pairs) {
  params.validate();
  SelectionBenchmark bench;
  bench.num_seeds = num_seeds;
  const std::vector<Strategy> arms = {Strategy::none, Strategy::random, Strategy::partial,
                                      Strategy::optimal, Strategy::brute_force};

  for (std::size_t s = 0; s < num_seeds; ++s) {
    SynthConfig cfg = base;
    cfg.seed = base.seed + s;
    const auto synth = generate(cfg);
    const auto& bundle = synth.bundle;
    for (auto arm : arms) {
      if (arm == Strategy::brute_force &&
          (bundle.pairs.size() > brute_force_max_pairs ||
           bundle.pairs.size() > kBruteForceMaxPairs)) {
        continue;
      }
      RefineParams p = params;
      p.strategy = arm;
      p.seed = cfg.seed;
      p.jaccard_eval = false;
      const auto r = refine_bundle(bundle, p);
      SeedRecord rec;
      rec.seed = cfg.seed;
      rec.strategy = arm;
      rec.num_pairs = bundle.pairs.size();
      if (r.selection) rec.objective = r.selection->objective;
      rec.pairwise_f = r.pairwise ? r.pairwise->f1 : 0.0;
      bench.records.push_back(rec);
    }
  }

  for (auto arm : arms) {
    std::vector<double> objectives, fs_;
    for (const auto& rec : bench.records) {
      if (rec.strategy != arm) continue;
      fs_.push_back(rec.pairwise_f);
      if (rec.objective) objectives.push_back(static_cast<double>(*rec.objective));
    }
    if (fs_.empty()) continue;
    StrategySummary sum;
    sum.strategy = arm;
    sum.runs = fs_.size();
    sum.has_objective = !objectives.empty();
    mean_std(objectives, sum.objective_mean, sum.objective_std);
    mean_std(fs_, sum.pairwise_f_mean, sum.pairwise_f_std);
    bench.summary.push_back(sum);
  }
  return bench;
}

std::string benchmark_table(const SelectionBenchmark& bench) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-12s %6s %24s %24s\n", "strategy", "runs",
                "objective (mean+-std)", "pairwise_f (mean+-std)");
  os << line;
  for (const auto& s : bench.summary) {
    char obj[48];
    if (s.has_objective) {
      std::snprintf(obj, sizeof(obj), "%.2f +- %.2f", s.objective_mean, s.objective_std);
    } else {
      std::snprintf(obj, sizeof(obj), "-");
    }
    char pf[48];
    std::snprintf(pf, sizeof(pf), "%.4f +- %.4f", s.pairwise_f_mean, s.pairwise_f_std);
    std::snprintf(line, sizeof(line), "%-12s %6zu %24s %24s\n",
                  std::string(to_string(s.strategy)).c_str(), s.runs, obj, pf);
    os << line;
  }
  return os.str();
}

std::string benchmark_json(const SelectionBenchmark& bench) {
  ordered_json j;
  j["num_seeds"] = bench.num_seeds;
  ordered_json summary = ordered_json::array();
  for (const auto& s : bench.summary) {
    ordered_json o;
    o["strategy"] = std::string(to_string(s.strategy));
    o["runs"] = s.runs;
    if (s.has_objective) {
      o["objective_mean"] = s.objective_mean;
      o["objective_std"] = s.objective_std;
    }
    o["pairwise_f_mean"] = s.pairwise_f_mean;
    o["pairwise_f_std"] = s.pairwise_f_std;
    summary.push_back(o);
  }
  j["summary"] = summary;
  ordered_json records = ordered_json::array();
  for (const auto& r : bench.records) {
    ordered_json o;
    o["seed"] = r.seed;
    o["strategy"] = std::string(to_string(r.strategy));
    o["num_pairs"] = r.num_pairs;
    o["objective"] = r.objective ? ordered_json(*r.objective) : ordered_json();
    o["pairwise_f"] = r.pairwise_f;
    records.push_back(o);
  }
  j["records"] = records;
  return j.dump(2) + "\n";
}

}  // namespace prefine
