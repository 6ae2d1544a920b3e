#include "prefine/synthgen.hpp"

#include <cmath>
#include <set>
#include <string>

#include "prefine/error.hpp"
#include "prefine/rng.hpp"

namespace prefine {

void SynthConfig::validate() const {
  if (num_identities < 1 || samples_per_identity < 1 || dim < 1 || num_cameras < 1) {
    throw ParameterError("synth: identities, samples per identity, dim and cameras must be >= 1");
  }
  if (!(cluster_spread >= 0.0) || !(camera_shift >= 0.0)) {
    throw ParameterError("synth: cluster_spread and camera_shift must be >= 0");
  }
  if (!(outlier_rate >= 0.0 && outlier_rate <= 1.0)) {
    throw ParameterError("synth: outlier_rate must lie in [0, 1]");
  }
  if (!(pair_ratio >= 0.0 && pair_ratio <= 1.0)) {
    throw ParameterError("synth: pair_ratio must lie in [0, 1]");
  }
}

namespace {

std::vector<double> unit_gaussian(SplitMix64& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double sq = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    sq += x * x;
  }
  const double norm = std::sqrt(sq);
  for (auto& x : v) x /= norm;
  return v;
}

}  // namespace

SynthBundle generate(const SynthConfig& cfg) {
  cfg.validate();
  SplitMix64 rng(cfg.seed);
  const auto dim = cfg.dim;
  const auto n = cfg.sample_count();
  const auto per_id = cfg.samples_per_identity;
  const auto frames_per_id = (per_id + cfg.num_cameras - 1) / cfg.num_cameras;

  std::vector<std::vector<double>> centroids;
  centroids.reserve(cfg.num_identities);
  for (std::size_t id = 0; id < cfg.num_identities; ++id) {
    centroids.push_back(unit_gaussian(rng, dim));
  }
  std::vector<std::vector<double>> offsets;
  offsets.reserve(cfg.num_cameras);
  for (std::size_t c = 0; c < cfg.num_cameras; ++c) {
    auto v = unit_gaussian(rng, dim);
    for (auto& x : v) x *= cfg.camera_shift;
    offsets.push_back(std::move(v));
  }

  std::vector<float> features(n * dim);
  std::vector<SampleMeta> meta(n);
  const double inv_sqrt_dim = 1.0 / std::sqrt(static_cast<double>(dim));
  std::vector<double> x(dim);
  for (std::size_t id = 0; id < cfg.num_identities; ++id) {
    for (std::size_t s = 0; s < per_id; ++s) {
      const auto row = id * per_id + s;
      const auto cam = s % cfg.num_cameras;
      const bool outlier = rng.uniform() < cfg.outlier_rate;
      const double scale = cfg.cluster_spread * (outlier ? 5.0 : 1.0) * inv_sqrt_dim;
      double sq = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        x[c] = centroids[id][c] + offsets[cam][c] + scale * rng.normal();
        sq += x[c] * x[c];
      }
      const double norm = sq > 0.0 ? std::sqrt(sq) : 1.0;
      for (std::size_t c = 0; c < dim; ++c) {
        features[row * dim + c] = static_cast<float>(x[c] / norm);
      }
      auto& m = meta[row];
      m.camera_id = static_cast<std::int64_t>(cam);
      m.frame_index = static_cast<std::int64_t>(id * frames_per_id + s / cfg.num_cameras);
      m.true_identity = static_cast<std::int64_t>(id);
      m.sample_id = "id" + std::to_string(id) + "_s" + std::to_string(s) + "_c" +
                    std::to_string(cam);
    }
  }

  std::vector<std::pair<Index, Index>> candidates;
  for (std::size_t id = 0; id < cfg.num_identities; ++id) {
    for (std::size_t f = 0; f < frames_per_id; ++f) {
      std::vector<Index> group;
      for (std::size_t s = f * cfg.num_cameras; s < std::min(per_id, (f + 1) * cfg.num_cameras);
           ++s) {
        group.push_back(id * per_id + s);
      }
      rng.shuffle(std::span<Index>(group));
      for (std::size_t t = 0; t + 1 < group.size(); t += 2) {
        candidates.emplace_back(group[t], group[t + 1]);
      }
    }
  }
  rng.shuffle(std::span<std::pair<Index, Index>>(candidates));

  SynthBundle out;
  out.requested_pairs =
      static_cast<std::size_t>(std::floor(cfg.pair_ratio * static_cast<double>(n) + 1e-9));
  out.pair_shortfall = candidates.size() < out.requested_pairs;
  candidates.resize(std::min(candidates.size(), out.requested_pairs));

  out.bundle.embeddings = EmbeddingSet::from_rows(n, dim, std::move(features), std::move(meta));
  out.bundle.pairs = PairList::from_pairs(candidates, n);
  out.bundle.split = default_split(out.bundle.embeddings);
  return out;
}

DatasetSummary describe(const DatasetBundle& bundle) {
  DatasetSummary s;
  const auto& emb = bundle.embeddings;
  s.n = emb.size();
  s.dim = emb.dim();
  s.num_pairs = bundle.pairs.size();
  s.pair_ratio = bundle.pair_ratio();
  std::set<std::int64_t> ids;
  for (const auto& m : emb.meta()) {
    ++s.per_camera[m.camera_id];
    if (m.true_identity) ids.insert(*m.true_identity);
  }
  s.num_identities = ids.size();
  return s;
}

}  // namespace prefine
