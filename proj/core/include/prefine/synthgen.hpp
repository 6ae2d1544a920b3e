#pragma once

// Seeded generator of multi-camera embedding datasets with ground truth.
//
// Draw order (all from one SplitMix64 stream seeded with `seed`):
//   1. identity centroids: dim standard normals each, L2-normalized
//   2. camera offsets: dim standard normals each, normalized, scaled by
//      camera_shift
//   3. samples, identity-major: one uniform (outlier if < outlier_rate), then
//      dim normals; x = centroid + offset[camera] + s * z / sqrt(dim) with
//      s = cluster_spread (x5 for outliers); x is normalized and stored as f32
//   4. pairs: per (identity, frame) group the members are shuffled and paired
//      off disjointly; the pooled candidates are shuffled and the first
//      floor(pair_ratio * n) kept
//
// Sample s of an identity sits on camera s % num_cameras at frame
// s / num_cameras, so a frame holds one view per camera. Pairs therefore
// always join the same identity seen by different cameras at the same frame,
// and no sample appears in two pairs.

#include <cstdint>
#include <map>

#include "prefine/embeddings.hpp"

namespace prefine {

struct SynthConfig {
  std::size_t num_identities = 60;
  std::size_t samples_per_identity = 10;
  std::size_t dim = 64;
  std::size_t num_cameras = 3;
  double cluster_spread = 0.3;
  double camera_shift = 0.5;
  double outlier_rate = 0.05;
  double pair_ratio = 0.24;
  std::uint64_t seed = 0;

  std::size_t sample_count() const { return num_identities * samples_per_identity; }
  // Throws ParameterError.
  void validate() const;
};

struct SynthBundle {
  DatasetBundle bundle;
  std::size_t requested_pairs = 0;
  bool pair_shortfall = false;  // fewer candidate pairs than requested
};

SynthBundle generate(const SynthConfig& cfg);

struct DatasetSummary {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::size_t num_identities = 0;
  std::size_t num_pairs = 0;
  double pair_ratio = 0.0;
  std::map<std::int64_t, std::size_t> per_camera;
};

DatasetSummary describe(const DatasetBundle& bundle);

}  // namespace prefine
