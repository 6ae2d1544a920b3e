#pragma once

#include <cstdint>
#include <vector>

#include "prefine/reranking.hpp"

namespace prefine {

inline constexpr std::int32_t kNoise = -1;

struct PseudoLabels {
  std::vector<std::int32_t> labels;  // cluster id >= 0 or kNoise
  std::size_t num_clusters = 0;

  std::size_t size() const { return labels.size(); }
  double noise_fraction() const;
  bool operator==(const PseudoLabels&) const = default;
};

// DBSCAN over a precomputed distance matrix.
//
// A sample is core when at least min_pts samples (itself included) lie at
// distance <= eps. Clusters are seeded from unvisited core samples in
// ascending index order and grown breadth-first; a border sample keeps the
// first cluster that reaches it. Everything else is kNoise.
PseudoLabels dbscan(const SquareMatrix& distances, double eps, std::size_t min_pts);

// Non-noise ids remapped to 0..C-1 by first appearance; noise kept.
PseudoLabels relabel_contiguous(const std::vector<std::int32_t>& labels);

}  // namespace prefine
