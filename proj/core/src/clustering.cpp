#include "prefine/clustering.hpp"

#include <cmath>
#include <deque>
#include <map>
#include <string>

#include "prefine/error.hpp"

namespace prefine {

double PseudoLabels::noise_fraction() const {
  if (labels.empty()) return 0.0;
  std::size_t noise = 0;
  for (auto l : labels) noise += (l == kNoise);
  return static_cast<double>(noise) / static_cast<double>(labels.size());
}

PseudoLabels dbscan(const SquareMatrix& distances, double eps, std::size_t min_pts) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw ParameterError("eps must be > 0 (got " + std::to_string(eps) + ")");
  }
  if (min_pts < 1) throw ParameterError("min_pts must be >= 1");

  const auto n = distances.size();
  std::vector<std::vector<Index>> region(n);
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t si = 0; si < rows; ++si) {
    const auto i = static_cast<Index>(si);
    const auto row = distances.row(i);
    for (Index j = 0; j < n; ++j) {
      if (row[j] <= eps) region[i].push_back(j);
    }
  }

  constexpr std::int32_t kUnvisited = -2;
  PseudoLabels out;
  out.labels.assign(n, kUnvisited);
  std::int32_t cluster = 0;

  for (Index seed = 0; seed < n; ++seed) {
    if (out.labels[seed] != kUnvisited) continue;
    if (region[seed].size() < min_pts) {
      out.labels[seed] = kNoise;  // may still be claimed as a border point later
      continue;
    }
    out.labels[seed] = cluster;
    std::deque<Index> frontier(region[seed].begin(), region[seed].end());
    while (!frontier.empty()) {
      const Index q = frontier.front();
      frontier.pop_front();
      if (out.labels[q] == kNoise) out.labels[q] = cluster;
      if (out.labels[q] != kUnvisited) continue;
      out.labels[q] = cluster;
      if (region[q].size() >= min_pts) {
        frontier.insert(frontier.end(), region[q].begin(), region[q].end());
      }
    }
    ++cluster;
  }
  out.num_clusters = static_cast<std::size_t>(cluster);
  return out;
}

PseudoLabels relabel_contiguous(const std::vector<std::int32_t>& labels) {
  PseudoLabels out;
  out.labels.reserve(labels.size());
  std::map<std::int32_t, std::int32_t> remap;
  for (auto l : labels) {
    if (l == kNoise) {
      out.labels.push_back(kNoise);
      continue;
    }
    auto [it, inserted] = remap.try_emplace(l, static_cast<std::int32_t>(remap.size()));
    out.labels.push_back(it->second);
  }
  out.num_clusters = remap.size();
  return out;
}

}  // namespace prefine
