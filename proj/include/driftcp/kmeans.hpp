#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "driftcp/core.hpp"

namespace driftcp {

struct ClusterModel {
  int k = 0;
  std::vector<FeatureVector> centroids;
  std::vector<int> assignments;
  // Total within-cluster sum of squared distances after each Lloyd step;
  // the last entry is the final dispersion.
  std::vector<double> dispersion_history;
  int iterations = 0;

  double dispersion() const { return dispersion_history.empty() ? 0.0 : dispersion_history.back(); }

  friend bool operator==(const ClusterModel&, const ClusterModel&) = default;
};

// Lloyd's algorithm with k-means++ seeding. Ties in assignment go to the
// lowest centroid index. Deterministic per seed.
ClusterModel kmeans(std::span<const FeatureVector> features, int k, std::uint64_t seed,
                    int max_iter = 100);

// Sum over points of the squared distance to their assigned centroid.
double within_cluster_dispersion(std::span<const FeatureVector> features,
                                 std::span<const FeatureVector> centroids,
                                 std::span<const int> assignments);

struct GapResult {
  std::vector<int> ks;
  // Gap(K) per entry of ks; +inf when the data dispersion is exactly zero.
  std::vector<double> gaps;
  int chosen_k = 0;

  friend bool operator==(const GapResult&, const GapResult&) = default;
};

// Gap statistic over K in [k_min, k_max] with `b` uniform reference datasets
// drawn over the bounding box of `features`. Picks the K with the largest gap,
// smaller K on ties. k_max is clamped to n - 1.
GapResult gap_select_k(std::span<const FeatureVector> features, int k_min, int k_max, int b,
                       std::uint64_t seed);

}  // namespace driftcp
