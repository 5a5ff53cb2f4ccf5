#include "driftcp/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "driftcp/errors.hpp"

namespace driftcp {

namespace {

int nearest_centroid(std::span<const double> point, std::span<const FeatureVector> centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(point, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

// k-means++: first centre uniform, the rest with probability proportional to
// the squared distance to the closest centre chosen so far.
std::vector<FeatureVector> seed_centroids(std::span<const FeatureVector> features, int k,
                                          std::mt19937_64& rng) {
  const std::size_t n = features.size();
  std::vector<FeatureVector> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  std::vector<bool> taken(n, false);

  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t pick = first(rng);
  centroids.push_back(features[pick]);
  taken[pick] = true;

  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(features[i], centroids.back()));
      total += d2[i];
    }
    if (total > 0.0) {
      double target = unit(rng) * total;
      pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        target -= d2[i];
        pick = i;
        if (target <= 0.0) break;
      }
    } else {
      // Every point coincides with a chosen centre; fall back to index order.
      pick = static_cast<std::size_t>(std::find(taken.begin(), taken.end(), false) - taken.begin());
    }
    centroids.push_back(features[pick]);
    taken[pick] = true;
  }
  return centroids;
}

}  // namespace

double within_cluster_dispersion(std::span<const FeatureVector> features,
                                 std::span<const FeatureVector> centroids,
                                 std::span<const int> assignments) {
  double total = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    total += squared_distance(features[i], centroids[static_cast<std::size_t>(assignments[i])]);
  }
  return total;
}

ClusterModel kmeans(std::span<const FeatureVector> features, int k, std::uint64_t seed,
                    int max_iter) {
  if (k < 2) throw ConfigError("k-means needs K >= 2");
  if (features.size() < static_cast<std::size_t>(k)) {
    throw ConfigError("k-means with K = " + std::to_string(k) + " on only " +
                      std::to_string(features.size()) + " points");
  }
  if (max_iter < 1) throw ConfigError("k-means max_iter must be >= 1");
  const std::size_t dim = features.front().size();

  std::mt19937_64 rng(seed);
  ClusterModel model;
  model.k = k;
  model.centroids = seed_centroids(features, k, rng);
  model.assignments.assign(features.size(), -1);

  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < features.size(); ++i) {
      const int c = nearest_centroid(features[i], model.centroids);
      if (c != model.assignments[i]) {
        model.assignments[i] = c;
        changed = true;
      }
    }
    model.iterations = iter + 1;
    if (!changed && iter > 0) {
      break;
    }

    std::vector<FeatureVector> sums(static_cast<std::size_t>(k), FeatureVector(dim, 0.0));
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < features.size(); ++i) {
      const auto c = static_cast<std::size_t>(model.assignments[i]);
      ++counts[c];
      for (std::size_t j = 0; j < dim; ++j) sums[c][j] += features[i][j];
    }
    for (std::size_t c = 0; c < sums.size(); ++c) {
      // An emptied cluster keeps its previous centre.
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < dim; ++j) {
        model.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
      }
    }
    model.dispersion_history.push_back(
        within_cluster_dispersion(features, model.centroids, model.assignments));
  }
  if (model.dispersion_history.empty()) {
    model.dispersion_history.push_back(
        within_cluster_dispersion(features, model.centroids, model.assignments));
  }
  return model;
}

GapResult gap_select_k(std::span<const FeatureVector> features, int k_min, int k_max, int b,
                       std::uint64_t seed) {
  const auto n = static_cast<int>(features.size());
  if (k_min < 2) throw ConfigError("gap statistic needs k_min >= 2");
  if (n <= k_min) {
    throw ConfigError("gap statistic needs more than k_min = " + std::to_string(k_min) +
                      " points, got " + std::to_string(n));
  }
  if (b < 1) throw ConfigError("gap statistic needs at least one reference dataset");
  if (k_max > n - 1) {
    warn("k_max " + std::to_string(k_max) + " clamped to " + std::to_string(n - 1) +
         " for " + std::to_string(n) + " calibration points");
    k_max = n - 1;
  }
  if (k_max < k_min) throw ConfigError("empty K range for the gap statistic");

  const std::size_t dim = features.front().size();
  FeatureVector lo(dim, std::numeric_limits<double>::infinity());
  FeatureVector hi(dim, -std::numeric_limits<double>::infinity());
  for (const auto& v : features) {
    for (std::size_t j = 0; j < dim; ++j) {
      lo[j] = std::min(lo[j], v[j]);
      hi[j] = std::max(hi[j], v[j]);
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<std::vector<FeatureVector>> references(static_cast<std::size_t>(b));
  for (auto& ref : references) {
    ref.resize(features.size(), FeatureVector(dim));
    for (auto& v : ref) {
      for (std::size_t j = 0; j < dim; ++j) {
        v[j] = std::uniform_real_distribution<double>(lo[j], hi[j])(rng);
      }
    }
  }

  GapResult result;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    // Each clustering gets its own seed so results do not depend on the K order.
    const std::uint64_t base = seed * 1000003ULL + static_cast<std::uint64_t>(k) * 7919ULL;
    const double w = kmeans(features, k, base).dispersion();
    double ref_log_sum = 0.0;
    for (std::size_t r = 0; r < references.size(); ++r) {
      const double wr = kmeans(references[r], k, base + r + 1).dispersion();
      ref_log_sum += std::log(wr);
    }
    const double gap = w > 0.0 ? ref_log_sum / b - std::log(w)
                               : std::numeric_limits<double>::infinity();
    result.ks.push_back(k);
    result.gaps.push_back(gap);
    if (gap > best) {
      best = gap;
      result.chosen_k = k;
    }
  }
  return result;
}

}  // namespace driftcp
