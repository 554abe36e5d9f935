#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "causeworks/causal_model.hpp"

namespace causeworks {

using Trajectory = std::vector<double>;

inline constexpr std::uint64_t kDefaultSeed = 20210101;
inline constexpr int kMaxKMeansIterations = 100;

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

struct KMeansRun {
  std::vector<std::size_t> assignment;
  std::vector<Trajectory> centroids;
  // Within-cluster sum of squares after every update step.
  std::vector<double> objective_history;
  int iterations = 0;
};

namespace detail {

// First centre picked from the seed, each further centre is the point
// farthest from all centres chosen so far (lowest index on ties).
inline std::vector<std::size_t> farthest_point_seeds(std::span<const Trajectory> points, std::size_t k,
                                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen{static_cast<std::size_t>(rng() % points.size())};
  std::vector<double> nearest(points.size(), std::numeric_limits<double>::infinity());
  while (chosen.size() < k) {
    const auto& last = points[chosen.back()];
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points[i], last));
      if (nearest[i] > best_d) {
        best_d = nearest[i];
        best = i;
      }
    }
    chosen.push_back(best);
  }
  return chosen;
}

inline std::size_t nearest_centroid(std::span<const double> p, std::span<const Trajectory> centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace detail

inline double within_cluster_ss(std::span<const Trajectory> points, std::span<const std::size_t> assignment,
                                std::span<const Trajectory> centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) s += squared_distance(points[i], centroids[assignment[i]]);
  return s;
}

// Lloyd's algorithm with Euclidean distance.
inline KMeansRun kmeans(std::span<const Trajectory> points, std::size_t k, std::uint64_t seed = kDefaultSeed,
                        int max_iterations = kMaxKMeansIterations) {
  if (points.empty() || k == 0 || k > points.size()) {
    throw Error(ErrorKind::invalid_argument, "kmeans needs 1 <= k <= number of points");
  }
  const std::size_t dim = points.front().size();

  KMeansRun run;
  for (std::size_t idx : detail::farthest_point_seeds(points, k, seed)) run.centroids.push_back(points[idx]);
  run.assignment.assign(points.size(), 0);

  for (int it = 0; it < max_iterations; ++it) {
    std::vector<std::size_t> next(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) next[i] = detail::nearest_centroid(points[i], run.centroids);
    const bool stable = it > 0 && next == run.assignment;
    run.assignment = std::move(next);
    run.iterations = it + 1;
    if (stable) break;

    std::vector<Trajectory> sums(k, Trajectory(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto c = run.assignment[i];
      ++counts[c];
      for (std::size_t d = 0; d < dim; ++d) sums[c][d] += points[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centre
      for (std::size_t d = 0; d < dim; ++d) run.centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
    }
    run.objective_history.push_back(within_cluster_ss(points, run.assignment, run.centroids));
  }
  return run;
}

// Mean silhouette coefficient. Points in singleton clusters score 0.
// Per-cluster distance totals are accumulated once per point instead of
// rescanning each cluster.
inline double silhouette(std::span<const Trajectory> points, std::span<const std::size_t> assignment,
                         std::size_t k) {
  const std::size_t n = points.size();
  std::vector<std::size_t> size(k, 0);
  for (auto c : assignment) ++size[c];

  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) dist[i * n + j] = dist[j * n + i] = distance(points[i], points[j]);
  }

  double total = 0.0;
  std::vector<double> per_cluster(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = assignment[i];
    if (size[own] <= 1) continue;
    std::fill(per_cluster.begin(), per_cluster.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) per_cluster[assignment[j]] += dist[i * n + j];
    const double a = per_cluster[own] / static_cast<double>(size[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c == own || size[c] == 0) continue;
      b = std::min(b, per_cluster[c] / static_cast<double>(size[c]));
    }
    if (!std::isfinite(b)) continue;
    const double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

struct KRange {
  std::size_t lo = 2;
  std::size_t hi = 6;
};

struct ClusteringResult {
  std::size_t k = 1;
  std::map<NodeId, std::size_t> assignments;
  std::vector<Trajectory> centroids;
  std::optional<double> silhouette;  // undefined for k = 1

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> out(k, 0);
    for (const auto& [_, c] : assignments) ++out[c];
    return out;
  }

  std::vector<NodeId> members(std::size_t cluster) const {
    std::vector<NodeId> out;
    for (const auto& [id, c] : assignments) {
      if (c == cluster) out.push_back(id);
    }
    return out;
  }
};

// Runs k-means for every k in range and keeps the one with the highest mean
// silhouette (smallest k on ties). The default range is
// [2, min(6, n-1)], further capped by the number of distinct trajectories.
inline ClusteringResult cluster_trajectories(const std::map<NodeId, Trajectory>& series,
                                             std::optional<KRange> k_range = std::nullopt,
                                             std::uint64_t seed = kDefaultSeed) {
  if (series.size() < 2) throw Error(ErrorKind::invalid_argument, "clustering needs at least 2 series");
  std::vector<NodeId> ids;
  std::vector<Trajectory> points;
  for (const auto& [id, s] : series) {
    if (!points.empty() && s.size() != points.front().size()) {
      throw Error(ErrorKind::invalid_argument, "clustering needs series of equal length");
    }
    ids.push_back(id);
    points.push_back(s);
  }
  const std::size_t n = points.size();

  std::vector<Trajectory> distinct = points;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  ClusteringResult result;
  auto finish = [&](const KMeansRun& run, std::size_t k, std::optional<double> sil) {
    result.k = k;
    result.centroids = run.centroids;
    result.silhouette = sil;
    for (std::size_t i = 0; i < n; ++i) result.assignments[ids[i]] = run.assignment[i];
    return result;
  };

  if (distinct.size() == 1) return finish(kmeans(points, 1, seed), 1, std::nullopt);

  KRange range;
  if (k_range) {
    if (k_range->lo < 2 || k_range->hi > n - 1 || k_range->lo > k_range->hi) {
      throw Error(ErrorKind::invalid_argument, "k range must lie within [2, n-1]");
    }
    range = *k_range;
  } else {
    range.hi = std::min<std::size_t>(6, n - 1);
  }
  range.hi = std::min(range.hi, distinct.size());
  if (n == 2) range = {2, 2};  // two distinct series: each is its own cluster
  if (range.hi < range.lo) range.hi = range.lo = std::min(range.lo, distinct.size());

  std::optional<KMeansRun> best;
  std::size_t best_k = 0;
  double best_sil = -std::numeric_limits<double>::infinity();
  for (std::size_t k = range.lo; k <= range.hi; ++k) {
    auto run = kmeans(points, k, seed);
    const double s = silhouette(points, run.assignment, k);
    if (s > best_sil) {
      best_sil = s;
      best_k = k;
      best = std::move(run);
    }
  }
  return finish(*best, best_k, best_sil);
}

}  // namespace causeworks
