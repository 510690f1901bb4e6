#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "clustret/data_model.hpp"

namespace clustret {

struct SearchConfig {
  std::uint64_t seed = 0;
  std::size_t max_sweeps_without_improvement = 10;
  std::size_t restarts = 3;
  double move_prob = 0.6;
  double split_prob = 0.2;
  double merge_prob = 0.2;
  /// Keep the incumbent score after every accepted proposal (diagnostics).
  bool record_trace = false;

  void validate() const;
};

struct SearchResult {
  Clustering clustering;
  double log_score;
  /// Incumbent scores per restart, one value per accepted proposal,
  /// preceded by the initial score. Empty unless record_trace is set.
  std::vector<std::vector<double>> traces;
};

/// Stochastic greedy MAP search over all set partitions using move, split
/// and merge proposals; a proposal is kept only if it strictly raises the
/// log posterior score. Deterministic for a fixed seed.
SearchResult greedy_map_search(const ExpressionMatrix& d, const Hyperparameters& h, const SearchConfig& cfg);

inline constexpr std::size_t kBruteForceLimit = 12;

/// Exact MAP by enumeration of every set partition. Ties resolve to the
/// lexicographically smallest canonical assignment. Throws for n > 12.
SearchResult brute_force_map(const ExpressionMatrix& d, const Hyperparameters& h);

/// Calls visit once per set partition of {0..n-1}, as canonical restricted
/// growth strings in lexicographic order.
void for_each_set_partition(std::size_t n, const std::function<void(std::span<const Label>)>& visit);

struct KMeansResult {
  Clustering clustering;
  /// Within-cluster sum of squares after each centroid update.
  std::vector<double> sse_history;
};

/// Lloyd's k-means on the rows of d with k-means++ seeding. Empty clusters
/// are refilled with the point farthest from its centroid.
KMeansResult kmeans_detailed(const ExpressionMatrix& d, std::size_t k, std::uint64_t seed);
Clustering kmeans(const ExpressionMatrix& d, std::size_t k, std::uint64_t seed);

/// Agglomerative clustering of rows with complete linkage on Euclidean
/// distance, cut at k clusters. Equal linkage distances merge the pair with
/// the smallest (first, second) minimum-member indices first.
Clustering complete_linkage(const ExpressionMatrix& d, std::size_t k);

enum class HeuristicAlgorithm { KMeans, CompleteLinkage };

struct KRange {
  std::size_t lo;
  std::size_t hi;  // inclusive
  std::size_t size() const { return hi >= lo ? hi - lo + 1 : 0; }
};

/// {2, ..., ceil(sqrt(n))}, clipped to [1, n].
KRange default_k_range(std::size_t n);
/// ceil(sqrt(n) / 2), at least 1.
std::size_t trivial_k(std::size_t n);

/// One clustering per (algorithm, k), algorithm-major.
std::vector<Clustering> candidate_sweep(const ExpressionMatrix& d, std::span<const HeuristicAlgorithm> algorithms,
                                        KRange k_range, std::uint64_t seed);

/// Best candidate under the PPM objective; the first wins on ties.
SearchResult restricted_map_search(const ExpressionMatrix& d, std::span<const Clustering> candidates,
                                   const Hyperparameters& h);

}  // namespace clustret
