#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "clustret/data_model.hpp"
#include "clustret/retrieval.hpp"

namespace clustret {

/// Ranking produced for one query experiment. The query itself must not
/// appear among the ranked entries.
struct QueryRanking {
  std::string query_id;
  RankedResult ranking;
};

struct PRCurve {
  struct Point {
    std::size_t cutoff;
    double recall;
    double precision;
  };
  std::vector<Point> points;
  std::size_t query_count = 0;
  /// Queries without any relevant experiment; excluded from the averages.
  std::size_t skipped_queries = 0;
};

/// Precision and recall at every rank cutoff 1..M-1, averaged over queries
/// that have at least one relevant experiment. A ranking shorter than the
/// cutoff contributes precision over the items it does return (0 if none).
PRCurve pr_curve(std::span<const QueryRanking> rankings, const RelevanceMatrix& relevance);

/// Mean over the relevant set of precision at each relevant item's rank;
/// relevant items missing from the ranking contribute 0.
double average_precision(const RankedResult& ranking, const std::set<std::string>& relevant);

double mean_average_precision(std::span<const double> average_precisions);

struct RetrievalScores {
  /// (query id, AP) for every query with at least one relevant experiment.
  std::vector<std::pair<std::string, double>> per_query;
  double map = 0.0;
  std::size_t skipped_queries = 0;
};

RetrievalScores score_rankings(std::span<const QueryRanking> rankings, const RelevanceMatrix& relevance);

enum class CombineMode { AtLeast, Exactly };

/// g_ij = 1 iff the number of matrices marking (i, j) relevant is >= t
/// (AtLeast) or == t (Exactly).
RelevanceMatrix combine_ground_truth(std::span<const RelevanceMatrix> matrices, std::size_t t,
                                     CombineMode mode = CombineMode::AtLeast);

struct Top1Report {
  double fraction = 0.0;
  std::size_t matched = 0;
  std::size_t query_count = 0;
  std::size_t skipped_queries = 0;
};

/// Fraction of queries (with >= 1 relevant experiment) whose top-ranked
/// experiment is relevant.
Top1Report top1_match_eval(std::span<const QueryRanking> rankings, const RelevanceMatrix& relevance);

// ---- Synthetic corpora -------------------------------------------------------

struct SyntheticCorpusConfig {
  std::size_t num_experiments = 30;
  std::size_t num_conditions = 5;
  std::size_t genes = 60;
  std::size_t samples = 8;
  double noise_sigma = 1.0;
  /// Per-gene probability of reassignment to a random cluster.
  double perturbation = 0.1;
  /// Clusters in each condition's base partition.
  std::size_t clusters = 6;
  /// Standard deviation of the per-cluster, per-sample means.
  double cluster_mean_sd = 4.0;
  /// When > 0, a second label type "group" with value condition % groups.
  std::size_t groups = 0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticCorpus {
  std::vector<ExpressionMatrix> experiments;
  /// "condition", then "group" when configured.
  std::vector<GroundTruth> ground_truth;
  std::vector<Clustering> planted;
};

/// Each condition gets a random base partition of the genes; each of its
/// experiments perturbs that partition and draws every cluster-sample block
/// from a Gaussian around a random cluster mean. Deterministic in the seed.
SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusConfig& cfg);

// ---- Output ----------------------------------------------------------------

/// CSV with header "cutoff,recall,precision".
void write_pr_csv(const std::filesystem::path& path, const PRCurve& curve);

/// Standalone SVG with one precision-recall polyline per named curve.
void write_pr_svg(const std::filesystem::path& path, const std::vector<std::pair<std::string, PRCurve>>& curves,
                  const std::string& title);

}  // namespace clustret
