#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "clustret/data_model.hpp"

namespace clustret {

/// Per-column sufficient statistics (count, mean, sum of squared deviations)
/// of the rows belonging to one cluster. Updates use Welford's recurrence,
/// and merging uses the pairwise (Chan) combination.
class ClusterStats {
 public:
  explicit ClusterStats(std::size_t columns) : mean_(columns, 0.0), ssd_(columns, 0.0) {}

  std::size_t count() const { return count_; }
  std::size_t columns() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& ssd() const { return ssd_; }

  void add(std::span<const double> row);
  /// Reverses a previous add of the same row. Requires count() >= 1.
  void remove(std::span<const double> row);
  void merge(const ClusterStats& other);

  /// Log of the Normal-Gamma marginal likelihood of the cluster's rows,
  /// summed over columns. Requires count() >= 1.
  double log_marginal(const Hyperparameters& h) const;

 private:
  std::size_t count_ = 0;
  std::vector<double> mean_;
  std::vector<double> ssd_;
};

ClusterStats cluster_stats(const ExpressionMatrix& d, std::span<const std::size_t> rows);

/// Log marginal likelihood of one column of one cluster given its
/// size, sample mean and sum of squared deviations.
double log_column_marginal(std::size_t count, double mean, double ssd, const Hyperparameters& h);

/// log P(S) under the CRP-form partition prior with concentration eta0.
double log_crp_prior(const Clustering& s, double eta0);

/// Per-cluster part of the prior: log eta0 + log (|s_c| - 1)!.
double log_crp_cluster_term(std::size_t cluster_size, double eta0);
/// Partition-independent part of the prior: -sum_{i=1..n} log(eta0 + i - 1).
double log_crp_normalizer(std::size_t n, double eta0);

/// Log marginal likelihood of the given rows of d treated as one cluster.
/// Throws std::invalid_argument if rows is empty.
double log_cluster_marginal(const ExpressionMatrix& d, std::span<const std::size_t> rows,
                            const Hyperparameters& h);

/// Unnormalized log posterior of a clustering: sum of the cluster marginals
/// plus the log partition prior. This is the MAP objective.
double log_posterior_score(const ExpressionMatrix& d, const Clustering& s, const Hyperparameters& h);

/// log p(D_query | S) with the partition prior excluded. The query rows must
/// already be aligned to the clustering's items.
double marginal_likelihood_of_query(const ExpressionMatrix& d_query, const Clustering& s_stored,
                                    const Hyperparameters& h);

}  // namespace clustret
