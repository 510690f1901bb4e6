#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clustret/data_model.hpp"

namespace clustret {

enum class Polarity { AscendingIsBetter, DescendingIsBetter };

struct ScoredExperiment {
  std::string experiment_id;
  double score;
};

/// Experiments ordered best-first. Ties are broken by experiment id.
class RankedResult {
 public:
  RankedResult(std::vector<ScoredExperiment> entries, Polarity polarity);

  const std::vector<ScoredExperiment>& entries() const { return entries_; }
  Polarity polarity() const { return polarity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::vector<std::string> ids() const;

 private:
  std::vector<ScoredExperiment> entries_;
  Polarity polarity_;
};

/// Per-gene differential-expression p-values of one experiment.
struct DEProfile {
  std::string experiment_id;
  std::vector<std::string> gene_ids;
  std::vector<double> p_values;

  DEProfile(std::string id, std::vector<std::string> genes, std::vector<double> p);
};

/// Rank index entries by NID to the query clustering (ascending). Every
/// entry must use the query's gene list. Entries whose id equals exclude_id
/// are skipped.
RankedResult model_distance_rank(const Clustering& query, const std::vector<std::string>& query_genes,
                                 const ModelIndex& index, std::string_view exclude_id = {});

/// Rank index entries by log p(D_query | S_m) (descending). The query is
/// aligned to each entry's gene list; missing genes are an error.
RankedResult likelihood_rank(const ExpressionMatrix& query_data, const ModelIndex& index, const Hyperparameters& h,
                             std::string_view exclude_id = {});

/// Pearson correlation of two equally long vectors. Throws DataError when
/// fewer than two values are given or either vector is constant.
double pearson_correlation(std::span<const double> x, std::span<const double> y);

/// Rank profiles by Pearson correlation of p-values with the query over
/// the genes they share (descending).
RankedResult de_correlation_rank(const DEProfile& query, std::span<const DEProfile> profiles,
                                 std::string_view exclude_id = {});

/// Keep only experiments whose mask value is true, in distance order.
/// The mask must cover exactly the experiments in the distance ranking.
RankedResult combined_rank(const std::map<std::string, bool>& keyword_mask, const RankedResult& distances);

}  // namespace clustret
