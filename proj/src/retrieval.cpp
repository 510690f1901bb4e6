#include "clustret/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "clustret/errors.hpp"
#include "clustret/io.hpp"
#include "clustret/metrics.hpp"
#include "clustret/ppm.hpp"

namespace clustret {

RankedResult::RankedResult(std::vector<ScoredExperiment> entries, Polarity polarity)
    : entries_(std::move(entries)), polarity_(polarity) {
  std::unordered_set<std::string> seen;
  for (const auto& e : entries_) {
    if (!std::isfinite(e.score)) throw DataError("non-finite score for experiment '" + e.experiment_id + "'");
    if (!seen.insert(e.experiment_id).second) {
      throw DataError("experiment '" + e.experiment_id + "' ranked twice");
    }
  }
  const bool ascending = polarity_ == Polarity::AscendingIsBetter;
  std::sort(entries_.begin(), entries_.end(), [ascending](const auto& a, const auto& b) {
    if (a.score != b.score) return ascending ? a.score < b.score : a.score > b.score;
    return a.experiment_id < b.experiment_id;
  });
}

std::vector<std::string> RankedResult::ids() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.experiment_id);
  return out;
}

DEProfile::DEProfile(std::string id, std::vector<std::string> genes, std::vector<double> p)
    : experiment_id(std::move(id)), gene_ids(std::move(genes)), p_values(std::move(p)) {
  if (gene_ids.size() != p_values.size()) {
    throw DataError("DE profile '" + experiment_id + "': gene and p-value counts differ");
  }
  for (std::size_t i = 0; i < p_values.size(); ++i) {
    if (!(p_values[i] > 0.0 && p_values[i] <= 1.0)) {
      throw DataError("DE profile '" + experiment_id + "': p-value for gene '" + gene_ids[i] +
                      "' is outside (0, 1]");
    }
  }
}

RankedResult model_distance_rank(const Clustering& query, const std::vector<std::string>& query_genes,
                                 const ModelIndex& index, std::string_view exclude_id) {
  if (query.n() != query_genes.size()) {
    throw DataError("query clustering covers " + std::to_string(query.n()) + " items but " +
                    std::to_string(query_genes.size()) + " genes are listed");
  }
  std::vector<ScoredExperiment> scored;
  scored.reserve(index.size());
  for (const auto& entry : index.entries()) {
    if (entry.experiment_id == exclude_id) continue;
    if (entry.gene_ids != query_genes) {
      throw DataError("index entry '" + entry.experiment_id + "' uses a different gene universe than the query");
    }
    scored.push_back({entry.experiment_id, nid(query, entry.clustering)});
  }
  return RankedResult(std::move(scored), Polarity::AscendingIsBetter);
}

RankedResult likelihood_rank(const ExpressionMatrix& query_data, const ModelIndex& index, const Hyperparameters& h,
                             std::string_view exclude_id) {
  std::vector<ScoredExperiment> scored;
  scored.reserve(index.size());
  for (const auto& entry : index.entries()) {
    if (entry.experiment_id == exclude_id) continue;
    const double ll = query_data.gene_ids() == entry.gene_ids
                          ? marginal_likelihood_of_query(query_data, entry.clustering, h)
                          : marginal_likelihood_of_query(align(query_data, entry.gene_ids), entry.clustering, h);
    scored.push_back({entry.experiment_id, ll});
  }
  return RankedResult(std::move(scored), Polarity::DescendingIsBetter);
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("correlation needs equally long vectors");
  if (x.size() < 2) throw DataError("correlation needs at least two values");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) throw DataError("correlation undefined for a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

RankedResult de_correlation_rank(const DEProfile& query, std::span<const DEProfile> profiles,
                                 std::string_view exclude_id) {
  std::unordered_map<std::string, std::size_t> query_pos;
  for (std::size_t i = 0; i < query.gene_ids.size(); ++i) query_pos.emplace(query.gene_ids[i], i);

  std::vector<ScoredExperiment> scored;
  scored.reserve(profiles.size());
  for (const auto& profile : profiles) {
    if (profile.experiment_id == exclude_id) continue;
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < profile.gene_ids.size(); ++i) {
      auto it = query_pos.find(profile.gene_ids[i]);
      if (it == query_pos.end()) continue;
      x.push_back(query.p_values[it->second]);
      y.push_back(profile.p_values[i]);
    }
    try {
      scored.push_back({profile.experiment_id, pearson_correlation(x, y)});
    } catch (const DataError& e) {
      throw DataError("DE profile '" + profile.experiment_id + "': " + e.what() + " (" + std::to_string(x.size()) +
                      " shared genes)");
    }
  }
  return RankedResult(std::move(scored), Polarity::DescendingIsBetter);
}

RankedResult combined_rank(const std::map<std::string, bool>& keyword_mask, const RankedResult& distances) {
  if (keyword_mask.size() != distances.size()) {
    throw DataError("keyword mask covers " + std::to_string(keyword_mask.size()) + " experiments, ranking covers " +
                    std::to_string(distances.size()));
  }
  std::vector<ScoredExperiment> kept;
  for (const auto& e : distances.entries()) {
    auto it = keyword_mask.find(e.experiment_id);
    if (it == keyword_mask.end()) {
      throw DataError("experiment '" + e.experiment_id + "' is missing from the keyword mask");
    }
    if (it->second) kept.push_back(e);
  }
  return RankedResult(std::move(kept), distances.polarity());
}

}  // namespace clustret
