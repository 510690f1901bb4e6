#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clustret/data_model.hpp"
#include "clustret/evaluation.hpp"
#include "clustret/io.hpp"
#include "clustret/retrieval.hpp"
#include "clustret/search.hpp"

namespace clustret {

enum class FitMethod { Greedy, Restricted, KMeansFixed };

std::string to_string(FitMethod method);
/// Accepts "greedy", "restricted" and "kmeans-fixed".
FitMethod parse_fit_method(const std::string& name);

struct FitOptions {
  FitMethod method = FitMethod::Greedy;
  Hyperparameters hyper;
  SearchConfig search;
  /// Heuristics that populate the restricted model space.
  std::vector<HeuristicAlgorithm> restricted_algorithms{HeuristicAlgorithm::KMeans};
  /// Worker threads for fit_corpus; 0 picks the hardware concurrency.
  unsigned threads = 0;
};

/// Fit one already-normalized experiment.
ModelIndexEntry fit_experiment(const ExpressionMatrix& normalized, const FitOptions& options);

/// Fit every experiment (in parallel); entries keep the input order.
ModelIndex fit_corpus(std::span<const ExpressionMatrix> normalized, const FitOptions& options);

struct PreparedCorpus {
  std::vector<std::string> genes;
  std::vector<ExpressionMatrix> normalized;
};

/// Select the shared gene list (top_k per experiment, or every common gene
/// when top_k is absent), align each experiment to it and z-score columns.
PreparedCorpus prepare_corpus(const std::vector<ExpressionMatrix>& raw,
                              const std::vector<std::optional<GeneScores>>& scores, std::optional<std::size_t> top_k);

/// Query preparation for a stored index: align to the index's gene list and
/// z-score. Throws DataError if the index entries disagree on genes.
ExpressionMatrix prepare_query(const ExpressionMatrix& raw, const ModelIndex& index);

// ---- Configuration files -----------------------------------------------------

struct RunConfig {
  Hyperparameters hyper;
  SearchConfig search;
  SyntheticCorpusConfig synth;
};

/// "key = value" lines; '#' comments and [section] headers are ignored.
/// Unknown keys are an error.
RunConfig parse_config(std::istream& in, RunConfig defaults = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig defaults = {});

// ---- Leave-one-out evaluation ------------------------------------------------

std::vector<QueryRanking> loo_model_distance(const ModelIndex& index);
/// query_data holds each indexed experiment's normalized matrix (matched by id).
std::vector<QueryRanking> loo_likelihood(const ModelIndex& index, std::span<const ExpressionMatrix> query_data,
                                         const Hyperparameters& h);
std::vector<QueryRanking> loo_de_correlation(std::span<const DEProfile> profiles);
/// Keyword filter on the query's own value of known_labels, ranked by
/// model distance. Queries without a value get an empty ranking.
std::vector<QueryRanking> loo_combined(const ModelIndex& index, const GroundTruth& known_labels);
/// Keyword filter alone; matches are listed in id order.
std::vector<QueryRanking> loo_keyword_only(const std::vector<std::string>& ids, const GroundTruth& known_labels);

/// mask[id] = label(id) == value, over ids; experiments without a label are false.
std::map<std::string, bool> keyword_mask(const GroundTruth& gt, const std::string& value,
                                         const std::vector<std::string>& ids);

/// Ranking of the experiments selected by a keyword mask, in id order.
RankedResult keyword_rank(const std::map<std::string, bool>& mask);

/// Ground truth for every id: labels from the file, absent where not listed.
GroundTruth complete_ground_truth(const GroundTruth& gt, const std::vector<std::string>& ids);

}  // namespace clustret
