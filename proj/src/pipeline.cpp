#include "clustret/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <functional>
#include <istream>
#include <thread>
#include <unordered_map>

#include "clustret/errors.hpp"
#include "clustret/ppm.hpp"

namespace clustret {

std::string to_string(FitMethod method) {
  switch (method) {
    case FitMethod::Greedy: return "greedy";
    case FitMethod::Restricted: return "restricted";
    case FitMethod::KMeansFixed: return "kmeans-fixed";
  }
  return "unknown";
}

FitMethod parse_fit_method(const std::string& name) {
  if (name == "greedy") return FitMethod::Greedy;
  if (name == "restricted") return FitMethod::Restricted;
  if (name == "kmeans-fixed") return FitMethod::KMeansFixed;
  throw std::invalid_argument("unknown fit method '" + name + "' (expected greedy, restricted or kmeans-fixed)");
}

ModelIndexEntry fit_experiment(const ExpressionMatrix& normalized, const FitOptions& options) {
  const auto& h = options.hyper;
  h.validate();
  const std::uint64_t seed = options.search.seed;
  SearchResult result = [&] {
    switch (options.method) {
      case FitMethod::Greedy:
        return greedy_map_search(normalized, h, options.search);
      case FitMethod::Restricted: {
        const auto candidates = candidate_sweep(normalized, options.restricted_algorithms,
                                                default_k_range(normalized.rows()), seed);
        return restricted_map_search(normalized, candidates, h);
      }
      case FitMethod::KMeansFixed: {
        Clustering c = kmeans(normalized, trivial_k(normalized.rows()), seed);
        const double score = log_posterior_score(normalized, c, h);
        return SearchResult{std::move(c), score, {}};
      }
    }
    throw std::logic_error("unhandled fit method");
  }();
  return ModelIndexEntry(normalized.experiment_id(), normalized.gene_ids(), std::move(result.clustering),
                         FitMetadata{to_string(options.method), result.log_score, seed});
}

ModelIndex fit_corpus(std::span<const ExpressionMatrix> normalized, const FitOptions& options) {
  std::vector<std::optional<ModelIndexEntry>> slots(normalized.size());
  std::vector<std::exception_ptr> errors(normalized.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t e = next++; e < normalized.size(); e = next++) {
      try {
        slots[e].emplace(fit_experiment(normalized[e], options));
      } catch (...) {
        errors[e] = std::current_exception();
      }
    }
  };
  unsigned threads = options.threads != 0 ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, normalized.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  ModelIndex index;
  for (std::size_t e = 0; e < normalized.size(); ++e) {
    if (errors[e]) std::rethrow_exception(errors[e]);
    index.add(std::move(*slots[e]));
  }
  return index;
}

PreparedCorpus prepare_corpus(const std::vector<ExpressionMatrix>& raw,
                              const std::vector<std::optional<GeneScores>>& scores, std::optional<std::size_t> top_k) {
  PreparedCorpus out;
  out.genes = top_k ? select_genes(raw, scores, *top_k) : common_genes(raw);
  if (!raw.empty() && out.genes.empty()) throw DataError("the experiments share no genes");
  out.normalized.reserve(raw.size());
  for (const auto& d : raw) out.normalized.push_back(zscore_normalize(align(d, out.genes)));
  return out;
}

ExpressionMatrix prepare_query(const ExpressionMatrix& raw, const ModelIndex& index) {
  if (index.empty()) throw DataError("model index is empty");
  const auto& genes = index.entries().front().gene_ids;
  for (const auto& e : index.entries()) {
    if (e.gene_ids != genes) {
      throw DataError("index entries '" + index.entries().front().experiment_id + "' and '" + e.experiment_id +
                      "' use different gene lists");
    }
  }
  return zscore_normalize(align(raw, genes));
}

namespace {

std::string trim_copy(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

RunConfig parse_config(std::istream& in, RunConfig cfg) {
  using Setter = std::function<void(const std::string&)>;
  auto real = [](double& target) -> Setter {
    return [&target](const std::string& v) {
      const auto parsed = parse_double(v);
      if (!parsed) throw DataError("'" + v + "' is not a number");
      target = *parsed;
    };
  };
  auto count = [](auto& target) -> Setter {
    return [&target](const std::string& v) {
      const auto parsed = parse_double(v);
      if (!parsed || *parsed < 0 || *parsed != static_cast<double>(static_cast<std::uint64_t>(*parsed))) {
        throw DataError("'" + v + "' is not a non-negative integer");
      }
      target = static_cast<std::remove_reference_t<decltype(target)>>(*parsed);
    };
  };
  const std::unordered_map<std::string, Setter> setters{
      {"mu0", real(cfg.hyper.mu0)},
      {"rho0", real(cfg.hyper.rho0)},
      {"alpha0", real(cfg.hyper.alpha0)},
      {"beta0", real(cfg.hyper.beta0)},
      {"eta0", real(cfg.hyper.eta0)},
      {"seed",
       [&cfg, seed = count(cfg.search.seed)](const std::string& v) {
         seed(v);
         cfg.synth.seed = cfg.search.seed;
       }},
      {"max_sweeps_without_improvement", count(cfg.search.max_sweeps_without_improvement)},
      {"restarts", count(cfg.search.restarts)},
      {"move_prob", real(cfg.search.move_prob)},
      {"split_prob", real(cfg.search.split_prob)},
      {"merge_prob", real(cfg.search.merge_prob)},
      {"num_experiments", count(cfg.synth.num_experiments)},
      {"num_conditions", count(cfg.synth.num_conditions)},
      {"genes", count(cfg.synth.genes)},
      {"samples", count(cfg.synth.samples)},
      {"noise_sigma", real(cfg.synth.noise_sigma)},
      {"perturbation", real(cfg.synth.perturbation)},
      {"clusters", count(cfg.synth.clusters)},
      {"cluster_mean_sd", real(cfg.synth.cluster_mean_sd)},
      {"groups", count(cfg.synth.groups)},
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim_copy(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw DataError(where + "expected 'key = value'");
    const std::string key = trim_copy(line.substr(0, eq));
    std::string value = trim_copy(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    auto it = setters.find(key);
    if (it == setters.end()) throw DataError(where + "unknown key '" + key + "'");
    try {
      it->second(value);
    } catch (const DataError& e) {
      throw DataError(where + key + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig defaults) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path.string() + "'");
  return parse_config(in, std::move(defaults));
}

std::vector<QueryRanking> loo_model_distance(const ModelIndex& index) {
  std::vector<QueryRanking> out;
  out.reserve(index.size());
  for (const auto& q : index.entries()) {
    out.push_back({q.experiment_id, model_distance_rank(q.clustering, q.gene_ids, index, q.experiment_id)});
  }
  return out;
}

std::vector<QueryRanking> loo_likelihood(const ModelIndex& index, std::span<const ExpressionMatrix> query_data,
                                         const Hyperparameters& h) {
  std::vector<QueryRanking> out;
  out.reserve(query_data.size());
  for (const auto& d : query_data) {
    if (index.find(d.experiment_id()) == nullptr) {
      throw DataError("experiment '" + d.experiment_id() + "' is not in the model index");
    }
    out.push_back({d.experiment_id(), likelihood_rank(d, index, h, d.experiment_id())});
  }
  return out;
}

std::vector<QueryRanking> loo_de_correlation(std::span<const DEProfile> profiles) {
  std::vector<QueryRanking> out;
  out.reserve(profiles.size());
  for (const auto& q : profiles) {
    out.push_back({q.experiment_id, de_correlation_rank(q, profiles, q.experiment_id)});
  }
  return out;
}

std::map<std::string, bool> keyword_mask(const GroundTruth& gt, const std::string& value,
                                         const std::vector<std::string>& ids) {
  std::map<std::string, bool> mask;
  for (const auto& id : ids) {
    auto it = gt.labels.find(id);
    mask[id] = it != gt.labels.end() && it->second.has_value() && *it->second == value;
  }
  return mask;
}

RankedResult keyword_rank(const std::map<std::string, bool>& mask) {
  std::vector<ScoredExperiment> matched;
  for (const auto& [id, hit] : mask) {
    if (hit) matched.push_back({id, 0.0});
  }
  return RankedResult(std::move(matched), Polarity::AscendingIsBetter);
}

namespace {

std::vector<std::string> others(const std::vector<std::string>& ids, const std::string& query) {
  std::vector<std::string> out;
  for (const auto& id : ids) {
    if (id != query) out.push_back(id);
  }
  return out;
}

const std::optional<std::string>& label_of(const GroundTruth& gt, const std::string& id) {
  static const std::optional<std::string> kNone;
  auto it = gt.labels.find(id);
  return it == gt.labels.end() ? kNone : it->second;
}

}  // namespace

std::vector<QueryRanking> loo_combined(const ModelIndex& index, const GroundTruth& known_labels) {
  const auto ids = index.ids();
  std::vector<QueryRanking> out;
  for (const auto& q : index.entries()) {
    const auto& value = label_of(known_labels, q.experiment_id);
    auto distances = model_distance_rank(q.clustering, q.gene_ids, index, q.experiment_id);
    if (!value) {
      out.push_back({q.experiment_id, RankedResult({}, Polarity::AscendingIsBetter)});
      continue;
    }
    out.push_back(
        {q.experiment_id, combined_rank(keyword_mask(known_labels, *value, others(ids, q.experiment_id)), distances)});
  }
  return out;
}

std::vector<QueryRanking> loo_keyword_only(const std::vector<std::string>& ids, const GroundTruth& known_labels) {
  std::vector<QueryRanking> out;
  for (const auto& q : ids) {
    const auto& value = label_of(known_labels, q);
    if (!value) {
      out.push_back({q, RankedResult({}, Polarity::AscendingIsBetter)});
      continue;
    }
    out.push_back({q, keyword_rank(keyword_mask(known_labels, *value, others(ids, q)))});
  }
  return out;
}

GroundTruth complete_ground_truth(const GroundTruth& gt, const std::vector<std::string>& ids) {
  GroundTruth out{gt.label_type, {}};
  for (const auto& id : ids) out.labels.emplace(id, label_of(gt, id));
  return out;
}

}  // namespace clustret
