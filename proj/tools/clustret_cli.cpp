// Command-line front end: fit, query, eval, synth, oracle.
//
// Exit codes: 0 success, 1 data error, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "clustret/data_model.hpp"
#include "clustret/errors.hpp"
#include "clustret/evaluation.hpp"
#include "clustret/io.hpp"
#include "clustret/pipeline.hpp"
#include "clustret/retrieval.hpp"
#include "clustret/search.hpp"

namespace fs = std::filesystem;
using namespace clustret;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Options shared by every subcommand that fits or scores a model.
struct ModelFlags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<double> eta0;
  std::string method = "greedy";

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "Key/value config file (hyperparameters, search settings)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Random seed (overrides config)");
    cmd->add_option("--eta0", eta0, "Partition prior concentration (overrides config)");
  }

  RunConfig resolve() const {
    RunConfig cfg = config ? load_config(*config) : RunConfig{};
    if (seed) {
      cfg.search.seed = *seed;
      cfg.synth.seed = *seed;
    }
    if (eta0) cfg.hyper.eta0 = *eta0;
    cfg.hyper.validate();
    cfg.search.validate();
    return cfg;
  }

  FitOptions fit_options(unsigned threads = 0) const {
    const RunConfig cfg = resolve();
    FitOptions opts;
    opts.method = parse_fit_method(method);
    opts.hyper = cfg.hyper;
    opts.search = cfg.search;
    opts.threads = threads;
    return opts;
  }
};

std::vector<ExpressionMatrix> load_corpus(const CorpusManifest& manifest) {
  std::vector<ExpressionMatrix> raw;
  raw.reserve(manifest.experiments.size());
  for (const auto& e : manifest.experiments) raw.push_back(load_matrix(e.matrix, e.id));
  return raw;
}

const CorpusManifest::LabelFile& find_label_file(const CorpusManifest& manifest, const std::string& type) {
  for (const auto& l : manifest.label_files) {
    if (l.label_type == type) return l;
  }
  throw DataError("manifest has no label file for type '" + type + "'");
}

std::vector<DEProfile> load_de_profiles(const CorpusManifest& manifest, const std::set<std::string>& wanted) {
  std::vector<DEProfile> out;
  for (const auto& e : manifest.experiments) {
    if (!wanted.contains(e.id)) continue;
    if (!e.de_profile) throw DataError("experiment '" + e.id + "' has no DE profile in the manifest");
    out.push_back(load_de_profile(*e.de_profile, e.id));
  }
  return out;
}

void write_ranking_csv(const fs::path& path, const RankedResult& ranking) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << "rank,experiment_id,score\n";
  char buf[64];
  std::size_t rank = 0;
  for (const auto& e : ranking.entries()) {
    std::snprintf(buf, sizeof buf, "%.17g", e.score);
    out << ++rank << ',' << e.experiment_id << ',' << buf << '\n';
  }
}

// ---- fit --------------------------------------------------------------------

struct FitCommand {
  std::string manifest;
  std::string out;
  std::optional<std::size_t> top_k;
  unsigned threads = 0;
  ModelFlags model;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("fit", "Normalize, select genes and fit one clustering per experiment");
    cmd->add_option("--manifest", manifest, "Corpus manifest")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "Output model index (JSON lines)")->required();
    cmd->add_option("--method", model.method, "greedy | restricted | kmeans-fixed")
        ->check(CLI::IsMember({"greedy", "restricted", "kmeans-fixed"}));
    cmd->add_option("--top-k", top_k, "Genes per experiment for the shared gene list")->check(CLI::PositiveNumber);
    cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
    model.attach(cmd);
    cmd->callback([this] { run(); });
  }

  void run() const {
    const auto m = load_manifest(manifest);
    const auto raw = load_corpus(m);
    std::vector<std::optional<GeneScores>> scores;
    for (const auto& e : m.experiments) {
      scores.push_back(e.gene_scores ? std::optional(load_gene_scores(*e.gene_scores)) : std::nullopt);
    }
    const auto prepared = prepare_corpus(raw, scores, top_k);
    const auto index = fit_corpus(prepared.normalized, model.fit_options(threads));
    save_index(out, index);
    std::cout << "fitted " << index.size() << " experiments on " << prepared.genes.size() << " genes -> " << out
              << '\n';
  }
};

// ---- query --------------------------------------------------------------------

struct QueryCommand {
  std::string index_path;
  std::string data;
  std::string scheme = "nid";
  std::optional<std::string> keywords;
  std::optional<std::string> manifest;
  std::optional<std::string> exclude;
  std::optional<std::string> id;
  std::string out;
  ModelFlags model;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("query", "Rank indexed experiments against a query");
    cmd->add_option("--index", index_path, "Model index (JSON lines)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--data", data, "Query matrix (or DE profile for --scheme de)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--scheme", scheme, "nid | likelihood | de | combined")
        ->check(CLI::IsMember({"nid", "likelihood", "de", "combined"}));
    cmd->add_option("--keywords", keywords, "TYPE=VALUE keyword filter (combined scheme)");
    cmd->add_option("--manifest", manifest, "Corpus manifest (de and combined schemes)")->check(CLI::ExistingFile);
    cmd->add_option("--exclude", exclude, "Experiment id to leave out of the ranking");
    cmd->add_option("--id", id, "Query experiment id (default: file stem)");
    cmd->add_option("--method", model.method, "Fit method for the query model")
        ->check(CLI::IsMember({"greedy", "restricted", "kmeans-fixed"}));
    cmd->add_option("--out", out, "Output CSV (rank,experiment_id,score)")->required();
    model.attach(cmd);
    cmd->callback([this] { run(); });
  }

  void run() const {
    const auto index = load_index(index_path);
    const std::string exclude_id = exclude.value_or("");
    const auto opts = model.fit_options();
    const std::string query_id = id.value_or(fs::path(data).stem().string());

    auto distance_ranking = [&] {
      const auto q = prepare_query(load_matrix(data, query_id), index);
      const auto fitted = fit_experiment(q, opts);
      return model_distance_rank(fitted.clustering, fitted.gene_ids, index, exclude_id);
    };

    std::optional<RankedResult> result;
    if (scheme == "nid") {
      result = distance_ranking();
    } else if (scheme == "likelihood") {
      result = likelihood_rank(prepare_query(load_matrix(data, query_id), index), index, opts.hyper, exclude_id);
    } else if (scheme == "de") {
      if (!manifest) throw UsageError("--scheme de requires --manifest");
      const auto ids = index.ids();
      const auto profiles = load_de_profiles(load_manifest(*manifest), {ids.begin(), ids.end()});
      result = de_correlation_rank(load_de_profile(data, query_id), profiles, exclude_id);
    } else {
      if (!manifest || !keywords) throw UsageError("--scheme combined requires --manifest and --keywords TYPE=VALUE");
      const auto eq = keywords->find('=');
      if (eq == std::string::npos) throw UsageError("--keywords must have the form TYPE=VALUE");
      const auto m = load_manifest(*manifest);
      const auto gt = load_labels(find_label_file(m, keywords->substr(0, eq)).path, keywords->substr(0, eq));
      const auto distances = distance_ranking();
      result = combined_rank(keyword_mask(gt, keywords->substr(eq + 1), distances.ids()), distances);
    }
    write_ranking_csv(out, *result);
    std::cout << "ranked " << result->size() << " experiments -> " << out << '\n';
  }
};

// ---- eval -------------------------------------------------------------------

struct EvalCommand {
  std::string index_path;
  std::string manifest;
  std::vector<std::string> labels;
  std::size_t t = 1;
  std::optional<std::string> mode;
  std::vector<std::string> schemes;
  std::optional<std::string> keyword_type;
  std::string out_dir;
  ModelFlags model;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval", "Leave-one-out precision-recall evaluation");
    cmd->add_option("--index", index_path, "Model index (JSON lines)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--manifest", manifest, "Corpus manifest")->required()->check(CLI::ExistingFile);
    cmd->add_option("--labels", labels, "Label types defining relevance")->required()->delimiter(',');
    cmd->add_option("--t", t, "Number of label types that must match")->check(CLI::PositiveNumber);
    cmd->add_option("--mode", mode, "atleast | exact (default: exact when t equals the number of label types)")
        ->check(CLI::IsMember({"atleast", "exact"}));
    cmd->add_option("--schemes", schemes, "nid,likelihood,de (default: nid,likelihood, plus de when available)")
        ->delimiter(',')
        ->check(CLI::IsMember({"nid", "likelihood", "de"}));
    cmd->add_option("--keyword-type", keyword_type,
                    "Label type assumed known; adds keyword-only and keyword+distance rankings");
    cmd->add_option("--out-dir", out_dir, "Output directory")->required();
    model.attach(cmd);
    cmd->callback([this] { run(); });
  }

  void run() const {
    const auto index = load_index(index_path);
    const auto m = load_manifest(manifest);
    const auto ids = index.ids();
    const std::set<std::string> id_set(ids.begin(), ids.end());
    const auto cfg = model.resolve();

    std::vector<RelevanceMatrix> per_type;
    for (const auto& type : labels) {
      const auto gt = load_labels(find_label_file(m, type).path, type);
      per_type.push_back(relevance_matrix(complete_ground_truth(gt, ids), ids));
    }
    if (t > per_type.size()) throw UsageError("--t exceeds the number of label types");
    const CombineMode combine = mode ? (*mode == "exact" ? CombineMode::Exactly : CombineMode::AtLeast)
                                     : (t == per_type.size() && t > 1 ? CombineMode::Exactly : CombineMode::AtLeast);
    const auto relevance = combine_ground_truth(per_type, t, combine);

    std::vector<std::string> chosen = schemes;
    if (chosen.empty()) {
      chosen = {"nid", "likelihood"};
      bool all_de = true;
      for (const auto& e : m.experiments) {
        if (id_set.contains(e.id) && !e.de_profile) all_de = false;
      }
      if (all_de) chosen.push_back("de");
    }

    std::vector<std::pair<std::string, std::vector<QueryRanking>>> runs;
    for (const auto& scheme : chosen) {
      if (scheme == "nid") {
        runs.emplace_back("model-distance", loo_model_distance(index));
      } else if (scheme == "likelihood") {
        std::vector<ExpressionMatrix> data;
        for (const auto& e : m.experiments) {
          if (id_set.contains(e.id)) data.push_back(prepare_query(load_matrix(e.matrix, e.id), index));
        }
        runs.emplace_back("likelihood", loo_likelihood(index, data, cfg.hyper));
      } else {
        const auto profiles = load_de_profiles(m, id_set);
        runs.emplace_back("de-correlation", loo_de_correlation(profiles));
      }
    }
    if (keyword_type) {
      const auto gt = load_labels(find_label_file(m, *keyword_type).path, *keyword_type);
      runs.emplace_back("keyword", loo_keyword_only(ids, gt));
      runs.emplace_back("keyword+distance", loo_combined(index, gt));
    }

    fs::create_directories(out_dir);
    std::ofstream summary(fs::path(out_dir) / "summary.csv", std::ios::binary);
    if (!summary) throw DataError("cannot write to '" + out_dir + "'");
    summary << "scheme,map,queries,skipped_queries,top1_fraction,top1_matched\n";
    std::vector<std::pair<std::string, PRCurve>> curves;
    char buf[160];
    for (const auto& [name, rankings] : runs) {
      const auto curve = pr_curve(rankings, relevance);
      const auto scores = score_rankings(rankings, relevance);
      const auto top1 = top1_match_eval(rankings, relevance);
      write_pr_csv(fs::path(out_dir) / ("pr_" + name + ".csv"), curve);
      std::ofstream ap(fs::path(out_dir) / ("ap_" + name + ".csv"), std::ios::binary);
      ap << "experiment_id,average_precision\n";
      for (const auto& [q, value] : scores.per_query) {
        std::snprintf(buf, sizeof buf, "%.10g", value);
        ap << q << ',' << buf << '\n';
      }
      std::snprintf(buf, sizeof buf, "%s,%.10g,%zu,%zu,%.10g,%zu\n", name.c_str(), scores.map,
                    scores.per_query.size(), scores.skipped_queries, top1.fraction, top1.matched);
      summary << buf;
      std::printf("%-18s mAP %.4f  top-1 %zu/%zu  (%zu queries without relevant experiments)\n", name.c_str(),
                  scores.map, top1.matched, top1.query_count, scores.skipped_queries);
      curves.emplace_back(name, curve);
    }
    std::string title = "Precision-recall:";
    for (const auto& l : labels) title += " " + l;
    write_pr_svg(fs::path(out_dir) / "pr.svg", curves, title);
  }
};

// ---- synth ------------------------------------------------------------------

struct SynthCommand {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("synth", "Generate a synthetic corpus with a manifest and label files");
    cmd->add_option("--config", config, "Key/value config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Generator seed (overrides config)");
    cmd->add_option("--out-dir", out_dir, "Output directory")->required();
    cmd->callback([this] { run(); });
  }

  void run() const {
    RunConfig cfg = config ? load_config(*config) : RunConfig{};
    if (seed) cfg.synth.seed = *seed;
    const auto corpus = generate_synthetic_corpus(cfg.synth);
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    CorpusManifest manifest;
    for (const auto& d : corpus.experiments) {
      const fs::path file = dir / (d.experiment_id() + ".tsv");
      save_matrix(file, d);
      manifest.experiments.push_back({d.experiment_id(), file, {}, {}});
    }
    for (const auto& gt : corpus.ground_truth) {
      const fs::path file = dir / ("labels_" + gt.label_type + ".tsv");
      save_labels(file, gt);
      manifest.label_files.push_back({gt.label_type, file});
    }
    save_manifest(dir / "manifest.tsv", manifest);
    std::cout << "wrote " << corpus.experiments.size() << " experiments to " << dir.string() << '\n';
  }
};

// ---- oracle -----------------------------------------------------------------

struct OracleCommand {
  std::size_t n = 0;
  std::string data;
  bool raw = false;
  ModelFlags model;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("oracle", "Exact MAP clustering by enumeration (first N rows, N <= 12)");
    cmd->add_option("--n", n, "Number of rows to use")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--data", data, "Matrix file")->required()->check(CLI::ExistingFile);
    cmd->add_flag("--raw", raw, "Skip column z-scoring");
    model.attach(cmd);
    cmd->callback([this] { run(); });
  }

  void run() const {
    if (n > kBruteForceLimit) {
      throw UsageError("--n must be at most " + std::to_string(kBruteForceLimit));
    }
    const auto full = load_matrix(data);
    if (n > full.rows()) {
      throw DataError("--n " + std::to_string(n) + " exceeds the " + std::to_string(full.rows()) + " rows of the data");
    }
    std::vector<std::string> genes(full.gene_ids().begin(), full.gene_ids().begin() + static_cast<std::ptrdiff_t>(n));
    auto d = align(full, genes);
    if (!raw) d = zscore_normalize(d);
    const auto result = brute_force_map(d, model.resolve().hyper);
    std::printf("k\t%zu\nlog_score\t%.17g\n", result.clustering.k(), result.log_score);
    for (std::size_t i = 0; i < n; ++i) std::printf("%s\t%u\n", genes[i].c_str(), result.clustering[i] + 1);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clustret: clustering-based retrieval of gene expression experiments"};
  app.require_subcommand(1);
  FitCommand fit;
  QueryCommand query;
  EvalCommand eval;
  SynthCommand synth;
  OracleCommand oracle;
  fit.attach(app);
  query.attach(app);
  eval.attach(app);
  synth.attach(app);
  oracle.attach(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
