#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "clustret/data_model.hpp"
#include "clustret/retrieval.hpp"

namespace clustret {

// ---- Expression matrices ---------------------------------------------------

/// Parse a delimited matrix: a header row whose first cell names the gene
/// column followed by sample ids, then one row per gene. The delimiter is
/// a tab if the header contains one, otherwise a comma.
ExpressionMatrix parse_matrix(std::istream& in, const std::string& experiment_id);
/// Experiment id defaults to the file stem.
ExpressionMatrix load_matrix(const std::filesystem::path& path, std::optional<std::string> experiment_id = {});
/// Tab-separated, values written with 17 significant digits.
void write_matrix(std::ostream& out, const ExpressionMatrix& d);
void save_matrix(const std::filesystem::path& path, const ExpressionMatrix& d);

/// Center every column and scale it to unit population variance. Constant
/// columns are only centered.
ExpressionMatrix zscore_normalize(const ExpressionMatrix& d);

/// Rows reordered (and subset) to gene_list. Throws DataError listing every
/// gene that d lacks.
ExpressionMatrix align(const ExpressionMatrix& d, const std::vector<std::string>& gene_list);

// ---- Gene selection --------------------------------------------------------

using GeneScores = std::unordered_map<std::string, double>;

/// Two-column TSV: gene id, score. A first line starting with "gene" is a header.
GeneScores load_gene_scores(const std::filesystem::path& path);

/// Population variance of every row, keyed by gene id.
GeneScores row_variance_scores(const ExpressionMatrix& d);

/// Union over experiments of each experiment's top_k genes by descending
/// score (ties by gene id), drawn from the genes every experiment measures.
/// Experiments without a score table are scored by row variance. The result
/// is sorted by gene id.
std::vector<std::string> select_genes(const std::vector<ExpressionMatrix>& corpus,
                                      const std::vector<std::optional<GeneScores>>& scores, std::size_t top_k);

/// Gene ids measured by every experiment, in the first experiment's order.
std::vector<std::string> common_genes(const std::vector<ExpressionMatrix>& corpus);

// ---- Model index (JSON lines) ------------------------------------------------

void write_index(std::ostream& out, const ModelIndex& index);
ModelIndex read_index(std::istream& in);
void save_index(const std::filesystem::path& path, const ModelIndex& index);
ModelIndex load_index(const std::filesystem::path& path);

// ---- Labels, DE profiles, manifests ------------------------------------------

/// Two-column TSV: experiment id, value. Empty or "NA" values are absent.
GroundTruth load_labels(const std::filesystem::path& path, const std::string& label_type);
void save_labels(const std::filesystem::path& path, const GroundTruth& gt);

/// Two-column TSV: gene id, p-value.
DEProfile load_de_profile(const std::filesystem::path& path, const std::string& experiment_id);

struct CorpusManifest {
  struct Experiment {
    std::string id;
    std::filesystem::path matrix;
    std::optional<std::filesystem::path> de_profile;
    std::optional<std::filesystem::path> gene_scores;
  };
  struct LabelFile {
    std::string label_type;
    std::filesystem::path path;
  };
  std::vector<Experiment> experiments;
  std::vector<LabelFile> label_files;

  std::vector<std::string> ids() const;
};

/// Tab-separated records, '#' starts a comment line:
///   experiment <id> <matrix> [de=<path>] [scores=<path>]
///   labels <label_type> <path>
/// Relative paths resolve against the manifest's directory.
CorpusManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const CorpusManifest& manifest);

// ---- Small text helpers shared by the readers --------------------------------

std::vector<std::string> split(const std::string& line, char delimiter);
/// Full-string floating-point parse; nullopt for anything else (including "NA").
std::optional<double> parse_double(const std::string& cell);

}  // namespace clustret
