#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clustret {

using Label = std::uint32_t;

/// Dense n x p expression matrix: rows are genes, columns are samples.
/// Values are stored row-major and validated to be finite on construction.
class ExpressionMatrix {
 public:
  ExpressionMatrix(std::string experiment_id, std::vector<std::string> gene_ids,
                   std::vector<std::string> sample_ids, std::vector<double> values);

  const std::string& experiment_id() const { return experiment_id_; }
  const std::vector<std::string>& gene_ids() const { return gene_ids_; }
  const std::vector<std::string>& sample_ids() const { return sample_ids_; }
  const std::vector<double>& values() const { return values_; }

  std::size_t rows() const { return gene_ids_.size(); }
  std::size_t cols() const { return sample_ids_.size(); }

  double operator()(std::size_t gene, std::size_t sample) const {
    return values_[gene * cols() + sample];
  }
  std::span<const double> row(std::size_t gene) const {
    return {values_.data() + gene * cols(), cols()};
  }

 private:
  std::string experiment_id_;
  std::vector<std::string> gene_ids_;
  std::vector<std::string> sample_ids_;
  std::vector<double> values_;
};

/// A partition of {0..n-1} into k non-empty blocks.
///
/// Labels are canonicalized on construction: the first item gets label 0,
/// and each new block gets the next unused label in order of first
/// appearance. Two clusterings that induce the same partition therefore
/// compare equal element-wise.
class Clustering {
 public:
  explicit Clustering(std::span<const Label> assignment);
  explicit Clustering(const std::vector<Label>& assignment)
      : Clustering(std::span<const Label>(assignment)) {}

  static Clustering single_cluster(std::size_t n);
  static Clustering singletons(std::size_t n);

  std::size_t n() const { return labels_.size(); }
  std::size_t k() const { return sizes_.size(); }
  const std::vector<Label>& labels() const { return labels_; }
  Label operator[](std::size_t item) const { return labels_[item]; }
  const std::vector<std::size_t>& sizes() const { return sizes_; }

  /// Item indices of each block, ascending within a block.
  std::vector<std::vector<std::size_t>> blocks() const;

  friend bool operator==(const Clustering&, const Clustering&) = default;

 private:
  std::vector<Label> labels_;
  std::vector<std::size_t> sizes_;
};

/// Normal-Gamma prior on per-cluster, per-sample (mean, precision) and the
/// concentration of the partition prior.
struct Hyperparameters {
  double mu0 = 0.0;
  double rho0 = 1.0;
  double alpha0 = 1.0;
  double beta0 = 1.0;
  double eta0 = 1.0;

  /// Throws std::invalid_argument if any positivity constraint fails.
  void validate() const;
};

struct FitMetadata {
  std::string method;
  double log_score = 0.0;
  std::uint64_t seed = 0;
};

struct ModelIndexEntry {
  std::string experiment_id;
  std::vector<std::string> gene_ids;
  Clustering clustering;
  FitMetadata fit;

  ModelIndexEntry(std::string id, std::vector<std::string> genes, Clustering c, FitMetadata meta);
};

/// Stored clusterings for a corpus, one per experiment, in insertion order.
class ModelIndex {
 public:
  ModelIndex() = default;
  explicit ModelIndex(std::vector<ModelIndexEntry> entries);

  void add(ModelIndexEntry entry);
  const std::vector<ModelIndexEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const ModelIndexEntry* find(const std::string& experiment_id) const;
  std::vector<std::string> ids() const;

 private:
  std::vector<ModelIndexEntry> entries_;
};

/// Categorical annotation of experiments for one label type. An absent
/// value means the experiment carries no annotation of this type.
struct GroundTruth {
  std::string label_type;
  std::map<std::string, std::optional<std::string>> labels;
};

/// Symmetric M x M 0/1 matrix over an ordered list of experiment ids.
class RelevanceMatrix {
 public:
  explicit RelevanceMatrix(std::vector<std::string> ids);

  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }
  bool operator()(std::size_t i, std::size_t j) const { return cells_[i * size() + j] != 0; }
  void set(std::size_t i, std::size_t j, bool relevant);

  std::size_t index_of(const std::string& id) const;
  /// Ids relevant to row i, in id-list order.
  std::vector<std::string> relevant_to(std::size_t i) const;

  friend bool operator==(const RelevanceMatrix&, const RelevanceMatrix&) = default;

 private:
  std::vector<std::string> ids_;
  std::map<std::string, std::size_t> position_;
  std::vector<std::uint8_t> cells_;
};

/// g_ij = 1 iff i != j and both experiments carry the same label value.
RelevanceMatrix relevance_matrix(const GroundTruth& gt, const std::vector<std::string>& ids);

}  // namespace clustret
