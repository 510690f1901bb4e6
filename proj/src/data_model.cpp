#include "clustret/data_model.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "clustret/errors.hpp"

namespace clustret {

namespace {

void require_unique(const std::vector<std::string>& ids, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      throw DataError(std::string("duplicate ") + what + " id '" + id + "'");
    }
  }
}

}  // namespace

ExpressionMatrix::ExpressionMatrix(std::string experiment_id, std::vector<std::string> gene_ids,
                                   std::vector<std::string> sample_ids, std::vector<double> values)
    : experiment_id_(std::move(experiment_id)),
      gene_ids_(std::move(gene_ids)),
      sample_ids_(std::move(sample_ids)),
      values_(std::move(values)) {
  if (gene_ids_.empty() || sample_ids_.empty()) {
    throw DataError("expression matrix '" + experiment_id_ + "' must have at least one gene and one sample");
  }
  if (values_.size() != gene_ids_.size() * sample_ids_.size()) {
    throw DataError("expression matrix '" + experiment_id_ + "': value count does not match " +
                    std::to_string(gene_ids_.size()) + "x" + std::to_string(sample_ids_.size()));
  }
  require_unique(gene_ids_, "gene");
  require_unique(sample_ids_, "sample");
  for (std::size_t idx = 0; idx < values_.size(); ++idx) {
    if (!std::isfinite(values_[idx])) {
      throw DataError("expression matrix '" + experiment_id_ + "': non-finite value at gene '" +
                      gene_ids_[idx / cols()] + "', sample '" + sample_ids_[idx % cols()] + "'");
    }
  }
}

Clustering::Clustering(std::span<const Label> assignment) {
  if (assignment.empty()) throw std::invalid_argument("clustering must cover at least one item");
  std::unordered_map<Label, Label> remap;
  labels_.reserve(assignment.size());
  for (Label raw : assignment) {
    auto [it, inserted] = remap.try_emplace(raw, static_cast<Label>(remap.size()));
    if (inserted) sizes_.push_back(0);
    labels_.push_back(it->second);
    ++sizes_[it->second];
  }
}

Clustering Clustering::single_cluster(std::size_t n) {
  return Clustering(std::vector<Label>(n, 0));
}

Clustering Clustering::singletons(std::size_t n) {
  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<Label>(i);
  return Clustering(labels);
}

std::vector<std::vector<std::size_t>> Clustering::blocks() const {
  std::vector<std::vector<std::size_t>> out(k());
  for (std::size_t c = 0; c < k(); ++c) out[c].reserve(sizes_[c]);
  for (std::size_t i = 0; i < n(); ++i) out[labels_[i]].push_back(i);
  return out;
}

void Hyperparameters::validate() const {
  if (!(rho0 > 0.0)) throw std::invalid_argument("rho0 must be positive");
  if (!(alpha0 > 0.0)) throw std::invalid_argument("alpha0 must be positive");
  if (!(beta0 > 0.0)) throw std::invalid_argument("beta0 must be positive");
  if (!(eta0 > 0.0)) throw std::invalid_argument("eta0 must be positive");
  if (!std::isfinite(mu0)) throw std::invalid_argument("mu0 must be finite");
}

ModelIndexEntry::ModelIndexEntry(std::string id, std::vector<std::string> genes, Clustering c,
                                 FitMetadata meta)
    : experiment_id(std::move(id)), gene_ids(std::move(genes)), clustering(std::move(c)), fit(std::move(meta)) {
  if (clustering.n() != gene_ids.size()) {
    throw DataError("index entry '" + experiment_id + "': clustering covers " +
                    std::to_string(clustering.n()) + " items but " + std::to_string(gene_ids.size()) +
                    " gene ids are listed");
  }
}

ModelIndex::ModelIndex(std::vector<ModelIndexEntry> entries) {
  for (auto& e : entries) add(std::move(e));
}

void ModelIndex::add(ModelIndexEntry entry) {
  if (find(entry.experiment_id) != nullptr) {
    throw DataError("duplicate experiment id '" + entry.experiment_id + "' in model index");
  }
  entries_.push_back(std::move(entry));
}

const ModelIndexEntry* ModelIndex::find(const std::string& experiment_id) const {
  for (const auto& e : entries_) {
    if (e.experiment_id == experiment_id) return &e;
  }
  return nullptr;
}

std::vector<std::string> ModelIndex::ids() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.experiment_id);
  return out;
}

RelevanceMatrix::RelevanceMatrix(std::vector<std::string> ids)
    : ids_(std::move(ids)), cells_(ids_.size() * ids_.size(), 0) {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!position_.emplace(ids_[i], i).second) {
      throw DataError("duplicate experiment id '" + ids_[i] + "' in relevance matrix");
    }
  }
}

void RelevanceMatrix::set(std::size_t i, std::size_t j, bool relevant) {
  cells_[i * size() + j] = relevant ? 1 : 0;
}

std::size_t RelevanceMatrix::index_of(const std::string& id) const {
  auto it = position_.find(id);
  if (it == position_.end()) throw DataError("unknown experiment id '" + id + "'");
  return it->second;
}

std::vector<std::string> RelevanceMatrix::relevant_to(std::size_t i) const {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < size(); ++j) {
    if ((*this)(i, j)) out.push_back(ids_[j]);
  }
  return out;
}

RelevanceMatrix relevance_matrix(const GroundTruth& gt, const std::vector<std::string>& ids) {
  RelevanceMatrix g(ids);
  std::vector<const std::optional<std::string>*> values;
  values.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = gt.labels.find(id);
    if (it == gt.labels.end()) {
      throw DataError("experiment '" + id + "' has no entry for label type '" + gt.label_type + "'");
    }
    values.push_back(&it->second);
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!values[i]->has_value()) continue;
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      if (values[j]->has_value() && **values[i] == **values[j]) {
        g.set(i, j, true);
        g.set(j, i, true);
      }
    }
  }
  return g;
}

}  // namespace clustret
