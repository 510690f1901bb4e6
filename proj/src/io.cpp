#include "clustret/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "clustret/errors.hpp"

namespace clustret {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool is_blank_or_comment(const std::string& line) {
  const std::string t = trim(line);
  return t.empty() || t.front() == '#';
}

// Reads "key<TAB>number" lines; a first line whose number does not parse is
// treated as a header.
std::vector<std::pair<std::string, double>> read_two_column(const fs::path& path, const char* what) {
  auto in = open_input(path);
  std::vector<std::pair<std::string, double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (is_blank_or_comment(line)) continue;
    const auto cells = split(line, line.find('\t') != std::string::npos ? '\t' : ',');
    if (cells.size() != 2) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 2 columns, found " +
                      std::to_string(cells.size()));
    }
    const auto value = parse_double(cells[1]);
    if (!value) {
      if (rows.empty() && line_no == 1) continue;
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + what + " '" + cells[1] +
                      "' is not a number");
    }
    rows.emplace_back(trim(cells[0]), *value);
  }
  return rows;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::optional<double> parse_double(const std::string& cell) {
  const std::string t = trim(cell);
  if (t.empty()) return std::nullopt;
  const char* first = t.data();
  if (*first == '+') ++first;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

ExpressionMatrix parse_matrix(std::istream& in, const std::string& experiment_id) {
  std::string line;
  std::size_t line_no = 0;
  do {
    if (!std::getline(in, line)) throw DataError(experiment_id + ": matrix has no header row");
    ++line_no;
    line = strip_cr(line);
  } while (trim(line).empty());

  const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
  auto header = split(line, delim);
  if (header.size() < 2) throw DataError(experiment_id + ": header must list at least one sample");
  std::vector<std::string> samples;
  for (std::size_t c = 1; c < header.size(); ++c) samples.push_back(trim(header[c]));

  std::vector<std::string> genes;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (trim(line).empty()) continue;
    auto cells = split(line, delim);
    if (cells.size() != header.size()) {
      throw DataError(experiment_id + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                      " columns, header has " + std::to_string(header.size()));
    }
    genes.push_back(trim(cells[0]));
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const auto v = parse_double(cells[c]);
      if (!v) {
        throw DataError(experiment_id + ": line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                        " (gene '" + genes.back() + "', sample '" + samples[c - 1] + "'): '" + trim(cells[c]) +
                        "' is not a finite number");
      }
      values.push_back(*v);
    }
  }
  return ExpressionMatrix(experiment_id, std::move(genes), std::move(samples), std::move(values));
}

ExpressionMatrix load_matrix(const fs::path& path, std::optional<std::string> experiment_id) {
  auto in = open_input(path);
  return parse_matrix(in, experiment_id.value_or(path.stem().string()));
}

void write_matrix(std::ostream& out, const ExpressionMatrix& d) {
  out << "gene_id";
  for (const auto& s : d.sample_ids()) out << '\t' << s;
  out << '\n';
  for (std::size_t i = 0; i < d.rows(); ++i) {
    out << d.gene_ids()[i];
    for (double v : d.row(i)) out << '\t' << format_double(v);
    out << '\n';
  }
}

void save_matrix(const fs::path& path, const ExpressionMatrix& d) {
  auto out = open_output(path);
  write_matrix(out, d);
}

ExpressionMatrix zscore_normalize(const ExpressionMatrix& d) {
  const std::size_t n = d.rows();
  const std::size_t p = d.cols();
  std::vector<double> values = d.values();
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += d(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dev = d(i, j) - mean;
      var += dev * dev;
    }
    var /= static_cast<double>(n);
    bool constant = true;
    for (std::size_t i = 1; i < n && constant; ++i) constant = d(i, j) == d(0, j);
    // The rounded mean of a constant column need not equal the constant.
    const double sd = constant ? 0.0 : std::sqrt(var);
    for (std::size_t i = 0; i < n; ++i) {
      if (constant) {
        values[i * p + j] = 0.0;
        continue;
      }
      const double centered = d(i, j) - mean;
      values[i * p + j] = sd > 0.0 ? centered / sd : 0.0;
    }
  }
  return ExpressionMatrix(d.experiment_id(), d.gene_ids(), d.sample_ids(), std::move(values));
}

ExpressionMatrix align(const ExpressionMatrix& d, const std::vector<std::string>& gene_list) {
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < d.rows(); ++i) pos.emplace(d.gene_ids()[i], i);
  std::vector<std::string> missing;
  std::vector<double> values;
  values.reserve(gene_list.size() * d.cols());
  for (const auto& gene : gene_list) {
    auto it = pos.find(gene);
    if (it == pos.end()) {
      missing.push_back(gene);
      continue;
    }
    const auto row = d.row(it->second);
    values.insert(values.end(), row.begin(), row.end());
  }
  if (!missing.empty()) {
    std::string msg = "experiment '" + d.experiment_id() + "' lacks " + std::to_string(missing.size()) + " gene(s):";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + missing[i];
    if (missing.size() > 20) msg += " ...";
    throw DataError(msg);
  }
  return ExpressionMatrix(d.experiment_id(), gene_list, d.sample_ids(), std::move(values));
}

GeneScores load_gene_scores(const fs::path& path) {
  GeneScores scores;
  for (auto& [gene, score] : read_two_column(path, "score")) {
    if (!scores.emplace(gene, score).second) {
      throw DataError(path.string() + ": duplicate gene '" + gene + "'");
    }
  }
  return scores;
}

GeneScores row_variance_scores(const ExpressionMatrix& d) {
  GeneScores scores;
  const auto p = static_cast<double>(d.cols());
  for (std::size_t i = 0; i < d.rows(); ++i) {
    double mean = 0.0;
    for (double v : d.row(i)) mean += v;
    mean /= p;
    double var = 0.0;
    for (double v : d.row(i)) var += (v - mean) * (v - mean);
    scores.emplace(d.gene_ids()[i], var / p);
  }
  return scores;
}

std::vector<std::string> common_genes(const std::vector<ExpressionMatrix>& corpus) {
  if (corpus.empty()) return {};
  std::vector<std::string> out;
  std::vector<std::unordered_set<std::string>> sets;
  for (std::size_t e = 1; e < corpus.size(); ++e) {
    sets.emplace_back(corpus[e].gene_ids().begin(), corpus[e].gene_ids().end());
  }
  for (const auto& gene : corpus.front().gene_ids()) {
    if (std::all_of(sets.begin(), sets.end(), [&](const auto& s) { return s.contains(gene); })) {
      out.push_back(gene);
    }
  }
  return out;
}

std::vector<std::string> select_genes(const std::vector<ExpressionMatrix>& corpus,
                                      const std::vector<std::optional<GeneScores>>& scores, std::size_t top_k) {
  if (top_k == 0) throw std::invalid_argument("top_k must be positive");
  if (scores.size() != corpus.size()) throw std::invalid_argument("one (optional) score table per experiment");
  const auto shared = common_genes(corpus);
  std::set<std::string> selected;
  for (std::size_t e = 0; e < corpus.size(); ++e) {
    GeneScores table;
    if (scores[e]) {
      std::unordered_set<std::string> measured(corpus[e].gene_ids().begin(), corpus[e].gene_ids().end());
      for (const auto& [gene, s] : *scores[e]) {
        if (!measured.contains(gene)) {
          throw DataError("score table for '" + corpus[e].experiment_id() + "' lists gene '" + gene +
                          "' which the matrix does not contain");
        }
      }
      table = *scores[e];
    } else {
      table = row_variance_scores(corpus[e]);
    }
    std::vector<std::pair<double, const std::string*>> ranked;
    for (const auto& gene : shared) {
      auto it = table.find(gene);
      if (it != table.end()) ranked.emplace_back(it->second, &gene);
    }
    const std::size_t take = std::min(top_k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return *a.second < *b.second;
                      });
    for (std::size_t r = 0; r < take; ++r) selected.insert(*ranked[r].second);
  }
  return {selected.begin(), selected.end()};
}

void write_index(std::ostream& out, const ModelIndex& index) {
  for (const auto& e : index.entries()) {
    nlohmann::ordered_json j;
    j["experiment_id"] = e.experiment_id;
    j["gene_ids"] = e.gene_ids;
    std::vector<std::size_t> one_based;
    one_based.reserve(e.clustering.n());
    for (Label l : e.clustering.labels()) one_based.push_back(static_cast<std::size_t>(l) + 1);
    j["assignment"] = one_based;
    j["k"] = e.clustering.k();
    j["log_score"] = e.fit.log_score;
    j["method"] = e.fit.method;
    j["seed"] = e.fit.seed;
    out << j.dump() << '\n';
  }
}

ModelIndex read_index(std::istream& in) {
  ModelIndex index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = "index line " + std::to_string(line_no) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      const auto assignment = j.at("assignment").get<std::vector<std::size_t>>();
      const auto k = j.at("k").get<std::size_t>();
      std::vector<Label> labels;
      labels.reserve(assignment.size());
      std::size_t next = 1;
      for (std::size_t a : assignment) {
        if (a < 1 || a > k) throw DataError("label " + std::to_string(a) + " outside 1.." + std::to_string(k));
        if (a > next) throw DataError("labels are not in first-appearance order");
        if (a == next) ++next;
        labels.push_back(static_cast<Label>(a - 1));
      }
      if (next != k + 1) throw DataError("k = " + std::to_string(k) + " but " + std::to_string(next - 1) +
                                         " clusters are used");
      const double log_score = j.at("log_score").get<double>();
      index.add(ModelIndexEntry(j.at("experiment_id").get<std::string>(),
                                j.at("gene_ids").get<std::vector<std::string>>(), Clustering(labels),
                                FitMetadata{j.at("method").get<std::string>(), log_score,
                                            j.at("seed").get<std::uint64_t>()}));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + e.what());
    } catch (const std::invalid_argument& e) {
      throw DataError(where + e.what());
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  }
  return index;
}

void save_index(const fs::path& path, const ModelIndex& index) {
  auto out = open_output(path);
  write_index(out, index);
}

ModelIndex load_index(const fs::path& path) {
  auto in = open_input(path);
  return read_index(in);
}

GroundTruth load_labels(const fs::path& path, const std::string& label_type) {
  auto in = open_input(path);
  GroundTruth gt{label_type, {}};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (is_blank_or_comment(line)) continue;
    auto cells = split(line, '\t');
    if (cells.size() > 2) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected 'experiment_id<TAB>value' (one value per experiment)");
    }
    const std::string id = trim(cells[0]);
    if (line_no == 1 && id == "experiment_id") continue;
    std::optional<std::string> value;
    if (cells.size() == 2) {
      std::string v = trim(cells[1]);
      if (!v.empty() && v != "NA") value = std::move(v);
    }
    if (!gt.labels.emplace(id, std::move(value)).second) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": experiment '" + id +
                      "' listed twice for label type '" + label_type + "'");
    }
  }
  return gt;
}

void save_labels(const fs::path& path, const GroundTruth& gt) {
  auto out = open_output(path);
  out << "experiment_id\t" << gt.label_type << '\n';
  for (const auto& [id, value] : gt.labels) out << id << '\t' << value.value_or("NA") << '\n';
}

DEProfile load_de_profile(const fs::path& path, const std::string& experiment_id) {
  std::vector<std::string> genes;
  std::vector<double> p;
  for (auto& [gene, value] : read_two_column(path, "p-value")) {
    genes.push_back(std::move(gene));
    p.push_back(value);
  }
  return DEProfile(experiment_id, std::move(genes), std::move(p));
}

std::vector<std::string> CorpusManifest::ids() const {
  std::vector<std::string> out;
  out.reserve(experiments.size());
  for (const auto& e : experiments) out.push_back(e.id);
  return out;
}

CorpusManifest load_manifest(const fs::path& path) {
  auto in = open_input(path);
  const fs::path base = path.parent_path();
  CorpusManifest m;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (is_blank_or_comment(line)) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    auto cells = split(line, '\t');
    for (auto& c : cells) c = trim(c);
    if (cells[0] == "experiment") {
      if (cells.size() < 3) throw DataError(where + "experiment record needs an id and a matrix path");
      CorpusManifest::Experiment e{cells[1], resolve(base, cells[2]), {}, {}};
      for (std::size_t c = 3; c < cells.size(); ++c) {
        if (cells[c].rfind("de=", 0) == 0) {
          e.de_profile = resolve(base, cells[c].substr(3));
        } else if (cells[c].rfind("scores=", 0) == 0) {
          e.gene_scores = resolve(base, cells[c].substr(7));
        } else {
          throw DataError(where + "unknown experiment attribute '" + cells[c] + "'");
        }
      }
      if (!ids.insert(e.id).second) throw DataError(where + "duplicate experiment id '" + e.id + "'");
      m.experiments.push_back(std::move(e));
    } else if (cells[0] == "labels") {
      if (cells.size() != 3) throw DataError(where + "labels record needs a label type and a path");
      m.label_files.push_back({cells[1], resolve(base, cells[2])});
    } else {
      throw DataError(where + "unknown record type '" + cells[0] + "'");
    }
  }
  auto require_file = [&](const fs::path& p) {
    if (!fs::exists(p)) throw DataError(path.string() + ": referenced file '" + p.string() + "' does not exist");
  };
  for (const auto& e : m.experiments) {
    require_file(e.matrix);
    if (e.de_profile) require_file(*e.de_profile);
    if (e.gene_scores) require_file(*e.gene_scores);
  }
  for (const auto& l : m.label_files) require_file(l.path);
  return m;
}

void save_manifest(const fs::path& path, const CorpusManifest& manifest) {
  auto out = open_output(path);
  const fs::path base = path.parent_path();
  auto rel = [&](const fs::path& p) {
    if (base.empty()) return p.generic_string();
    const fs::path r = p.lexically_relative(base);
    return r.empty() ? p.generic_string() : r.generic_string();
  };
  for (const auto& e : manifest.experiments) {
    out << "experiment\t" << e.id << '\t' << rel(e.matrix);
    if (e.de_profile) out << "\tde=" << rel(*e.de_profile);
    if (e.gene_scores) out << "\tscores=" << rel(*e.gene_scores);
    out << '\n';
  }
  for (const auto& l : manifest.label_files) out << "labels\t" << l.label_type << '\t' << rel(l.path) << '\n';
}

}  // namespace clustret
