#include "clustret/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "clustret/errors.hpp"

namespace clustret {

namespace {

// Every ranked id must belong to the relevance matrix (index_of throws).
const RankedResult& checked(const QueryRanking& q, const RelevanceMatrix& relevance) {
  for (const auto& e : q.ranking.entries()) {
    if (e.experiment_id == q.query_id) {
      throw DataError("ranking for query '" + q.query_id + "' contains the query itself");
    }
    relevance.index_of(e.experiment_id);
  }
  return q.ranking;
}

std::set<std::string> relevant_set(const RelevanceMatrix& relevance, const std::string& query) {
  const auto ids = relevance.relevant_to(relevance.index_of(query));
  return {ids.begin(), ids.end()};
}

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

PRCurve pr_curve(std::span<const QueryRanking> rankings, const RelevanceMatrix& relevance) {
  PRCurve curve;
  const std::size_t cutoffs = relevance.size() > 0 ? relevance.size() - 1 : 0;
  std::vector<double> recall_sum(cutoffs, 0.0);
  std::vector<double> precision_sum(cutoffs, 0.0);

  for (const auto& q : rankings) {
    const auto& ranking = checked(q, relevance);
    const auto relevant = relevant_set(relevance, q.query_id);
    if (relevant.empty()) {
      ++curve.skipped_queries;
      continue;
    }
    ++curve.query_count;
    std::size_t hits = 0;
    const auto& entries = ranking.entries();
    for (std::size_t r = 1; r <= cutoffs; ++r) {
      if (r <= entries.size() && relevant.contains(entries[r - 1].experiment_id)) ++hits;
      const std::size_t retrieved = std::min(r, entries.size());
      precision_sum[r - 1] += retrieved > 0 ? static_cast<double>(hits) / static_cast<double>(retrieved) : 0.0;
      recall_sum[r - 1] += static_cast<double>(hits) / static_cast<double>(relevant.size());
    }
  }
  if (curve.query_count > 0) {
    const auto q = static_cast<double>(curve.query_count);
    for (std::size_t r = 0; r < cutoffs; ++r) {
      curve.points.push_back({r + 1, recall_sum[r] / q, precision_sum[r] / q});
    }
  }
  return curve;
}

double average_precision(const RankedResult& ranking, const std::set<std::string>& relevant) {
  if (relevant.empty()) throw std::invalid_argument("average precision needs a non-empty relevant set");
  std::size_t hits = 0;
  double sum = 0.0;
  const auto& entries = ranking.entries();
  for (std::size_t r = 0; r < entries.size(); ++r) {
    if (relevant.contains(entries[r].experiment_id)) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(relevant.size());
}

double mean_average_precision(std::span<const double> average_precisions) {
  if (average_precisions.empty()) throw std::invalid_argument("mean average precision needs at least one query");
  return std::accumulate(average_precisions.begin(), average_precisions.end(), 0.0) /
         static_cast<double>(average_precisions.size());
}

RetrievalScores score_rankings(std::span<const QueryRanking> rankings, const RelevanceMatrix& relevance) {
  RetrievalScores out;
  std::vector<double> aps;
  for (const auto& q : rankings) {
    const auto& ranking = checked(q, relevance);
    const auto relevant = relevant_set(relevance, q.query_id);
    if (relevant.empty()) {
      ++out.skipped_queries;
      continue;
    }
    const double ap = average_precision(ranking, relevant);
    out.per_query.emplace_back(q.query_id, ap);
    aps.push_back(ap);
  }
  if (!aps.empty()) out.map = mean_average_precision(aps);
  return out;
}

RelevanceMatrix combine_ground_truth(std::span<const RelevanceMatrix> matrices, std::size_t t, CombineMode mode) {
  if (matrices.empty()) throw std::invalid_argument("combine_ground_truth needs at least one matrix");
  if (t < 1 || t > matrices.size()) {
    throw std::invalid_argument("threshold t = " + std::to_string(t) + " must lie in [1, " +
                                std::to_string(matrices.size()) + "]");
  }
  const auto& ids = matrices.front().ids();
  for (const auto& m : matrices) {
    if (m.ids() != ids) throw DataError("relevance matrices cover different experiment lists");
  }
  RelevanceMatrix out(ids);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = 0; j < ids.size(); ++j) {
      std::size_t votes = 0;
      for (const auto& m : matrices) votes += m(i, j) ? 1 : 0;
      out.set(i, j, mode == CombineMode::AtLeast ? votes >= t : votes == t);
    }
  }
  return out;
}

Top1Report top1_match_eval(std::span<const QueryRanking> rankings, const RelevanceMatrix& relevance) {
  Top1Report report;
  for (const auto& q : rankings) {
    const auto& ranking = checked(q, relevance);
    const auto relevant = relevant_set(relevance, q.query_id);
    if (relevant.empty()) {
      ++report.skipped_queries;
      continue;
    }
    ++report.query_count;
    if (!ranking.empty() && relevant.contains(ranking.entries().front().experiment_id)) ++report.matched;
  }
  if (report.query_count > 0) {
    report.fraction = static_cast<double>(report.matched) / static_cast<double>(report.query_count);
  }
  return report;
}

void SyntheticCorpusConfig::validate() const {
  if (num_experiments < 1) throw std::invalid_argument("num_experiments must be positive");
  if (num_conditions < 1 || num_conditions > num_experiments) {
    throw std::invalid_argument("num_conditions must lie in [1, num_experiments]");
  }
  if (genes < 1 || samples < 1) throw std::invalid_argument("genes and samples must be positive");
  if (clusters < 1 || clusters > genes) throw std::invalid_argument("clusters must lie in [1, genes]");
  if (!(perturbation >= 0.0 && perturbation <= 1.0)) throw std::invalid_argument("perturbation must lie in [0, 1]");
  if (!(noise_sigma >= 0.0) || !(cluster_mean_sd >= 0.0)) {
    throw std::invalid_argument("noise_sigma and cluster_mean_sd must be non-negative");
  }
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  auto pick = [&rng](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

  // Balanced condition sizes, shuffled so ids carry no condition order.
  std::vector<std::size_t> condition_of(cfg.num_experiments);
  for (std::size_t e = 0; e < cfg.num_experiments; ++e) condition_of[e] = e % cfg.num_conditions;
  std::shuffle(condition_of.begin(), condition_of.end(), rng);

  std::vector<std::vector<Label>> base(cfg.num_conditions, std::vector<Label>(cfg.genes));
  for (auto& partition : base) {
    std::vector<std::size_t> order(cfg.genes);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t r = 0; r < cfg.genes; ++r) {
      partition[order[r]] = static_cast<Label>(r < cfg.clusters ? r : pick(cfg.clusters));
    }
  }

  char buf[32];
  std::vector<std::string> gene_ids(cfg.genes);
  for (std::size_t i = 0; i < cfg.genes; ++i) {
    std::snprintf(buf, sizeof buf, "G%04zu", i + 1);
    gene_ids[i] = buf;
  }
  std::vector<std::string> sample_ids(cfg.samples);
  for (std::size_t j = 0; j < cfg.samples; ++j) {
    std::snprintf(buf, sizeof buf, "S%02zu", j + 1);
    sample_ids[j] = buf;
  }

  SyntheticCorpus corpus;
  GroundTruth condition{"condition", {}};
  GroundTruth group{"group", {}};
  std::bernoulli_distribution perturb(cfg.perturbation);
  std::normal_distribution<double> unit(0.0, 1.0);

  for (std::size_t e = 0; e < cfg.num_experiments; ++e) {
    std::snprintf(buf, sizeof buf, "SYN%03zu", e + 1);
    const std::string id = buf;
    const std::size_t c = condition_of[e];

    std::vector<Label> labels = base[c];
    for (auto& l : labels) {
      if (perturb(rng)) l = static_cast<Label>(pick(cfg.clusters));
    }
    std::vector<double> means(cfg.clusters * cfg.samples);
    for (auto& m : means) m = cfg.cluster_mean_sd * unit(rng);
    std::vector<double> values(cfg.genes * cfg.samples);
    for (std::size_t i = 0; i < cfg.genes; ++i) {
      for (std::size_t j = 0; j < cfg.samples; ++j) {
        values[i * cfg.samples + j] = means[labels[i] * cfg.samples + j] + cfg.noise_sigma * unit(rng);
      }
    }
    corpus.experiments.emplace_back(id, gene_ids, sample_ids, std::move(values));
    corpus.planted.emplace_back(labels);

    std::snprintf(buf, sizeof buf, "C%zu", c + 1);
    condition.labels.emplace(id, buf);
    if (cfg.groups > 0) {
      std::snprintf(buf, sizeof buf, "T%zu", c % cfg.groups + 1);
      group.labels.emplace(id, buf);
    }
  }
  corpus.ground_truth.push_back(std::move(condition));
  if (cfg.groups > 0) corpus.ground_truth.push_back(std::move(group));
  return corpus;
}

void write_pr_csv(const std::filesystem::path& path, const PRCurve& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << "cutoff,recall,precision\n";
  char buf[96];
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g\n", p.cutoff, p.recall, p.precision);
    out << buf;
  }
}

void write_pr_svg(const std::filesystem::path& path, const std::vector<std::pair<std::string, PRCurve>>& curves,
                  const std::string& title) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  constexpr double kWidth = 480;
  constexpr double kHeight = 400;
  constexpr double kLeft = 60;
  constexpr double kTop = 40;
  constexpr double kPlot = 300;
  static const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  char buf[160];

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kLeft + kPlot / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << svg_escape(title) << "</text>\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                kLeft, kTop, kPlot, kPlot);
  out << buf;
  for (int t = 0; t <= 5; ++t) {
    const double v = t / 5.0;
    const double x = kLeft + v * kPlot;
    const double y = kTop + (1.0 - v) * kPlot;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%.1f</text>\n", x,
                  kTop + kPlot + 16, v);
    out << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%.1f</text>\n", kLeft - 6, y + 4, v);
    out << buf;
  }
  out << "<text x=\"" << kLeft + kPlot / 2 << "\" y=\"" << kTop + kPlot + 34
      << "\" text-anchor=\"middle\">Recall</text>\n";
  std::snprintf(buf, sizeof buf,
                "<text x=\"16\" y=\"%g\" text-anchor=\"middle\" transform=\"rotate(-90 16 %g)\">Precision</text>\n",
                kTop + kPlot / 2, kTop + kPlot / 2);
  out << buf;

  for (std::size_t c = 0; c < curves.size(); ++c) {
    const char* color = kColors[c % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : curves[c].second.points) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", kLeft + p.recall * kPlot, kTop + (1.0 - p.precision) * kPlot);
      out << buf;
    }
    out << "\"/>\n";
    const double ly = kTop + 14 + 16.0 * static_cast<double>(c);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"2\"/>\n",
                  kLeft + kPlot + 10, ly - 4, kLeft + kPlot + 30, ly - 4, color);
    out << buf;
    out << "<text x=\"" << kLeft + kPlot + 34 << "\" y=\"" << ly << "\">" << svg_escape(curves[c].first)
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace clustret
