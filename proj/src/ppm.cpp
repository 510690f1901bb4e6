#include "clustret/ppm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "clustret/errors.hpp"

namespace clustret {

void ClusterStats::add(std::span<const double> row) {
  ++count_;
  const double inv = 1.0 / static_cast<double>(count_);
  for (std::size_t j = 0; j < mean_.size(); ++j) {
    const double delta = row[j] - mean_[j];
    mean_[j] += delta * inv;
    ssd_[j] += delta * (row[j] - mean_[j]);
  }
}

void ClusterStats::remove(std::span<const double> row) {
  if (count_ == 0) throw std::invalid_argument("cannot remove a row from an empty cluster");
  if (count_ == 1) {
    count_ = 0;
    std::fill(mean_.begin(), mean_.end(), 0.0);
    std::fill(ssd_.begin(), ssd_.end(), 0.0);
    return;
  }
  const double old_n = static_cast<double>(count_);
  --count_;
  for (std::size_t j = 0; j < mean_.size(); ++j) {
    const double old_mean = mean_[j];
    mean_[j] = (old_n * old_mean - row[j]) / static_cast<double>(count_);
    ssd_[j] -= (row[j] - mean_[j]) * (row[j] - old_mean);
    if (ssd_[j] < 0.0) ssd_[j] = 0.0;
  }
}

void ClusterStats::merge(const ClusterStats& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double total = na + nb;
  for (std::size_t j = 0; j < mean_.size(); ++j) {
    const double delta = other.mean_[j] - mean_[j];
    mean_[j] += delta * nb / total;
    ssd_[j] += other.ssd_[j] + delta * delta * na * nb / total;
  }
  count_ += other.count_;
}

double ClusterStats::log_marginal(const Hyperparameters& h) const {
  if (count_ == 0) throw std::invalid_argument("marginal likelihood of an empty cluster is undefined");
  double sum = 0.0;
  for (std::size_t j = 0; j < mean_.size(); ++j) sum += log_column_marginal(count_, mean_[j], ssd_[j], h);
  return sum;
}

ClusterStats cluster_stats(const ExpressionMatrix& d, std::span<const std::size_t> rows) {
  ClusterStats stats(d.cols());
  for (std::size_t i : rows) stats.add(d.row(i));
  return stats;
}

double log_column_marginal(std::size_t count, double mean, double ssd, const Hyperparameters& h) {
  const double m = static_cast<double>(count);
  const double rho = h.rho0 + m;
  const double alpha = h.alpha0 + 0.5 * m;
  const double dev = mean - h.mu0;
  const double beta = h.beta0 + 0.5 * ssd + m * h.rho0 * dev * dev / (2.0 * rho);
  return -0.5 * m * std::log(2.0 * std::numbers::pi) + 0.5 * (std::log(h.rho0) - std::log(rho)) +
         std::lgamma(alpha) - std::lgamma(h.alpha0) + h.alpha0 * std::log(h.beta0) - alpha * std::log(beta);
}

double log_crp_cluster_term(std::size_t cluster_size, double eta0) {
  return std::log(eta0) + std::lgamma(static_cast<double>(cluster_size));
}

double log_crp_normalizer(std::size_t n, double eta0) {
  double sum = 0.0;
  for (std::size_t i = 1; i <= n; ++i) sum += std::log(eta0 + static_cast<double>(i) - 1.0);
  return -sum;
}

double log_crp_prior(const Clustering& s, double eta0) {
  if (!(eta0 > 0.0)) throw std::invalid_argument("eta0 must be positive");
  double sum = log_crp_normalizer(s.n(), eta0);
  for (std::size_t size : s.sizes()) sum += log_crp_cluster_term(size, eta0);
  return sum;
}

double log_cluster_marginal(const ExpressionMatrix& d, std::span<const std::size_t> rows,
                            const Hyperparameters& h) {
  if (rows.empty()) throw std::invalid_argument("clusters must be non-empty");
  return cluster_stats(d, rows).log_marginal(h);
}

double marginal_likelihood_of_query(const ExpressionMatrix& d_query, const Clustering& s_stored,
                                    const Hyperparameters& h) {
  if (d_query.rows() != s_stored.n()) {
    throw DataError("query '" + d_query.experiment_id() + "' has " + std::to_string(d_query.rows()) +
                    " rows but the clustering covers " + std::to_string(s_stored.n()) + " items");
  }
  std::vector<ClusterStats> stats(s_stored.k(), ClusterStats(d_query.cols()));
  for (std::size_t i = 0; i < s_stored.n(); ++i) stats[s_stored[i]].add(d_query.row(i));
  double sum = 0.0;
  for (const auto& c : stats) sum += c.log_marginal(h);
  return sum;
}

double log_posterior_score(const ExpressionMatrix& d, const Clustering& s, const Hyperparameters& h) {
  return marginal_likelihood_of_query(d, s, h) + log_crp_prior(s, h.eta0);
}

}  // namespace clustret
