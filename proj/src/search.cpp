#include "clustret/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "clustret/ppm.hpp"

namespace clustret {

namespace {

// Smallest score gain that counts as an improvement; absorbs rounding
// differences between incremental and from-scratch evaluation.
constexpr double kMinGain = 1e-9;

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Mutable partition with per-block sufficient statistics and cached
// log weights (cluster marginal + per-cluster prior term), so that each
// proposal is scored from the blocks it touches only.
class PartitionState {
 public:
  PartitionState(const ExpressionMatrix& d, const Hyperparameters& h, const Clustering& init)
      : d_(d), h_(h), label_(init.labels()), pos_(init.n()) {
    for (auto& members : init.blocks()) {
      Block b{std::move(members), ClusterStats(d.cols()), 0.0};
      for (std::size_t slot = 0; slot < b.members.size(); ++slot) {
        pos_[b.members[slot]] = slot;
        b.stats.add(d.row(b.members[slot]));
      }
      b.weight = weight(b.stats);
      blocks_.push_back(std::move(b));
    }
    score_ = log_crp_normalizer(d.rows(), h.eta0);
    for (const auto& b : blocks_) score_ += b.weight;
  }

  double score() const { return score_; }
  Clustering clustering() const { return Clustering(label_); }

  bool try_move(std::mt19937_64& rng) {
    const std::size_t n = label_.size();
    const std::size_t item = uniform_index(rng, n);
    const std::size_t src = label_[item];
    const bool can_open = blocks_[src].members.size() > 1;
    const std::size_t options = blocks_.size() - 1 + (can_open ? 1 : 0);
    if (options == 0) return false;
    std::size_t pick = uniform_index(rng, options);
    const bool to_new = pick == blocks_.size() - 1;
    const std::size_t dst = to_new ? blocks_.size() : (pick >= src ? pick + 1 : pick);

    const auto row = d_.row(item);
    ClusterStats src_after = blocks_[src].stats;
    src_after.remove(row);
    const double src_after_w = src_after.count() > 0 ? weight(src_after) : 0.0;
    ClusterStats dst_after(d_.cols());
    double dst_before_w = 0.0;
    if (!to_new) {
      dst_after = blocks_[dst].stats;
      dst_before_w = blocks_[dst].weight;
    }
    dst_after.add(row);
    const double dst_after_w = weight(dst_after);
    const double gain = src_after_w + dst_after_w - blocks_[src].weight - dst_before_w;
    if (!(gain > kMinGain)) return false;

    detach(item);
    blocks_[src].stats = std::move(src_after);
    blocks_[src].weight = src_after_w;
    if (to_new) {
      blocks_.push_back(Block{{}, ClusterStats(d_.cols()), 0.0});
    }
    attach(item, dst);
    blocks_[dst].stats = std::move(dst_after);
    blocks_[dst].weight = dst_after_w;
    if (blocks_[src].members.empty()) drop_block(src);
    score_ += gain;
    return true;
  }

  bool try_split(std::mt19937_64& rng) {
    std::vector<std::size_t> splittable;
    for (std::size_t c = 0; c < blocks_.size(); ++c) {
      if (blocks_[c].members.size() >= 2) splittable.push_back(c);
    }
    if (splittable.empty()) return false;
    const std::size_t c = splittable[uniform_index(rng, splittable.size())];
    const auto& members = blocks_[c].members;

    std::vector<char> side(members.size());
    std::bernoulli_distribution coin(0.5);
    std::size_t ones = 0;
    for (auto& s : side) {
      s = coin(rng) ? 1 : 0;
      ones += static_cast<std::size_t>(s);
    }
    if (ones == 0 || ones == members.size()) {
      auto& flip = side[uniform_index(rng, side.size())];
      flip = static_cast<char>(1 - flip);
    }

    ClusterStats keep(d_.cols());
    ClusterStats leave(d_.cols());
    for (std::size_t slot = 0; slot < members.size(); ++slot) {
      (side[slot] ? leave : keep).add(d_.row(members[slot]));
    }
    const double keep_w = weight(keep);
    const double leave_w = weight(leave);
    const double gain = keep_w + leave_w - blocks_[c].weight;
    if (!(gain > kMinGain)) return false;

    std::vector<std::size_t> moving;
    for (std::size_t slot = 0; slot < members.size(); ++slot) {
      if (side[slot]) moving.push_back(members[slot]);
    }
    const std::size_t fresh = blocks_.size();
    blocks_.push_back(Block{{}, std::move(leave), leave_w});
    for (std::size_t item : moving) {
      detach(item);
      attach(item, fresh);
    }
    blocks_[c].stats = std::move(keep);
    blocks_[c].weight = keep_w;
    score_ += gain;
    return true;
  }

  bool try_merge(std::mt19937_64& rng) {
    if (blocks_.size() < 2) return false;
    const std::size_t a = uniform_index(rng, blocks_.size());
    std::size_t b = uniform_index(rng, blocks_.size() - 1);
    if (b >= a) ++b;

    ClusterStats merged = blocks_[a].stats;
    merged.merge(blocks_[b].stats);
    const double merged_w = weight(merged);
    const double gain = merged_w - blocks_[a].weight - blocks_[b].weight;
    if (!(gain > kMinGain)) return false;

    const std::vector<std::size_t> moving = blocks_[b].members;
    for (std::size_t item : moving) {
      detach(item);
      attach(item, a);
    }
    blocks_[a].stats = std::move(merged);
    blocks_[a].weight = merged_w;
    drop_block(b);
    score_ += gain;
    return true;
  }

 private:
  struct Block {
    std::vector<std::size_t> members;
    ClusterStats stats;
    double weight;
  };

  double weight(const ClusterStats& stats) const {
    return stats.log_marginal(h_) + log_crp_cluster_term(stats.count(), h_.eta0);
  }

  void detach(std::size_t item) {
    auto& members = blocks_[label_[item]].members;
    const std::size_t slot = pos_[item];
    members[slot] = members.back();
    pos_[members[slot]] = slot;
    members.pop_back();
  }

  void attach(std::size_t item, std::size_t block) {
    label_[item] = static_cast<Label>(block);
    pos_[item] = blocks_[block].members.size();
    blocks_[block].members.push_back(item);
  }

  void drop_block(std::size_t block) {
    const std::size_t last = blocks_.size() - 1;
    if (block != last) {
      blocks_[block] = std::move(blocks_[last]);
      for (std::size_t item : blocks_[block].members) label_[item] = static_cast<Label>(block);
    }
    blocks_.pop_back();
  }

  const ExpressionMatrix& d_;
  const Hyperparameters& h_;
  std::vector<Label> label_;
  std::vector<std::size_t> pos_;
  std::vector<Block> blocks_;
  double score_ = 0.0;
};

Clustering initial_partition(const ExpressionMatrix& d, std::size_t restart, std::uint64_t seed) {
  switch (restart % 3) {
    case 0:
      return kmeans(d, trivial_k(d.rows()), seed);
    case 1:
      return Clustering::singletons(d.rows());
    default:
      return Clustering::single_cluster(d.rows());
  }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    sum += diff * diff;
  }
  return sum;
}

std::size_t ceil_sqrt(std::size_t n) {
  auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while (r * r < n) ++r;
  return r;
}

void require_k(std::size_t k, std::size_t n) {
  if (k < 1 || k > n) {
    throw std::invalid_argument("k = " + std::to_string(k) + " is outside [1, " + std::to_string(n) + "]");
  }
}

}  // namespace

void SearchConfig::validate() const {
  if (restarts < 1) throw std::invalid_argument("restarts must be at least 1");
  if (move_prob < 0.0 || split_prob < 0.0 || merge_prob < 0.0) {
    throw std::invalid_argument("operator probabilities must be non-negative");
  }
  if (std::abs(move_prob + split_prob + merge_prob - 1.0) > 1e-9) {
    throw std::invalid_argument("operator probabilities must sum to 1");
  }
}

SearchResult greedy_map_search(const ExpressionMatrix& d, const Hyperparameters& h, const SearchConfig& cfg) {
  h.validate();
  cfg.validate();
  const std::size_t n = d.rows();

  std::optional<Clustering> best;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> traces;

  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    PartitionState state(d, h, initial_partition(d, r, cfg.seed + r));
    std::vector<double> trace;
    if (cfg.record_trace) trace.push_back(state.score());

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t idle_sweeps = 0;
    while (idle_sweeps < cfg.max_sweeps_without_improvement) {
      bool improved = false;
      for (std::size_t step = 0; step < n; ++step) {
        const double u = unit(rng);
        bool accepted;
        if (u < cfg.move_prob) {
          accepted = state.try_move(rng);
        } else if (u < cfg.move_prob + cfg.split_prob) {
          accepted = state.try_split(rng);
        } else {
          accepted = state.try_merge(rng);
        }
        if (accepted) {
          improved = true;
          if (cfg.record_trace) trace.push_back(state.score());
        }
      }
      idle_sweeps = improved ? 0 : idle_sweeps + 1;
    }

    Clustering found = state.clustering();
    const double exact = log_posterior_score(d, found, h);
    if (exact > best_score) {
      best_score = exact;
      best = std::move(found);
    }
    if (cfg.record_trace) traces.push_back(std::move(trace));
  }
  return SearchResult{std::move(*best), best_score, std::move(traces)};
}

void for_each_set_partition(std::size_t n, const std::function<void(std::span<const Label>)>& visit) {
  if (n == 0) return;
  std::vector<Label> rgs(n, 0);
  // prefix_max[i] = max(rgs[0..i-1]); rgs[i] may range over 0..prefix_max[i]+1.
  std::vector<Label> prefix_max(n, 0);
  while (true) {
    visit(rgs);
    std::size_t i = n - 1;
    while (i > 0 && rgs[i] == prefix_max[i] + 1) --i;
    if (i == 0) return;
    ++rgs[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      rgs[j] = 0;
      prefix_max[j] = std::max(prefix_max[j - 1], rgs[j - 1]);
    }
  }
}

SearchResult brute_force_map(const ExpressionMatrix& d, const Hyperparameters& h) {
  h.validate();
  const std::size_t n = d.rows();
  if (n > kBruteForceLimit) {
    throw std::invalid_argument("brute-force MAP is limited to n <= " + std::to_string(kBruteForceLimit) +
                                " items (got " + std::to_string(n) + ")");
  }
  const double normalizer = log_crp_normalizer(n, h.eta0);
  std::vector<Label> best_labels;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<ClusterStats> stats;

  for_each_set_partition(n, [&](std::span<const Label> labels) {
    Label k = 0;
    for (Label l : labels) k = std::max<Label>(k, l + 1);
    stats.assign(k, ClusterStats(d.cols()));
    for (std::size_t i = 0; i < n; ++i) stats[labels[i]].add(d.row(i));
    double score = normalizer;
    for (const auto& c : stats) score += c.log_marginal(h) + log_crp_cluster_term(c.count(), h.eta0);
    if (score > best_score) {
      best_score = score;
      best_labels.assign(labels.begin(), labels.end());
    }
  });
  Clustering best(best_labels);
  return SearchResult{best, log_posterior_score(d, best, h), {}};
}

KMeansResult kmeans_detailed(const ExpressionMatrix& d, std::size_t k, std::uint64_t seed) {
  const std::size_t n = d.rows();
  const std::size_t p = d.cols();
  require_k(k, n);
  std::mt19937_64 rng(seed);

  // k-means++ seeding.
  std::vector<std::size_t> chosen{uniform_index(rng, n)};
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (chosen.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(d.row(i), d.row(chosen.back())));
      total += nearest[i];
    }
    std::size_t next = n;
    if (total > 0.0) {
      double target = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (std::size_t i = 0; i < n; ++i) {
        if (nearest[i] <= 0.0) continue;
        next = i;
        target -= nearest[i];
        if (target <= 0.0) break;
      }
    } else {
      std::vector<std::size_t> unused;
      for (std::size_t i = 0; i < n; ++i) {
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) unused.push_back(i);
      }
      next = unused[uniform_index(rng, unused.size())];
    }
    chosen.push_back(next);
  }

  std::vector<double> centroids(k * p);
  for (std::size_t c = 0; c < k; ++c) {
    std::copy_n(d.row(chosen[c]).begin(), p, centroids.begin() + static_cast<std::ptrdiff_t>(c * p));
  }
  auto centroid = [&](std::size_t c) { return std::span<const double>(centroids.data() + c * p, p); };

  std::vector<Label> assign(n, 0);
  std::vector<Label> previous;
  std::vector<std::size_t> sizes(k);
  std::vector<double> history;
  constexpr int kMaxIterations = 300;
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_dist = squared_distance(d.row(i), centroid(0));
      for (std::size_t c = 1; c < k; ++c) {
        const double dist = squared_distance(d.row(i), centroid(c));
        if (dist < best_dist) {
          best_dist = dist;
          best = c;
        }
      }
      assign[i] = static_cast<Label>(best);
      ++sizes[best];
    }

    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t far = n;
      double far_dist = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[assign[i]] < 2) continue;
        const double dist = squared_distance(d.row(i), centroid(assign[i]));
        if (dist > far_dist) {
          far_dist = dist;
          far = i;
        }
      }
      --sizes[assign[far]];
      assign[far] = static_cast<Label>(c);
      sizes[c] = 1;
      std::copy_n(d.row(far).begin(), p, centroids.begin() + static_cast<std::ptrdiff_t>(c * p));
    }

    std::fill(centroids.begin(), centroids.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < p; ++j) centroids[assign[i] * p + j] += d(i, j);
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t j = 0; j < p; ++j) centroids[c * p + j] /= static_cast<double>(sizes[c]);
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) sse += squared_distance(d.row(i), centroid(assign[i]));
    history.push_back(sse);

    if (assign == previous) break;
    previous = assign;
  }
  return KMeansResult{Clustering(assign), std::move(history)};
}

Clustering kmeans(const ExpressionMatrix& d, std::size_t k, std::uint64_t seed) {
  return kmeans_detailed(d, k, seed).clustering;
}

Clustering complete_linkage(const ExpressionMatrix& d, std::size_t k) {
  const std::size_t n = d.rows();
  require_k(k, n);
  // Clusters are identified by their smallest member index; merging b into
  // a (a < b) keeps that property.
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i * n + j] = dist[j * n + i] = std::sqrt(squared_distance(d.row(i), d.row(j)));
    }
  }
  std::vector<std::size_t> root(n);
  for (std::size_t i = 0; i < n; ++i) root[i] = i;
  std::vector<std::size_t> active = root;

  while (active.size() > k) {
    std::size_t best_a = 0;
    std::size_t best_b = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < active.size(); ++x) {
      for (std::size_t y = x + 1; y < active.size(); ++y) {
        const double v = dist[active[x] * n + active[y]];
        if (v < best) {
          best = v;
          best_a = x;
          best_b = y;
        }
      }
    }
    const std::size_t a = active[best_a];
    const std::size_t b = active[best_b];
    for (std::size_t other : active) {
      const double v = std::max(dist[a * n + other], dist[b * n + other]);
      dist[a * n + other] = dist[other * n + a] = v;
    }
    for (auto& r : root) {
      if (r == b) r = a;
    }
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_b));
  }
  std::vector<Label> labels(root.begin(), root.end());
  return Clustering(labels);
}

KRange default_k_range(std::size_t n) {
  if (n == 0) throw std::invalid_argument("k range needs n >= 1");
  const std::size_t lo = std::min<std::size_t>(2, n);
  const std::size_t hi = std::min(n, std::max(lo, ceil_sqrt(n)));
  return {lo, hi};
}

std::size_t trivial_k(std::size_t n) {
  const auto k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)) / 2.0));
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(n, 1));
}

std::vector<Clustering> candidate_sweep(const ExpressionMatrix& d, std::span<const HeuristicAlgorithm> algorithms,
                                        KRange k_range, std::uint64_t seed) {
  if (algorithms.empty()) throw std::invalid_argument("candidate sweep needs at least one algorithm");
  if (k_range.size() == 0 || k_range.lo < 1 || k_range.hi > d.rows()) {
    throw std::invalid_argument("k range [" + std::to_string(k_range.lo) + ", " + std::to_string(k_range.hi) +
                                "] must be non-empty and within [1, " + std::to_string(d.rows()) + "]");
  }
  std::vector<Clustering> out;
  out.reserve(algorithms.size() * k_range.size());
  for (auto algorithm : algorithms) {
    for (std::size_t k = k_range.lo; k <= k_range.hi; ++k) {
      out.push_back(algorithm == HeuristicAlgorithm::KMeans ? kmeans(d, k, seed) : complete_linkage(d, k));
    }
  }
  return out;
}

SearchResult restricted_map_search(const ExpressionMatrix& d, std::span<const Clustering> candidates,
                                   const Hyperparameters& h) {
  if (candidates.empty()) throw std::invalid_argument("restricted search needs at least one candidate");
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (candidates[c].n() != d.rows()) {
      throw std::invalid_argument("candidate " + std::to_string(c) + " covers " + std::to_string(candidates[c].n()) +
                                  " items, data has " + std::to_string(d.rows()) + " rows");
    }
    const double score = log_posterior_score(d, candidates[c], h);
    if (score > best_score) {
      best_score = score;
      best = c;
    }
  }
  return SearchResult{candidates[best], best_score, {}};
}

}  // namespace clustret
