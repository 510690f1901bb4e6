#include <cmath>
#include <limits>
#include <random>

#include "clustret/ppm.hpp"
#include "clustret/search.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace clustret;
using testing::clustering;

namespace {

ExpressionMatrix planted(std::mt19937_64& rng, const std::vector<Label>& groups, std::size_t p, double spread,
                         double noise) {
  std::normal_distribution<double> unit;
  Label k = 0;
  for (Label g : groups) k = std::max<Label>(k, g + 1);
  std::vector<double> centres(k * p);
  for (auto& c : centres) c = spread * unit(rng);
  std::vector<double> v(groups.size() * p);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = 0; j < p; ++j) v[i * p + j] = centres[groups[i] * p + j] + noise * unit(rng);
  }
  return testing::matrix(groups.size(), p, v);
}

double sse(const ExpressionMatrix& d, const std::vector<unsigned>& labels) {
  const auto sizes = oracle::block_sizes(labels);
  std::vector<double> centre(sizes.size() * d.cols(), 0.0);
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < d.cols(); ++j) centre[labels[i] * d.cols() + j] += d(i, j) / sizes[labels[i]];
  }
  double total = 0.0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < d.cols(); ++j) total += std::pow(d(i, j) - centre[labels[i] * d.cols() + j], 2);
  }
  return total;
}

}  // namespace

TEST_CASE("search configuration validation") {
  CHECK_NOTHROW(SearchConfig{}.validate());
  SearchConfig c;
  c.restarts = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.move_prob = 0.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.merge_prob = -0.1;
  c.move_prob = 0.9;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("greedy search on a single row returns one cluster") {
  const auto d = testing::matrix(1, 3, {1, 2, 3});
  SearchConfig cfg;
  cfg.restarts = 5;
  const auto r = greedy_map_search(d, Hyperparameters{}, cfg);
  CHECK(r.clustering == clustering({0}));
  CHECK(r.log_score == log_posterior_score(d, r.clustering, Hyperparameters{}));
}

TEST_CASE("greedy search recovers two well separated groups") {
  // Two groups at means +10 and -10, noise 0.1.
  std::mt19937_64 rng(2);
  std::normal_distribution<double> unit;
  std::vector<double> v;
  for (int i = 0; i < 6; ++i) {
    const double m = i % 2 == 0 ? 10.0 : -10.0;
    v.push_back(m + 0.1 * unit(rng));
    v.push_back(m + 0.1 * unit(rng));
  }
  const auto d = testing::matrix(6, 2, v);
  const Hyperparameters h;
  std::size_t seen = 0;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<unsigned> best_labels;
  oracle::enumerate_partitions(6, [&](const std::vector<unsigned>& l) {
    ++seen;
    const double s = log_posterior_score(d, Clustering(std::vector<Label>(l.begin(), l.end())), h);
    if (s > best) {
      best = s;
      best_labels = l;
    }
  });
  CHECK(seen == 203);
  CHECK(best_labels == std::vector<unsigned>{0, 1, 0, 1, 0, 1});

  const auto r = greedy_map_search(d, h, SearchConfig{});
  CHECK(r.clustering == clustering({0, 1, 0, 1, 0, 1}));
  CHECK(r.log_score == doctest::Approx(best).epsilon(1e-12));
  const auto b = brute_force_map(d, h);
  CHECK(b.clustering == r.clustering);
}

TEST_CASE("greedy search traces are monotone and runs are deterministic") {
  std::mt19937_64 rng(9);
  std::vector<Label> groups;
  for (int i = 0; i < 40; ++i) groups.push_back(static_cast<Label>(i % 4));
  const auto d = planted(rng, groups, 4, 2.0, 1.0);
  SearchConfig cfg;
  cfg.seed = 17;
  cfg.record_trace = true;
  const auto a = greedy_map_search(d, Hyperparameters{}, cfg);
  const auto b = greedy_map_search(d, Hyperparameters{}, cfg);
  CHECK(a.clustering == b.clustering);
  CHECK(a.log_score == b.log_score);
  REQUIRE(a.traces.size() == cfg.restarts);
  for (const auto& trace : a.traces) {
    REQUIRE_FALSE(trace.empty());
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] > trace[i - 1]);
  }
  CHECK(a.log_score == doctest::Approx(log_posterior_score(d, a.clustering, Hyperparameters{})).epsilon(1e-14));
  cfg.record_trace = false;
  CHECK(greedy_map_search(d, Hyperparameters{}, cfg).traces.empty());
}

TEST_CASE("brute force enumerates restricted growth strings") {
  std::vector<std::vector<Label>> seen;
  for_each_set_partition(3, [&](std::span<const Label> l) { seen.emplace_back(l.begin(), l.end()); });
  CHECK(seen == std::vector<std::vector<Label>>{{0, 0, 0}, {0, 0, 1}, {0, 1, 0}, {0, 1, 1}, {0, 1, 2}});
  for (std::size_t n = 1; n <= 9; ++n) {
    std::size_t count = 0;
    for_each_set_partition(n, [&](std::span<const Label>) { ++count; });
    CHECK(count == oracle::bell(n));
  }
}

TEST_CASE("brute force MAP") {
  const Hyperparameters h;
  CHECK(brute_force_map(testing::matrix(2, 2, {1.5, -0.5, 1.5, -0.5}), h).clustering == clustering({0, 0}));
  CHECK_THROWS_AS(brute_force_map(testing::matrix(13, 1, std::vector<double>(13, 0.0)), h), std::invalid_argument);

  std::mt19937_64 rng(31);
  std::normal_distribution<double> unit;
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 2 + rng() % 6;
    std::vector<double> v(n * 2);
    for (auto& x : v) x = 2.0 * unit(rng);
    const auto d = testing::matrix(n, 2, v);
    const auto r = brute_force_map(d, h);
    oracle::enumerate_partitions(n, [&](const std::vector<unsigned>& l) {
      CHECK(log_posterior_score(d, Clustering(std::vector<Label>(l.begin(), l.end())), h) <= r.log_score + 1e-12);
    });
  }
}

TEST_CASE("kmeans trivial cases and monotone objective") {
  std::mt19937_64 rng(12);
  std::vector<Label> groups{0, 0, 1, 1, 2, 2, 0, 1};
  const auto d = planted(rng, groups, 3, 3.0, 0.5);
  CHECK(kmeans(d, 1, 0) == Clustering::single_cluster(8));
  CHECK(kmeans(d, 8, 0) == Clustering::singletons(8));
  CHECK_THROWS_AS(kmeans(d, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(kmeans(d, 9, 0), std::invalid_argument);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = kmeans_detailed(d, 3, seed);
    REQUIRE_FALSE(r.sse_history.empty());
    for (std::size_t i = 1; i < r.sse_history.size(); ++i) CHECK(r.sse_history[i] <= r.sse_history[i - 1] + 1e-12);
    CHECK(r.clustering.k() == 3);
    CHECK(kmeans(d, 3, seed) == r.clustering);
  }
}

TEST_CASE("kmeans on planted groups finds the exhaustive SSE minimizer") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 5; ++t) {
    const std::vector<Label> groups{0, 1, 2, 0, 1, 2, 0, 1, 2};
    const auto d = planted(rng, groups, 2, 6.0, 0.3);
    double best = std::numeric_limits<double>::infinity();
    std::vector<unsigned> best_labels;
    oracle::enumerate_partitions(9, [&](const std::vector<unsigned>& l) {
      if (oracle::block_sizes(l).size() != 3) return;
      const double s = sse(d, l);
      if (s < best) {
        best = s;
        best_labels = l;
      }
    });
    const auto c = kmeans(d, 3, static_cast<std::uint64_t>(t));
    CHECK(c == Clustering(std::vector<Label>(best_labels.begin(), best_labels.end())));
    CHECK(c == Clustering(groups));
  }
}

TEST_CASE("complete linkage") {
  // Two tight pairs far apart: {0, 2} and {1, 3}.
  const auto d = testing::matrix(4, 1, {0.0, 10.0, 0.5, 10.4});
  CHECK(complete_linkage(d, 2) == clustering({0, 1, 0, 1}));
  CHECK(complete_linkage(d, 4) == Clustering::singletons(4));
  CHECK(complete_linkage(d, 1) == Clustering::single_cluster(4));
  CHECK(complete_linkage(d, 3) == clustering({0, 1, 2, 1}));

  // Single linkage would chain 0-1-2-3; complete linkage keeps diameters small.
  const auto chain = testing::matrix(4, 1, {0.0, 1.0, 2.1, 3.3});
  CHECK(complete_linkage(chain, 2) == clustering({0, 0, 1, 1}));
}

TEST_CASE("k ranges and candidate sweeps") {
  CHECK(default_k_range(100).lo == 2);
  CHECK(default_k_range(100).hi == 10);
  CHECK(default_k_range(100).size() == 9);
  CHECK(trivial_k(100) == 5);
  CHECK(trivial_k(1) == 1);
  CHECK(trivial_k(60) == 4);
  CHECK(default_k_range(1).lo == 1);
  CHECK(default_k_range(1).hi == 1);
  CHECK(default_k_range(2).hi == 2);

  std::mt19937_64 rng(1);
  std::vector<Label> groups(100);
  for (std::size_t i = 0; i < 100; ++i) groups[i] = static_cast<Label>(i % 5);
  const auto d = planted(rng, groups, 3, 2.0, 1.0);
  const HeuristicAlgorithm km[] = {HeuristicAlgorithm::KMeans};
  const HeuristicAlgorithm both[] = {HeuristicAlgorithm::KMeans, HeuristicAlgorithm::CompleteLinkage};
  const auto one = candidate_sweep(d, km, default_k_range(100), 0);
  CHECK(one.size() == 9);
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(one[i].k() == i + 2);
  const auto trivial = candidate_sweep(d, km, KRange{trivial_k(100), trivial_k(100)}, 0);
  REQUIRE(trivial.size() == 1);
  CHECK(trivial[0].k() == 5);
  const auto two = candidate_sweep(d, both, default_k_range(100), 0);
  CHECK(two.size() == 18);
  CHECK(two[9] == complete_linkage(d, 2));

  CHECK_THROWS_AS(candidate_sweep(d, std::span<const HeuristicAlgorithm>{}, default_k_range(100), 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(candidate_sweep(d, km, KRange{0, 3}, 0), std::invalid_argument);
  CHECK_THROWS_AS(candidate_sweep(d, km, KRange{5, 101}, 0), std::invalid_argument);
}

TEST_CASE("restricted search") {
  std::mt19937_64 rng(40);
  std::normal_distribution<double> unit;
  const Hyperparameters h;
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 3 + rng() % 6;
    std::vector<double> v(n * 2);
    for (auto& x : v) x = 2.0 * unit(rng);
    const auto d = testing::matrix(n, 2, v);
    const auto exact = brute_force_map(d, h);
    const HeuristicAlgorithm both[] = {HeuristicAlgorithm::KMeans, HeuristicAlgorithm::CompleteLinkage};
    auto candidates = candidate_sweep(d, both, KRange{1, n}, 3);
    CHECK(restricted_map_search(d, candidates, h).log_score <= exact.log_score + 1e-12);
    candidates.push_back(exact.clustering);
    const auto with_map = restricted_map_search(d, candidates, h);
    CHECK(with_map.log_score == doctest::Approx(exact.log_score).epsilon(1e-14));

    const std::vector<Clustering> single{Clustering::singletons(n)};
    CHECK(restricted_map_search(d, single, h).clustering == single[0]);
  }
  const auto d = testing::matrix(2, 1, {0.0, 1.0});
  const std::vector<Clustering> twins{clustering({0, 1}), clustering({0, 1})};
  CHECK(restricted_map_search(d, twins, h).clustering == twins[0]);
  CHECK_THROWS_AS(restricted_map_search(d, std::vector<Clustering>{}, h), std::invalid_argument);
  CHECK_THROWS_AS(restricted_map_search(d, std::vector<Clustering>{clustering({0})}, h), std::invalid_argument);
}
