#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "clustret/data_model.hpp"
#include "clustret/errors.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace clustret;
using testing::clustering;

TEST_CASE("expression matrix validates shape, ids and values") {
  const auto d = testing::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(d.rows() == 2);
  CHECK(d.cols() == 3);
  CHECK(d(1, 2) == 6);
  CHECK(d.row(1)[0] == 4);

  CHECK_THROWS_AS(ExpressionMatrix("e", {"g"}, {"s"}, {1, 2}), DataError);
  CHECK_THROWS_AS(ExpressionMatrix("e", {}, {"s"}, {}), DataError);
  CHECK_THROWS_AS(ExpressionMatrix("e", {"g", "g"}, {"s"}, {1, 2}), DataError);
  CHECK_THROWS_AS(ExpressionMatrix("e", {"g"}, {"s", "s"}, {1, 2}), DataError);
  CHECK_THROWS_AS(ExpressionMatrix("e", {"g"}, {"s"}, {std::numeric_limits<double>::quiet_NaN()}), DataError);
  CHECK_THROWS_AS(ExpressionMatrix("e", {"g"}, {"s"}, {std::numeric_limits<double>::infinity()}), DataError);
}

TEST_CASE("clustering labels are canonical by first appearance") {
  const auto c = clustering({7, 7, 2, 9, 2});
  CHECK(c.labels() == std::vector<Label>{0, 0, 1, 2, 1});
  CHECK(c.k() == 3);
  CHECK(c.sizes() == std::vector<std::size_t>{2, 2, 1});
  CHECK(c.blocks() == std::vector<std::vector<std::size_t>>{{0, 1}, {2, 4}, {3}});
  CHECK(Clustering::single_cluster(3) == clustering({0, 0, 0}));
  CHECK(Clustering::singletons(3) == clustering({0, 1, 2}));
  CHECK_THROWS_AS(Clustering(std::vector<Label>{}), std::invalid_argument);
}

TEST_CASE("relabeling a clustering leaves its canonical form unchanged") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng() % 30;
    std::vector<Label> raw(n);
    for (auto& l : raw) l = static_cast<Label>(rng() % 6);
    std::vector<Label> perm(6);
    std::iota(perm.begin(), perm.end(), 10);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Label> relabeled(n);
    for (std::size_t i = 0; i < n; ++i) relabeled[i] = perm[raw[i]];
    const Clustering a(raw), b(relabeled);
    CHECK(a == b);
    CHECK(a.labels().front() == 0);
    for (std::size_t i = 1; i < n; ++i) {
      const Label seen = *std::max_element(a.labels().begin(), a.labels().begin() + static_cast<long>(i));
      CHECK(a[i] <= seen + 1);
    }
  }
}

TEST_CASE("hyperparameters must be positive") {
  CHECK_NOTHROW(Hyperparameters{}.validate());
  for (double bad : {0.0, -1.0}) {
    Hyperparameters h;
    h.rho0 = bad;
    CHECK_THROWS_AS(h.validate(), std::invalid_argument);
    h = {};
    h.alpha0 = bad;
    CHECK_THROWS_AS(h.validate(), std::invalid_argument);
    h = {};
    h.beta0 = bad;
    CHECK_THROWS_AS(h.validate(), std::invalid_argument);
    h = {};
    h.eta0 = bad;
    CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  }
}

TEST_CASE("index entries and index") {
  CHECK_THROWS_AS(ModelIndexEntry("a", {"g1", "g2"}, clustering({0}), {}), DataError);
  ModelIndex index;
  index.add(ModelIndexEntry("a", {"g1"}, clustering({0}), {}));
  index.add(ModelIndexEntry("b", {"g1"}, clustering({0}), {}));
  CHECK_THROWS_AS(index.add(ModelIndexEntry("a", {"g1"}, clustering({0}), {})), DataError);
  CHECK(index.ids() == std::vector<std::string>{"a", "b"});
  CHECK(index.find("b") != nullptr);
  CHECK(index.find("z") == nullptr);
}

TEST_CASE("relevance matrix from labels") {
  const std::vector<std::string> ids{"A", "B", "C"};
  GroundTruth gt{"condition", {{"A", "x"}, {"B", "x"}, {"C", "y"}}};
  const auto g = relevance_matrix(gt, ids);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(g(i, j) == ((i == 0 && j == 1) || (i == 1 && j == 0)));
  }
  CHECK(g.relevant_to(0) == std::vector<std::string>{"B"});

  GroundTruth lone{"condition", {{"A", "x"}, {"B", std::nullopt}, {"C", std::nullopt}}};
  const auto z = relevance_matrix(lone, ids);
  for (std::size_t i = 0; i < 3; ++i) CHECK(z.relevant_to(i).empty());

  GroundTruth missing{"condition", {{"A", "x"}, {"B", "x"}}};
  CHECK_THROWS_WITH_AS(relevance_matrix(missing, ids), doctest::Contains("'C'"), DataError);
  CHECK_THROWS_AS(g.index_of("Q"), DataError);
}

TEST_CASE("relevance matrices are symmetric with an empty diagonal") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::string> ids;
    GroundTruth gt{"t", {}};
    for (int i = 0; i < 12; ++i) {
      ids.push_back("E" + std::to_string(i));
      const auto v = rng() % 4;
      gt.labels[ids.back()] = v == 3 ? std::nullopt : std::optional<std::string>(std::to_string(v));
    }
    const auto g = relevance_matrix(gt, ids);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      CHECK_FALSE(g(i, i));
      for (std::size_t j = 0; j < ids.size(); ++j) CHECK(g(i, j) == g(j, i));
    }
  }
}
