#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "clustret/errors.hpp"
#include "clustret/io.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace clustret;
using testing::clustering;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("clustret_io_" + std::to_string(std::random_device{}()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

ExpressionMatrix parse(const std::string& text, const std::string& id = "m") {
  std::istringstream in(text);
  return parse_matrix(in, id);
}

}  // namespace

TEST_CASE("parse matrices") {
  const auto tsv = parse("gene\ts1\ts2\ng1\t1\t2\ng2\t3\t4.5\n");
  CHECK(tsv.gene_ids() == std::vector<std::string>{"g1", "g2"});
  CHECK(tsv.sample_ids() == std::vector<std::string>{"s1", "s2"});
  CHECK(tsv.values() == std::vector<double>{1, 2, 3, 4.5});
  const auto csv = parse("id,a,b\r\nx,-1e-3,7\r\n");
  CHECK(csv.values() == std::vector<double>{-1e-3, 7});

  CHECK_THROWS_WITH_AS(parse("gene\ts1\ts2\ng1\t1\tNA\n"), doctest::Contains("column 3"), DataError);
  CHECK_THROWS_WITH_AS(parse("gene\ts1\ts2\ng1\t1\tNA\n"), doctest::Contains("line 2"), DataError);
  CHECK_THROWS_AS(parse("gene\ts1\ng1\t1\t2\n"), DataError);
  CHECK_THROWS_AS(parse(""), DataError);
  CHECK_THROWS_AS(parse("gene\n"), DataError);
  CHECK_THROWS_AS(parse("gene\ts1\ng1\t1\ng1\t2\n"), DataError);
  CHECK_THROWS_AS(parse("gene\ts1\ng1\tinf\n"), DataError);
}

TEST_CASE("matrix files round trip exactly") {
  TempDir dir;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> unit;
  std::vector<double> v(15);
  for (auto& x : v) x = unit(rng) * std::pow(10.0, static_cast<double>(rng() % 20) - 10.0);
  const auto d = testing::matrix(5, 3, v, "EXP");
  save_matrix(dir.path / "EXP.tsv", d);
  const auto back = load_matrix(dir.path / "EXP.tsv");
  CHECK(back.experiment_id() == "EXP");
  CHECK(back.values() == d.values());
  CHECK(back.gene_ids() == d.gene_ids());
  CHECK(load_matrix(dir.path / "EXP.tsv", "other").experiment_id() == "other");
  CHECK_THROWS_AS(load_matrix(dir.path / "missing.tsv"), DataError);
}

TEST_CASE("z-score normalization") {
  const auto z = zscore_normalize(testing::matrix(3, 2, {1, 5, 2, 5, 3, 5}));
  CHECK(z(0, 0) == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(z(1, 0) == doctest::Approx(0.0));
  CHECK(z(2, 0) == doctest::Approx(1.2247).epsilon(1e-4));
  CHECK(z(0, 0) == doctest::Approx(-std::sqrt(1.5)).epsilon(1e-14));
  for (std::size_t i = 0; i < 3; ++i) CHECK(z(i, 1) == 0.0);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> unit;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + rng() % 30, p = 1 + rng() % 6;
    std::vector<double> v(n * p);
    for (auto& x : v) x = 100.0 + 30.0 * unit(rng);
    const auto once = zscore_normalize(testing::matrix(n, p, v));
    const auto twice = zscore_normalize(once);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(once.values()[i] - twice.values()[i]) <= 1e-12);
    for (std::size_t j = 0; j < p; ++j) {
      double mean = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += once(i, j) / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) sq += (once(i, j) - mean) * (once(i, j) - mean) / static_cast<double>(n);
      CHECK(std::abs(mean) < 1e-12);
      CHECK(sq == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("alignment") {
  const auto d = testing::matrix(3, 1, {0, 1, 2});
  CHECK(align(d, {"g0", "g1", "g2"}).values() == d.values());
  CHECK(align(d, {"g2", "g1", "g0"}).values() == std::vector<double>{2, 1, 0});
  const auto sub = align(d, {"g2", "g0"});
  CHECK(sub.values() == std::vector<double>{2, 0});
  CHECK(align(sub, {"g2", "g0"}).values() == sub.values());
  CHECK_THROWS_WITH_AS(align(d, {"g0", "q1", "q2"}), doctest::Contains("q2"), DataError);
}

TEST_CASE("gene selection") {
  const auto a = testing::matrix(3, 2, {0, 0, 5, -5, 1, 2}, "a");
  CHECK(select_genes({a}, {std::nullopt}, 3) == std::vector<std::string>{"g0", "g1", "g2"});
  CHECK(select_genes({a}, {std::nullopt}, 1) == std::vector<std::string>{"g1"});
  const auto b = testing::matrix(3, 2, {9, -9, 0, 0, 1, 1}, "b");
  CHECK(select_genes({a, b}, {std::nullopt, std::nullopt}, 1) == std::vector<std::string>{"g0", "g1"});
  const GeneScores scores{{"g0", 0.1}, {"g1", 0.2}, {"g2", 0.9}};
  CHECK(select_genes({a, b}, {scores, scores}, 1) == std::vector<std::string>{"g2"});

  const GeneScores v = row_variance_scores(a);
  CHECK(v.at("g1") == 25.0);
  CHECK(v.at("g2") == 0.25);

  const ExpressionMatrix c("c", {"g2", "g0", "x"}, {"s"}, {1, 2, 3});
  CHECK(common_genes({a, c}) == std::vector<std::string>{"g0", "g2"});
  CHECK(select_genes({a, c}, {std::nullopt, std::nullopt}, 5) == std::vector<std::string>{"g0", "g2"});
}

TEST_CASE("index files") {
  ModelIndex index;
  index.add(ModelIndexEntry("E1", {"g1", "g2", "g3"}, clustering({0, 1, 0}), {"greedy", -12.125, 7}));
  index.add(ModelIndexEntry("E2", {"g1", "g2", "g3"}, clustering({0, 0, 0}), {"restricted", 0.1, 0}));
  std::ostringstream out;
  write_index(out, index);
  const std::string text = out.str();
  CHECK(text.rfind(R"({"experiment_id":"E1","gene_ids":["g1","g2","g3"],"assignment":[1,2,1],"k":2,)", 0) == 0);

  std::istringstream in(text);
  const auto back = read_index(in);
  REQUIRE(back.size() == 2);
  CHECK(back.entries()[0].clustering == index.entries()[0].clustering);
  CHECK(back.entries()[0].fit.log_score == -12.125);
  CHECK(back.entries()[1].fit.method == "restricted");
  std::ostringstream again;
  write_index(again, back);
  CHECK(again.str() == text);

  std::istringstream empty("");
  CHECK(read_index(empty).empty());

  auto reject = [](const std::string& line) {
    std::istringstream bad("\n" + line + "\n");
    CHECK_THROWS_WITH_AS(read_index(bad), doctest::Contains("index line 2"), DataError);
  };
  reject(R"({"experiment_id":"E","gene_ids":["a","b"],"assignment":[1,2],"k":3,"log_score":0,"method":"m","seed":0})");
  reject(R"({"experiment_id":"E","gene_ids":["a","b"],"assignment":[2,1],"k":2,"log_score":0,"method":"m","seed":0})");
  reject(R"({"experiment_id":"E","gene_ids":["a"],"assignment":[1,1],"k":1,"log_score":0,"method":"m","seed":0})");
  reject(R"({"experiment_id":"E","gene_ids":["a","b"],"assignment":[1,0],"k":1,"log_score":0,"method":"m","seed":0})");
  reject(R"({"experiment_id":"E","gene_ids":["a"],"assignment":[1],"k":1})");
  reject("not json");

  TempDir dir;
  save_index(dir.path / "i.jsonl", index);
  CHECK(load_index(dir.path / "i.jsonl").ids() == index.ids());
}

TEST_CASE("labels, DE profiles and gene scores") {
  TempDir dir;
  const auto labels = dir.write("l.tsv", "experiment_id\tcondition\nA\tx\nB\tNA\nC\t\nD\ty\n");
  const auto gt = load_labels(labels, "condition");
  CHECK(gt.labels.size() == 4);
  CHECK(gt.labels.at("A") == "x");
  CHECK_FALSE(gt.labels.at("B").has_value());
  CHECK_FALSE(gt.labels.at("C").has_value());
  save_labels(dir.path / "l2.tsv", gt);
  CHECK(load_labels(dir.path / "l2.tsv", "condition").labels == gt.labels);
  CHECK_THROWS_AS(load_labels(dir.write("dup.tsv", "A\tx\nA\ty\n"), "c"), DataError);
  CHECK_THROWS_AS(load_labels(dir.write("wide.tsv", "A\tx\ty\n"), "c"), DataError);

  const auto de = load_de_profile(dir.write("de.tsv", "g1\t0.01\ng2\t1\n"), "A");
  CHECK(de.p_values == std::vector<double>{0.01, 1.0});
  CHECK_THROWS_AS(load_de_profile(dir.write("de_bad.tsv", "g1\t0\n"), "A"), DataError);
  CHECK_THROWS_AS(load_de_profile(dir.write("de_na.tsv", "g0\t0.5\ng1\tNA\n"), "A"), DataError);

  const auto scores = load_gene_scores(dir.write("s.tsv", "gene\tscore\ng1\t2.5\ng2\t-1\n"));
  CHECK(scores.at("g1") == 2.5);
  CHECK(scores.size() == 2);
}

TEST_CASE("manifests") {
  TempDir dir;
  fs::create_directories(dir.path / "data");
  dir.write("data/a.tsv", "gene\ts\ng\t1\n");
  dir.write("data/b.tsv", "gene\ts\ng\t2\n");
  dir.write("data/a_de.tsv", "g\t0.5\n");
  dir.write("labels.tsv", "a\tx\nb\tx\n");
  const auto path = dir.write("m.tsv",
                              "# corpus\n"
                              "experiment\ta\tdata/a.tsv\tde=data/a_de.tsv\n"
                              "experiment\tb\tdata/b.tsv\n"
                              "labels\tcondition\tlabels.tsv\n");
  const auto m = load_manifest(path);
  CHECK(m.ids() == std::vector<std::string>{"a", "b"});
  CHECK(m.experiments[0].matrix == dir.path / "data/a.tsv");
  CHECK(m.experiments[0].de_profile == dir.path / "data/a_de.tsv");
  CHECK_FALSE(m.experiments[1].de_profile.has_value());
  REQUIRE(m.label_files.size() == 1);
  CHECK(m.label_files[0].label_type == "condition");

  save_manifest(dir.path / "copy.tsv", m);
  const auto copy = load_manifest(dir.path / "copy.tsv");
  CHECK(copy.ids() == m.ids());
  CHECK(copy.experiments[0].de_profile == m.experiments[0].de_profile);

  CHECK_THROWS_AS(load_manifest(dir.write("bad1.tsv", "experiment\ta\tdata/none.tsv\n")), DataError);
  CHECK_THROWS_AS(load_manifest(dir.write("bad2.tsv", "experiment\ta\tdata/a.tsv\nexperiment\ta\tdata/b.tsv\n")),
                  DataError);
  CHECK_THROWS_AS(load_manifest(dir.write("bad3.tsv", "sample\ta\tdata/a.tsv\n")), DataError);
  CHECK_THROWS_AS(load_manifest(dir.write("bad4.tsv", "experiment\ta\tdata/a.tsv\tcolour=red\n")), DataError);
}

TEST_CASE("number parsing") {
  CHECK(parse_double("1.5") == 1.5);
  CHECK(parse_double("-2e3") == -2000.0);
  CHECK_FALSE(parse_double("NA").has_value());
  CHECK_FALSE(parse_double("1.5x").has_value());
  CHECK_FALSE(parse_double("").has_value());
  CHECK_FALSE(parse_double("nan").has_value());
  CHECK(split("a\t\tb", '\t') == std::vector<std::string>{"a", "", "b"});
}
