#include "clustret/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "clustret/errors.hpp"

namespace clustret {

namespace {

void require_same_items(const Clustering& a, const Clustering& b) {
  if (a.n() != b.n()) {
    throw DataError("clusterings cover different item counts (" + std::to_string(a.n()) + " vs " +
                    std::to_string(b.n()) + ")");
  }
}

// Terms are summed in ascending order so that swapping the arguments, or
// comparing a clustering with itself, reproduces the same bits.
double sorted_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum;
}

}  // namespace

ContingencyTable contingency_table(const Clustering& a, const Clustering& b) {
  require_same_items(a, b);
  ContingencyTable t;
  t.row_totals = a.sizes();
  t.col_totals = b.sizes();
  t.total = a.n();
  std::unordered_map<std::uint64_t, std::size_t> counts;
  counts.reserve(std::min(a.n(), a.k() * b.k()));
  for (std::size_t i = 0; i < a.n(); ++i) {
    ++counts[(static_cast<std::uint64_t>(a[i]) << 32) | b[i]];
  }
  t.cells.reserve(counts.size());
  for (const auto& [key, count] : counts) {
    t.cells.push_back({static_cast<Label>(key >> 32), static_cast<Label>(key & 0xffffffffu), count});
  }
  std::sort(t.cells.begin(), t.cells.end(),
            [](const auto& x, const auto& y) { return x.row != y.row ? x.row < y.row : x.col < y.col; });
  return t;
}

double entropy(const Clustering& s) {
  const auto n = static_cast<double>(s.n());
  const auto& sizes = s.sizes();
  // Equal blocks: n / size is exactly k, so this is log k to the last bit.
  if (std::adjacent_find(sizes.begin(), sizes.end(), std::not_equal_to<>()) == sizes.end()) {
    return std::log(n / static_cast<double>(sizes.front()));
  }
  std::vector<double> terms;
  terms.reserve(s.k());
  for (std::size_t size : s.sizes()) {
    const auto m = static_cast<double>(size);
    terms.push_back((m / n) * std::log(n / m));
  }
  return sorted_sum(terms);
}

double mutual_information(const Clustering& a, const Clustering& b) {
  if (a == b) return entropy(a);
  const ContingencyTable t = contingency_table(a, b);
  const auto n = static_cast<double>(t.total);
  std::vector<double> terms;
  terms.reserve(t.cells.size());
  for (const auto& cell : t.cells) {
    const auto joint = static_cast<double>(cell.count);
    const auto ra = static_cast<double>(t.row_totals[cell.row]);
    const auto cb = static_cast<double>(t.col_totals[cell.col]);
    terms.push_back((joint / n) * std::log((joint * n) / (ra * cb)));
  }
  return std::max(0.0, sorted_sum(terms));
}

double nid(const Clustering& a, const Clustering& b) {
  require_same_items(a, b);
  if (a == b) return 0.0;
  const double h = std::max(entropy(a), entropy(b));
  if (h <= 0.0) return 0.0;
  const double d = 1.0 - mutual_information(a, b) / h;
  return std::clamp(d, 0.0, 1.0);
}

}  // namespace clustret
