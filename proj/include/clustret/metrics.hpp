#pragma once

#include <cstddef>
#include <vector>

#include "clustret/data_model.hpp"

namespace clustret {

/// Sparse co-occurrence counts between two clusterings of the same items.
struct ContingencyTable {
  struct Cell {
    Label row;
    Label col;
    std::size_t count;
  };
  std::vector<Cell> cells;  // non-zero cells only, sorted by (row, col)
  std::vector<std::size_t> row_totals;
  std::vector<std::size_t> col_totals;
  std::size_t total = 0;
};

ContingencyTable contingency_table(const Clustering& a, const Clustering& b);

/// Shannon entropy of the cluster-membership distribution, in nats.
double entropy(const Clustering& s);

/// Mutual information of two clusterings, in nats.
double mutual_information(const Clustering& a, const Clustering& b);

/// Normalized information distance 1 - I / max(H, H'), in [0, 1].
/// Defined as 0 when both clusterings are a single cluster.
double nid(const Clustering& a, const Clustering& b);

}  // namespace clustret
