#pragma once

#include <string>
#include <vector>

#include "clustret/data_model.hpp"

namespace testing {

/// n x p matrix with genes g0.. and samples s0.., values row-major.
inline clustret::ExpressionMatrix matrix(std::size_t n, std::size_t p, const std::vector<double>& values,
                                         const std::string& id = "X") {
  std::vector<std::string> genes, samples;
  for (std::size_t i = 0; i < n; ++i) genes.push_back("g" + std::to_string(i));
  for (std::size_t j = 0; j < p; ++j) samples.push_back("s" + std::to_string(j));
  return clustret::ExpressionMatrix(id, genes, samples, values);
}

inline clustret::Clustering clustering(std::initializer_list<clustret::Label> labels) {
  return clustret::Clustering(std::vector<clustret::Label>(labels));
}

}  // namespace testing
