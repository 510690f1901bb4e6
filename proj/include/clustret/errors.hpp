#pragma once

#include <stdexcept>
#include <string>

namespace clustret {

// Raised for malformed or inconsistent input data (files, ids, dimensions).
// Programming-contract violations use std::invalid_argument instead.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace clustret
