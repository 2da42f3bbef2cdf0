#pragma once

#include <stdexcept>
#include <string>

namespace crowdmf {

// Exact-analysis request exceeds the enumeration / solver limits.
// The CLI maps this (and bad configs) to exit code 2.
class capacity_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical routine failed to reach its tolerance.
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace crowdmf
