#pragma once

#include <stdexcept>
#include <string>

namespace xrnpe {

/// Malformed, mismatched or missing data (shapes, formats, containers).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numeric contract was broken at run time, e.g. a quire accumulated past
/// its sized capacity or training diverged.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace xrnpe
