#pragma once

#include <stdexcept>
#include <string>

namespace tma {

// File contents that violate the volume format contract.
struct format_error : std::runtime_error {
  explicit format_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Requested allocation exceeds what the container format can describe.
struct capacity_error : std::runtime_error {
  explicit capacity_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operands live on different grids.
struct shape_error : std::runtime_error {
  explicit shape_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A numeric parameter is outside its valid range.
struct param_error : std::runtime_error {
  explicit param_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A cohort manifest or run configuration fails validation.
struct manifest_error : std::runtime_error {
  explicit manifest_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A region reduction was asked for on an empty region.
struct region_error : std::runtime_error {
  explicit region_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tma
