#pragma once

#include <stdexcept>
#include <string>

namespace esnmf {

/// Operand shapes do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A factor collapsed so that its Gram system cannot be solved, or a
/// quantity that needs a nonzero factor was handed an all-zero one.
class DegenerateFactorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unusable input data (files, corpora, sidecars).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace esnmf
