#pragma once

#include <stdexcept>
#include <string>

namespace nnet {

// Bad input: malformed files, out-of-range indices, violated preconditions.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// An internal invariant did not hold. Indicates a bug, not bad input.
class InvariantError : public std::logic_error {
 public:
  explicit InvariantError(const std::string& what) : std::logic_error(what) {}
};

// Enumeration would exceed the configured cap.
class CapExceeded : public InputError {
 public:
  explicit CapExceeded(const std::string& what) : InputError(what) {}
};

}  // namespace nnet
