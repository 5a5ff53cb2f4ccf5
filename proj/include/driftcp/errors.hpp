#pragma once

#include <stdexcept>
#include <string>

namespace driftcp {

// Bad configuration or an unusable dataset (wrong sizes, mixed task kinds).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed sample-level input: dimension mismatch, label out of range, NaN.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A broken internal contract. Seeing one of these is a bug.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace driftcp
