#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dirnet {

/// Bad user configuration (flags, config file, out-of-range options).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data violates a format or model precondition.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A density or accumulation became non-finite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the sampler when the chain state can no longer be evaluated.
class ChainAbort : public NumericalError {
 public:
  ChainAbort(std::size_t iteration, const std::string& what)
      : NumericalError("chain aborted at iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace dirnet
