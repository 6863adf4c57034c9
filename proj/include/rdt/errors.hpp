#pragma once

#include <stdexcept>
#include <string>

namespace rdt {

/// Raised when an argument lies outside the domain an operation accepts
/// (width < 2, negative learning rate, mismatched dimensions, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A model, dataset or config file could not be parsed.
class MalformedFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int epoch)
      : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

/// Enumeration oracles refuse trees with too many leaves.
class TreeTooLargeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rdt
