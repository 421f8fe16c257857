#ifndef PIFO_ERRORS_HPP_
#define PIFO_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace pifo {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand extents disagree. Raised before any arithmetic touches the data.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// API called out of order or with arguments outside its contract.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Optimizer state does not mirror the parameters it is applied to.
class StateError : public Error {
 public:
  using Error::Error;
};

// Unknown environment id, bad config key/value, metadata mismatch.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed demo file, metrics CSV, or other text/binary input.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Normalized scoring is undefined (expert and random baselines coincide).
class EvaluationError : public Error {
 public:
  using Error::Error;
};

// A loss or gradient became NaN/Inf during an update.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  enum class Kind { kIo, kBadMagic, kUnsupportedVersion, kTruncated, kMalformed };

  CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace pifo

#endif  // PIFO_ERRORS_HPP_
