#pragma once

#include <stdexcept>
#include <string>

namespace alstm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value (nz, n_steps, tile sizes, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Index or term count out of range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Bad user-supplied input (empty eval set, empty BLEU reference, missing table entry).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A dominant singular triple was requested for an all-zero matrix.
class ZeroMatrixError : public Error {
 public:
  using Error::Error;
};

/// Input too large for a test-scale routine.
class ScaleError : public Error {
 public:
  using Error::Error;
};

/// Container decoding failure.
class FormatError : public Error {
 public:
  enum class Kind { kBadMagic, kBadVersion, kTruncated, kNonFinite, kBadIndices, kBadHeader, kIo };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace alstm
