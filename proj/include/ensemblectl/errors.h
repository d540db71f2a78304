#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ensemblectl {

// Base class for every error raised by the library. The CLI maps all of them
// to the input-error exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed expression text. `offset` is the byte offset of the offending
// token in the original input.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, const std::string& message)
      : Error("syntax error at offset " + std::to_string(offset) + ": " +
              message),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class UnknownIdentifierError : public SyntaxError {
 public:
  UnknownIdentifierError(std::size_t offset, const std::string& name)
      : SyntaxError(offset, "unknown identifier '" + name + "'"),
        name_(name) {}

  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

// A value that must be finite came out as inf/nan, or a parameter lies
// outside the ensemble domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Structural problems with an ensemble description (dimensions, domain,
// finite-to-one violations, unknown keys in a spec file).
class SpecError : public Error {
 public:
  using Error::Error;
};

class PreimageError : public Error {
 public:
  enum class Kind { kEmpty, kCapExceeded };

  PreimageError(Kind kind, const std::string& message)
      : Error(message), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Failures of the numerical kernels (non-convergent SVD, non-finite matrix
// entries, size caps).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ensemblectl
