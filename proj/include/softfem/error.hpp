#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace softfem {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidMesh : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Iterative kernel failed to converge or produced a non-finite value.
class NumericError : public Error {
 public:
  using Error::Error;
};

class MassNotSpd : public NumericError {
 public:
  MassNotSpd() : NumericError("mass not SPD") {}
};

/// Smallest pencil eigenvalue is not positive; the softened form lost coercivity.
class IndefinitePencil : public NumericError {
 public:
  explicit IndefinitePencil(double lambda_min)
      : NumericError("indefinite pencil (lambda_min = " + std::to_string(lambda_min) + ")"),
        lambda_min_(lambda_min) {}
  double lambda_min() const { return lambda_min_; }

 private:
  double lambda_min_;
};

/// Requested a per-mode comparison inside a degenerate eigenvalue cluster.
class MultiplicityError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Evaluation or assembly failure tied to a specific mesh element.
class AssemblyError : public Error {
 public:
  AssemblyError(const std::string& what, std::size_t element)
      : Error("element " + std::to_string(element) + ": " + what), element_(element) {}
  std::size_t element() const { return element_; }

 private:
  std::size_t element_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error("config field '" + field + "': " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace softfem
