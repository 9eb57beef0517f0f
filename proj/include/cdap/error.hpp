#pragma once

#include <stdexcept>
#include <string>

namespace cdap {

// Base for everything thrown by this library.
class CdapError : public std::runtime_error {
 public:
  explicit CdapError(const std::string& msg) : std::runtime_error(msg) {}
};

// Incompatible operand shapes in a tensor primitive.
class ShapeError : public CdapError {
 public:
  using CdapError::CdapError;
};

// A caller broke an internal precondition (empty bank, double backward, ...).
class ContractError : public CdapError {
 public:
  using CdapError::CdapError;
};

// Malformed input file. Carries a line number when one is known.
class ParseError : public CdapError {
 public:
  ParseError(const std::string& msg, int line = 0)
      : CdapError(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Well-formed input that violates a domain invariant. CLI exit code 2.
class ValidationError : public CdapError {
 public:
  using CdapError::CdapError;
};

// Episode sampling could not satisfy the N-way K-shot request.
class SamplingError : public ValidationError {
 public:
  SamplingError(const std::string& msg, std::string deficient_class)
      : ValidationError(msg), deficient_class_(std::move(deficient_class)) {}
  const std::string& deficient_class() const { return deficient_class_; }

 private:
  std::string deficient_class_;
};

// Non-finite loss or gradient during training. CLI exit code 3.
class DivergenceError : public CdapError {
 public:
  using CdapError::CdapError;
};

}  // namespace cdap
