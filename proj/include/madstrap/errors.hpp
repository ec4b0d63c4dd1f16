#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace madstrap {

// Argument outside the mathematical domain of an operation (p outside (0,1),
// empty sample, l out of range, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// The model violates a structural precondition (vanishing density at v or
// v +/- xi, root-finding could not bracket, ...).
class ModelUnsupported : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// F'(v) or G'(xi) is zero where a formula divides by it.
class DegenerateDensity : public ModelUnsupported {
 public:
  using ModelUnsupported::ModelUnsupported;
};

// A scale estimate collapsed to zero (all mass at one point).
class DegenerateScale : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SizeLimitError : public std::length_error {
 public:
  using std::length_error::length_error;
};

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid experiment configuration; carries the offending field name.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// File could not be opened or written.
class IoError : public std::runtime_error {
 public:
  IoError(std::string path, const std::string& what)
      : std::runtime_error(what + ": " + path), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace madstrap
