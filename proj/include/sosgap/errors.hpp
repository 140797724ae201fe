#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace sosgap {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInstance : public Error {
 public:
  using Error::Error;
};

class InvalidAssignment : public Error {
 public:
  using Error::Error;
};

class InvalidMeasurement : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

// Caps on enumeration sizes, Hilbert dimensions and equation budgets.
class ResourceLimit : public Error {
 public:
  using Error::Error;
};

class DegreeError : public Error {
 public:
  using Error::Error;
};

// Raised by grigoriev_pe when the requested width derives a contradiction.
class DegreeTooHigh : public DegreeError {
 public:
  DegreeTooHigh(const std::string& what, std::optional<int> largest_valid)
      : DegreeError(what), largest_valid_(largest_valid) {}
  std::optional<int> largest_valid() const { return largest_valid_; }

 private:
  std::optional<int> largest_valid_;
};

}  // namespace sosgap
