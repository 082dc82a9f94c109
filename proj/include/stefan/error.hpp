#pragma once

#include <stdexcept>
#include <string>

namespace stefan {

/// Base class for every domain error raised by the library. Argument
/// validation failures use std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoValidCutoff : public Error {
 public:
  using Error::Error;
};

class CovarianceNotPD : public Error {
 public:
  using Error::Error;
};

class NeedTwoLevels : public Error {
 public:
  NeedTwoLevels() : Error("refinement study needs at least two levels") {}
};

class DegenerateFit : public Error {
 public:
  using Error::Error;
};

class InstanceTooLarge : public Error {
 public:
  using Error::Error;
};

class ConfigInvalid : public Error {
 public:
  ConfigInvalid(std::string field, const std::string& reason)
      : Error(field + ": " + reason), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class OutputUnwritable : public Error {
 public:
  using Error::Error;
};

}  // namespace stefan
