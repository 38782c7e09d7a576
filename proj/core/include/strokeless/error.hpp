#pragma once

#include <stdexcept>
#include <string>

namespace strokeless {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A loss or metric component evaluated to NaN/Inf.
class NumericError : public Error {
 public:
  NumericError(const std::string& component, const std::string& what)
      : Error(what), component_(component) {}
  const std::string& component() const noexcept { return component_; }

 private:
  std::string component_;
};

class CheckpointFormatError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace strokeless
