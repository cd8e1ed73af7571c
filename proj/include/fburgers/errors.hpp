#pragma once

#include <stdexcept>
#include <string>

namespace fburgers {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  NonFiniteError(const std::string& what, double t) : Error(what), time_(t) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class ConvexityError : public Error {
 public:
  ConvexityError(const std::string& what, double y) : Error(what), y_(y) {}
  /// Sample point where f'' dropped below the convexity floor.
  double y() const noexcept { return y_; }

 private:
  double y_;
};

class GrowthError : public Error {
 public:
  GrowthError(const std::string& what, double exponent) : Error(what), exponent_(exponent) {}
  double exponent() const noexcept { return exponent_; }

 private:
  double exponent_;
};

class DegenerateInitialData : public Error {
 public:
  using Error::Error;
};

class LatticeShiftError : public Error {
 public:
  using Error::Error;
};

class DegenerateFlatness : public Error {
 public:
  using Error::Error;
};

class WindowNotCovered : public Error {
 public:
  using Error::Error;
};

class UnsupportedTarget : public Error {
 public:
  using Error::Error;
};

class LogDomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : Error("config key '" + key + "': " + what), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class SnapshotError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fburgers
