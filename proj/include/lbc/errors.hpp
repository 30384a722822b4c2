#pragma once

#include <stdexcept>
#include <string>

namespace lbc {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or degenerate physical/constitutive input.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// 1 - Ca*Cw vanishes, so the coupling matrix cannot be inverted.
class SingularCouplingError : public Error {
 public:
  using Error::Error;
};

/// Coupled system is not dissipative; a forward solve would blow up.
class WellPosednessError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class TapeError : public Error {
 public:
  using Error::Error;
};

class SegmentError : public Error {
 public:
  using Error::Error;
};

class PlanError : public Error {
 public:
  using Error::Error;
};

class LineSearchError : public Error {
 public:
  using Error::Error;
};

/// Configuration file problems; `path` names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace lbc
