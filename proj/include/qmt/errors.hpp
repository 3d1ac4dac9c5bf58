#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace qmt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure while evaluating the vehicle dynamics. Carries the grid station
/// where it happened when raised from inside a trajectory integration.
class DynamicsError : public Error {
 public:
  explicit DynamicsError(const std::string& what) : Error(what) {}

  int station() const { return station_; }
  void set_station(int station) { station_ = station; }

 private:
  int station_ = -1;
};

/// Euler-rate map is singular (|cos(theta)| too small).
class SingularityError : public DynamicsError {
 public:
  using DynamicsError::DynamicsError;
};

/// Forward speed v_t dropped below the floor of the space parameterization.
class SlowSpeedError : public DynamicsError {
 public:
  using DynamicsError::DynamicsError;
};

/// 1 - k*w1 <= 0: the state left the tubular neighborhood of the path.
class TubularBoundaryError : public DynamicsError {
 public:
  using DynamicsError::DynamicsError;
};

/// Curvature below the floor at which the Frenet normal is defined.
class CurvatureError : public Error {
 public:
  using Error::Error;
};

class ProjectionError : public Error {
 public:
  enum class Kind { kNoConvergence, kAmbiguous };
  ProjectionError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class RiccatiBlowUpError : public Error {
 public:
  using Error::Error;
};

class IndefiniteHessianError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Invalid scenario construction (tube too wide, ill-ordered profiles, ...).
class ScenarioError : public Error {
 public:
  using Error::Error;
};

/// The quasi-static initial attitude would need more tilt than allowed.
class QuasiStaticInfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Cost of the initial trajectory is not finite.
class InfeasibleStartError : public Error {
 public:
  using Error::Error;
};

/// Configuration document does not match the schema. `key_path` is the
/// dotted location of the offending entry, e.g. "constraints.thrust".
class ConfigError : public Error {
 public:
  ConfigError(std::string key_path, const std::string& reason)
      : Error(key_path + ": " + reason), key_path_(std::move(key_path)) {}
  const std::string& key_path() const { return key_path_; }

 private:
  std::string key_path_;
};

}  // namespace qmt
