#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace phasedrift {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Raised for invalid user input: bad parameters, malformed config files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a computation cannot deliver a trustworthy result
// (quadrature budget exhausted, non-finite trajectories, indefinite blocks).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Point estimate with its Monte Carlo standard error.
struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

}  // namespace phasedrift
