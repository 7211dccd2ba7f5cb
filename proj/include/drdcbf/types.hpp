#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace drdcbf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration (non-positive gains, bad schema, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The decoupling matrix lost column rank at a state.
class RankError : public Error {
 public:
  using Error::Error;
};

/// Integration produced a non-finite state.
class SimulationError : public Error {
 public:
  SimulationError(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) { return std::atan2(std::sin(a), std::cos(a)); }

/// Skew-symmetric matrix such that skew(a) * b = a x b.
inline Mat3 skew(const Vec3& a) {
  Mat3 s;
  s << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
       -a.y(), a.x(), 0.0;
  return s;
}

/// Inverse of skew() applied to the skew-symmetric part of m.
inline Vec3 vee_skew_part(const Mat3& m) {
  const Mat3 s = 0.5 * (m - m.transpose());
  return Vec3(s(2, 1), s(0, 2), s(1, 0));
}

inline std::string format_vec(const Vec& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(v[i]);
  }
  return out + "]";
}

}  // namespace drdcbf
