#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace starwave {

using real = double;
using cplx = std::complex<double>;

using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using CMat3 = Eigen::Matrix3cd;

using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;

inline constexpr double pi = 3.14159265358979323846;

// Every module reports failures through this hierarchy; the CLI maps them to
// a nonzero exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class SingularError : public Error {
 public:
  using Error::Error;
};

/// Spherical coordinates with latitude theta in [-pi/2, pi/2] and
/// longitude phi in (-pi, pi].
struct Spherical {
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;
};

inline Spherical to_spherical(const Vec3& x) {
  Spherical s;
  s.r = x.norm();
  s.theta = s.r > 0.0 ? std::asin(std::clamp(x.z() / s.r, -1.0, 1.0)) : 0.0;
  s.phi = std::atan2(x.y(), x.x());
  return s;
}

inline Vec3 from_spherical(double r, double theta, double phi) {
  return {r * std::cos(theta) * std::cos(phi), r * std::cos(theta) * std::sin(phi),
          r * std::sin(theta)};
}

/// Wraps an angle difference into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * pi);
  if (a <= -pi) a += 2.0 * pi;
  if (a > pi) a -= 2.0 * pi;
  return a;
}

}  // namespace starwave
