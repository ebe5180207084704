#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

namespace jsat {

using ArrayXd = Eigen::ArrayXd;
using ArrayXi = Eigen::ArrayXi;
using ArrayXXd = Eigen::ArrayXXd;
using ArrayXXi = Eigen::ArrayXXi;
using ArrayXXcd = Eigen::ArrayXXcd;
using Index = Eigen::Index;
using Complex = std::complex<double>;

/// Speed of light in nm/ps; all spectral detunings are angular frequencies in rad/ps.
inline constexpr double kSpeedOfLight = 299792.458;

inline constexpr double kPi = 3.14159265358979323846;

/// Grid node as (signal index, idler index).
struct Node {
  Index s = 0;
  Index i = 0;
  friend bool operator==(const Node&, const Node&) = default;
};

/// sin(x)/x with the removable singularity filled in.
inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  return std::sin(x) / x;
}

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double phi) {
  double w = phi - 2.0 * kPi * std::round(phi / (2.0 * kPi));
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

}  // namespace jsat
