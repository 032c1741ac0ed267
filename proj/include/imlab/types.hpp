#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace imlab {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Generator of rotations in the dq plane, [[0,-1],[1,0]].
inline Mat2 jmat() {
  Mat2 j;
  j << 0.0, -1.0, 1.0, 0.0;
  return j;
}

// J * v without building the matrix.
inline Vec2 jrot(const Vec2& v) { return Vec2(-v.y(), v.x()); }

inline Mat2 rot(double eta) {
  const double c = std::cos(eta), s = std::sin(eta);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

// Reflection across the d axis, diag(1,-1).
inline Mat2 dq_reflection() {
  Mat2 r;
  r << 1.0, 0.0, 0.0, -1.0;
  return r;
}

// Singular values of a 2x2 matrix, largest first.
inline std::pair<double, double> singular_values_2x2(const Mat2& m) {
  const double f2 = m.squaredNorm();
  const double d = m.determinant();
  const double gap = std::sqrt(std::max(0.0, f2 * f2 - 4.0 * d * d));
  const double smax = std::sqrt(0.5 * (f2 + gap));
  const double smin = smax > 0.0 ? std::abs(d) / smax : 0.0;
  return {smax, smin};
}

// Configuration / input-file problems, mapped to exit code 2 by the CLI.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failures (solver divergence, degenerate magnetics, filter
// preconditions), mapped to exit code 3 by the CLI.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace imlab
