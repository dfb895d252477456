#pragma once

// Relativistic kinematics in units with c = m = 1.

#include <cmath>

#include "linalg.hpp"

namespace vdarwin {

inline double lorentz_gamma(const Vec3& p) { return std::sqrt(1.0 + norm2(p)); }

// v(p) = p / sqrt(1 + |p|^2); always |v| < 1.
inline Vec3 relativistic_velocity(const Vec3& p) { return p / lorentz_gamma(p); }

// Dv(p) = (I - p p^T / (1 + |p|^2)) / sqrt(1 + |p|^2); det Dv = (1 + |p|^2)^(-5/2).
inline Mat3 velocity_jacobian(const Vec3& p) {
  const double g2 = 1.0 + norm2(p);
  const double g = std::sqrt(g2);
  return (Mat3::identity() - Mat3::outer(p, p) * (1.0 / g2)) * (1.0 / g);
}

// Lorentz force K = E + v x B.
inline Vec3 lorentz_force(const Vec3& p, const Vec3& e, const Vec3& b) {
  return e + cross(relativistic_velocity(p), b);
}

}  // namespace vdarwin
