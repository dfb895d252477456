#pragma once

// Smooth compactly supported initial distribution f0(x, p) = delta * g(|x|/R0) * g(|p|/P0).

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "config.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "quadrature.hpp"

namespace vdarwin {

// Mollifier profile g(s) = exp(1 - 1/(1 - s^2)) on |s| < 1, zero elsewhere; g(0) = 1.
inline double bump_profile(double s) {
  const double q = 1.0 - s * s;
  if (q <= 0.0) return 0.0;
  return std::exp(1.0 - 1.0 / q);
}

inline double bump_profile_derivative(double s) {
  const double q = 1.0 - s * s;
  if (q <= 0.0) return 0.0;
  return bump_profile(s) * (-2.0 * s / (q * q));
}

namespace detail {

// sup over (a, b) in [0,1)^2 of sqrt((g'(a) g(b) / R0)^2 + (g(a) g'(b) / P0)^2).
inline double unit_gradient_sup(double R0, double P0) {
  auto objective = [&](double a, double b) {
    const double u = bump_profile_derivative(a) * bump_profile(b) / R0;
    const double v = bump_profile(a) * bump_profile_derivative(b) / P0;
    return u * u + v * v;
  };
  constexpr int m = 400;
  double best = -1.0, ba = 0.0, bb = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double a = (i + 0.5) / m, b = (j + 0.5) / m;
      const double f = objective(a, b);
      if (f > best) best = f, ba = a, bb = b;
    }
  // Compass search refinement around the best grid point.
  for (double step = 1.0 / m; step > 1e-14; step *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (auto [da, db] : {std::pair{1, 0}, std::pair{-1, 0}, std::pair{0, 1}, std::pair{0, -1}}) {
        const double a = std::clamp(ba + da * step, 0.0, 1.0), b = std::clamp(bb + db * step, 0.0, 1.0);
        const double f = objective(a, b);
        if (f > best) best = f, ba = a, bb = b, moved = true;
      }
    }
  }
  return std::sqrt(best);
}

// Integral of g(|y|) over the unit ball.
inline double unit_bump_mass() {
  static const double mass = [] {
    const auto rule = gauss_legendre(20);
    return 4.0 * std::numbers::pi *
           integrate_composite(rule, [](double s) { return bump_profile(s) * s * s; }, 0.0, 1.0, 64);
  }();
  return mass;
}

}  // namespace detail

struct InitialDatum {
  double R0 = 1.0;
  double P0 = 1.0;
  double delta = 0.0;               // effective amplitude (sup f0)
  double requested_amplitude = 0.0;
  double gradient_sup = 0.0;        // sup over phase space of |grad_(x,p) f0|

  double value(const Vec3& x, const Vec3& p) const {
    return delta * bump_profile(norm(x) / R0) * bump_profile(norm(p) / P0);
  }

  // Phase-space gradient (d/dx, d/dp).
  std::array<double, 6> gradient(const Vec3& x, const Vec3& p) const {
    std::array<double, 6> g{};
    const double rx = norm(x), rp = norm(p);
    const double gx = bump_profile(rx / R0), gp = bump_profile(rp / P0);
    const double dx = rx > 0 ? bump_profile_derivative(rx / R0) / (R0 * rx) : 0.0;
    const double dp = rp > 0 ? bump_profile_derivative(rp / P0) / (P0 * rp) : 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      g[i] = delta * dx * gp * x[i];
      g[3 + i] = delta * gx * dp * p[i];
    }
    return g;
  }

  // Total charge: integral of f0 over phase space.
  double total_charge() const {
    const double m = detail::unit_bump_mass();
    return delta * m * R0 * R0 * R0 * m * P0 * P0 * P0;
  }
};

// Builds the datum, lowering the amplitude when needed so that sup f0 <= 1 and sup |grad f0| <= 1.
inline InitialDatum build_initial_datum(const SimConfig& config) {
  if (!(config.R0 > 0) || !(config.P0 > 0)) throw ConfigError("support radii must be positive");
  if (!(config.amplitude > 0) || !(config.amplitude <= 1.0) || !std::isfinite(config.amplitude))
    throw ConfigError("amplitude must lie in (0, 1]");
  InitialDatum d;
  d.R0 = config.R0;
  d.P0 = config.P0;
  d.requested_amplitude = config.amplitude;
  const double unit_sup = detail::unit_gradient_sup(config.R0, config.P0);
  if (!(unit_sup > 0) || !std::isfinite(unit_sup))
    throw ConfigError("gradient bound of the initial datum cannot be satisfied");
  d.delta = std::min(config.amplitude, 1.0 / unit_sup);
  if (d.delta < config.amplitude)
    log_warning("amplitude lowered from " + std::to_string(config.amplitude) + " to " + std::to_string(d.delta) +
                " so that the gradient of f0 is bounded by 1");
  d.gradient_sup = d.delta * unit_sup;
  return d;
}

}  // namespace vdarwin
