#pragma once

// Spherically symmetric reference: shells (r, p_r, l^2, w) moved by the enclosed-charge field
//   dr/dt = p_r / gamma,   dp_r/dt = l^2 / (r^3 gamma) + m(r) / (4 pi r^2),
//   gamma = sqrt(1 + p_r^2 + l^2 / r^2),
// plus the symmetry checks used to compare radial 3-D runs against it.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "errors.hpp"
#include "fields.hpp"
#include "grid.hpp"
#include "kernel.hpp"
#include "linalg.hpp"
#include "particles.hpp"
#include "symmetry.hpp"

namespace vdarwin {

struct RadialEnsemble {
  std::vector<double> r;
  std::vector<double> pr;
  std::vector<double> ell2;
  std::vector<double> w;
  // Passive orbit-plane data for reconstructing 3-D positions: x = r (cos th e1 + sin th e2).
  std::vector<Vec3> e1;
  std::vector<Vec3> e2;
  std::vector<double> theta;
  double r_min = 1e-6;
  std::size_t reflections = 0;

  std::size_t size() const { return r.size(); }

  double total_charge() const {
    double s = 0.0;
    for (double v : w) s += v;
    return s;
  }

  double gamma(std::size_t i) const { return std::sqrt(1.0 + pr[i] * pr[i] + ell2[i] / (r[i] * r[i])); }

  Vec3 position(std::size_t i) const {
    return (e1[i] * std::cos(theta[i]) + e2[i] * std::sin(theta[i])) * r[i];
  }

  Vec3 momentum(std::size_t i) const {
    const Vec3 er = e1[i] * std::cos(theta[i]) + e2[i] * std::sin(theta[i]);
    const Vec3 et = e2[i] * std::cos(theta[i]) - e1[i] * std::sin(theta[i]);
    return er * pr[i] + et * (std::sqrt(ell2[i]) / r[i]);
  }

  // Builds shells from 3-D markers; r_min = 1e-6 R0 is the reflection radius at the origin.
  static RadialEnsemble from_particles(const ParticleEnsemble& e, double R0) {
    RadialEnsemble s;
    s.r_min = 1e-6 * R0;
    const std::size_t n = e.size();
    s.r.resize(n);
    s.pr.resize(n);
    s.ell2.resize(n);
    s.w = e.w;
    s.e1.resize(n);
    s.e2.resize(n);
    s.theta.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3& x = e.x[i];
      const Vec3& p = e.p[i];
      double r = norm(x);
      Vec3 e1 = r > 0 ? x / r : Vec3{1, 0, 0};
      if (r < s.r_min) r = s.r_min;
      Vec3 perp = p - e1 * dot(p, e1);
      if (norm(perp) < 1e-300) {
        perp = std::abs(e1.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        perp = perp - e1 * dot(perp, e1);
      }
      s.r[i] = r;
      s.pr[i] = dot(p, e1);
      s.ell2[i] = norm2(cross(x, p));
      s.e1[i] = e1;
      s.e2[i] = perp / norm(perp);
    }
    return s;
  }
};

// Enclosed-charge table: radii sorted ascending with cumulative weights.
class RadialFieldTable {
 public:
  explicit RadialFieldTable(const RadialEnsemble& e) {
    std::vector<std::size_t> order(e.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return e.r[a] < e.r[b]; });
    radii_.reserve(order.size());
    cumulative_.reserve(order.size() + 1);
    cumulative_.push_back(0.0);
    for (std::size_t i : order) {
      radii_.push_back(e.r[i]);
      cumulative_.push_back(cumulative_.back() + e.w[i]);
    }
  }

  // Charge of shells with radius strictly below r.
  double enclosed_charge(double r) const {
    const auto it = std::lower_bound(radii_.begin(), radii_.end(), r);
    return cumulative_[static_cast<std::size_t>(it - radii_.begin())];
  }

  // Outward field m(r) / (4 pi r^2).
  double field(double r) const {
    if (!(r > 0)) throw Error("radial_field: radius must be positive");
    return enclosed_charge(r) / (4.0 * std::numbers::pi * r * r);
  }

  double total() const { return cumulative_.back(); }

 private:
  std::vector<double> radii_;
  std::vector<double> cumulative_;
};

inline double radial_field(const RadialEnsemble& e, double r) { return RadialFieldTable(e).field(r); }

// One RK4 step of all shells against the enclosed-charge table frozen at the start of the step.
// Shells that would cross r_min are reflected (p_r -> -p_r) and counted in e.reflections.
inline void push_radial(RadialEnsemble& e, double dt, bool with_field = true) {
  if (!(dt > 0)) throw Error("push_radial: dt must be positive");
  const RadialFieldTable table(e);
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double l2 = e.ell2[i];
    const double l = std::sqrt(l2);
    auto rhs = [&](double r, double pr, double out[3]) {
      r = std::max(r, e.r_min);
      const double g = std::sqrt(1.0 + pr * pr + l2 / (r * r));
      out[0] = pr / g;
      out[1] = l2 / (r * r * r * g) + (with_field ? table.field(r) : 0.0);
      out[2] = l / (r * r * g);
    };
    double k1[3], k2[3], k3[3], k4[3];
    const double r0 = e.r[i], p0 = e.pr[i];
    rhs(r0, p0, k1);
    rhs(r0 + 0.5 * dt * k1[0], p0 + 0.5 * dt * k1[1], k2);
    rhs(r0 + 0.5 * dt * k2[0], p0 + 0.5 * dt * k2[1], k3);
    rhs(r0 + dt * k3[0], p0 + dt * k3[1], k4);
    double r = r0 + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
    double pr = p0 + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
    e.theta[i] += dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]);
    if (r < e.r_min) {
      r = 2.0 * e.r_min - r;
      pr = -pr;
      ++e.reflections;
    }
    e.r[i] = r;
    e.pr[i] = pr;
  }
}

// Positions reconstructed in 3-D (for deposition on the same grid as a 3-D run).
inline std::vector<Vec3> radial_positions(const RadialEnsemble& e) {
  std::vector<Vec3> x(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) x[i] = e.position(i);
  return x;
}

// Charge density of the reconstructed shells, cloud-in-cell on the template grid.
inline GridField radial_density(const RadialEnsemble& e, const GridField& tmpl, double time = 0.0) {
  return deposit_cic(radial_positions(e), 1, [&](std::size_t q, double* out) { out[0] = e.w[q]; }, tmpl, time);
}

// ||P j|| / ||j|| with the fields module's projection; 0 for j = 0.
inline double radial_projection_residual(const GridField& j, const FreeSpaceKernel& kernel) {
  const double js = sup_norm(j);
  if (js == 0.0) return 0.0;
  return sup_norm(helmholtz_project(j, kernel)) / js;
}

// Field transformed by a signed axis permutation Q: scalars f(Q^T x), vectors Q F(Q^T x),
// 9-component tensors Q M(Q^T x) Q^T. Nodes map to nodes (the reflection of node i is node n - i,
// taken periodically).
inline GridField apply_symmetry(const GridField& f, const SignedPermutation& Q) {
  if (f.components != 1 && f.components != 3 && f.components != 9)
    throw GridMismatchError("apply_symmetry: unsupported component count");
  const SignedPermutation inv = Q.inverse();
  const int n = f.n;
  GridField out = GridField::like(f, f.components);
  auto map_index = [&](int idx, int sign) { return sign > 0 ? idx : (n - idx) % n; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const int src[3] = {i, j, k};
        // (Q^T x)_a = inv.sign[a] * x[inv.perm[a]]
        int t[3];
        for (int a = 0; a < 3; ++a) t[a] = map_index(src[inv.perm[a]], inv.sign[a]);
        if (f.components == 1) {
          out.at(0, i, j, k) = f.at(0, t[0], t[1], t[2]);
        } else if (f.components == 3) {
          for (int a = 0; a < 3; ++a) out.at(a, i, j, k) = Q.sign[a] * f.at(Q.perm[a], t[0], t[1], t[2]);
        } else {
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
              out.at(3 * a + b, i, j, k) =
                  Q.sign[a] * Q.sign[b] * f.at(3 * Q.perm[a] + Q.perm[b], t[0], t[1], t[2]);
        }
      }
  return out;
}

// sup |F - Q F| / sup |F|; 0 for F = 0.
inline double symmetry_deviation(const GridField& f, const SignedPermutation& Q) {
  const double s = sup_norm(f);
  if (s == 0.0) return 0.0;
  return sup_norm(f - apply_symmetry(f, Q)) / s;
}

// Largest deviation over all 48 signed permutations.
inline double max_symmetry_deviation(const GridField& f) {
  double d = 0.0;
  for (const auto& q : all_signed_permutations()) d = std::max(d, symmetry_deviation(f, q));
  return d;
}

}  // namespace vdarwin
