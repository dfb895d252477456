#pragma once

// Marker transport along the relativistic characteristics  dX/ds = v(P),  dP/ds = E + v(P) x B,
// and transport of the variational matrices used for the Jacobian determinant check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "deposit.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "kinematics.hpp"
#include "linalg.hpp"
#include "particles.hpp"
#include "rng.hpp"

namespace vdarwin {

struct CharacteristicState {
  Vec3 x;
  Vec3 p;
  double s = 0.0;
};

struct VariationalState {
  Mat3 dX_dp;
  Mat3 dP_dp = Mat3::identity();
  Mat3 dX_dx = Mat3::identity();
  Mat3 dP_dx;

  // Initial condition at s = t.
  static VariationalState identity() { return {}; }
};

struct JacobianReport {
  double t = 0.0;
  double det_dpX = 0.0;
  double lower_bound = 0.0;
  double beta = 0.5;
  bool passed = false;
};

namespace detail {

// Relativistic Boris rotation of p about B over dt (t = dt B / (2 gamma), s = 2t / (1 + |t|^2)).
inline Vec3 boris_rotate(const Vec3& p, const Vec3& b, double dt) {
  const Vec3 t = b * (0.5 * dt / lorentz_gamma(p));
  const Vec3 s = t * (2.0 / (1.0 + norm2(t)));
  const Vec3 pp = p + cross(p, t);
  return p + cross(pp, s);
}

}  // namespace detail

// One Boris step for a single marker with fields sampled at its current position.
inline void boris_step(Vec3& x, Vec3& p, const Vec3& e, const Vec3& b, double dt) {
  Vec3 pm = p + e * (0.5 * dt);
  pm = detail::boris_rotate(pm, b, dt);
  p = pm + e * (0.5 * dt);
  x += relativistic_velocity(p) * dt;
}

// Exact inverse of boris_step given the fields at the pre-step position.
inline void boris_unstep(Vec3& x, Vec3& p, const Vec3& e, const Vec3& b, double dt) {
  x -= relativistic_velocity(p) * dt;
  Vec3 pp = p - e * (0.5 * dt);
  pp = detail::boris_rotate(pp, b, -dt);
  p = pp - e * (0.5 * dt);
}

// Advances all markers by dt. Null field pointers mean identically zero fields. Markers must stay in
// the grid box; an escape raises MarkerEscapeError with the time reached.
inline void push_markers(ParticleEnsemble& ens, const GridField* e, const GridField* b, double dt, double time = 0.0,
                         const GridField* grid = nullptr) {
  const GridField* tmpl = e ? e : (b ? b : grid);
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(ens.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t q = 0; q < count; ++q) {
    Vec3 ev, bv;
    if (e || b) {
      const CicStencil s = cic_stencil(*tmpl, ens.x[q]);
      if (e) ev = interpolate_vector(*e, s);
      if (b) bv = interpolate_vector(*b, s);
    }
    boris_step(ens.x[q], ens.p[q], ev, bv, dt);
  }
  if (tmpl) require_inside(ens.x, *tmpl, time + dt);
}

// Reverses push_markers: fields must be the ones used for the forward step; they are sampled at the
// back-drifted position, which equals the pre-step position up to round-off.
inline void unpush_markers(ParticleEnsemble& ens, const GridField* e, const GridField* b, double dt) {
  const GridField* tmpl = e ? e : b;
  for (std::size_t q = 0; q < ens.size(); ++q) {
    Vec3 x0 = ens.x[q] - relativistic_velocity(ens.p[q]) * dt;
    Vec3 ev, bv;
    if (tmpl) {
      const CicStencil s = cic_stencil(*tmpl, x0);
      if (e) ev = interpolate_vector(*e, s);
      if (b) bv = interpolate_vector(*b, s);
    }
    boris_unstep(ens.x[q], ens.p[q], ev, bv, dt);
  }
}

// Field data along one characteristic, recorded at each time level.
struct TrajectorySample {
  double s = 0.0;
  Vec3 x, p;
  Vec3 e, b;
  Mat3 grad_e;  // (i, l) = d_l E_i
  Mat3 grad_b;  // (i, l) = d_l B_i
};

namespace detail {

struct VariationalRates {
  Mat3 dX_dp, dP_dp, dX_dx, dP_dx;
};

inline TrajectorySample lerp(const TrajectorySample& a, const TrajectorySample& b, double s) {
  if (b.s == a.s) return a;
  const double u = (s - a.s) / (b.s - a.s);
  TrajectorySample r;
  r.s = s;
  r.x = a.x * (1 - u) + b.x * u;
  r.p = a.p * (1 - u) + b.p * u;
  r.e = a.e * (1 - u) + b.e * u;
  r.b = a.b * (1 - u) + b.b * u;
  r.grad_e = a.grad_e * (1 - u) + b.grad_e * u;
  r.grad_b = a.grad_b * (1 - u) + b.grad_b * u;
  return r;
}

// Linearised characteristic system: d(dX)/ds = Dv(P) dP, d(dP)/ds = K_x dX + K_p dP with
// K_x = grad E + [v]x grad B and K_p = -[B]x Dv(P).
inline VariationalRates variational_rates(const TrajectorySample& c, const VariationalState& y) {
  const Mat3 dv = velocity_jacobian(c.p);
  const Vec3 v = relativistic_velocity(c.p);
  const Mat3 kx = c.grad_e + cross_matrix(v) * c.grad_b;
  const Mat3 kp = -1.0 * (cross_matrix(c.b) * dv);
  return {dv * y.dP_dp, kx * y.dX_dp + kp * y.dP_dp, dv * y.dP_dx, kx * y.dX_dx + kp * y.dP_dx};
}

inline VariationalState axpy(const VariationalState& y, const VariationalRates& k, double h) {
  return {y.dX_dp + k.dX_dp * h, y.dP_dp + k.dP_dp * h, y.dX_dx + k.dX_dx * h, y.dP_dx + k.dP_dx * h};
}

}  // namespace detail

// Transports the variational matrices from s = t (last sample) back to s = 0 (first sample) with
// classical RK4, one step per sample interval, coefficients interpolated linearly in s.
inline VariationalState integrate_variational(const VariationalState& initial,
                                              const std::vector<TrajectorySample>& trajectory) {
  VariationalState y = initial;
  if (trajectory.size() < 2) return y;
  for (std::size_t k = trajectory.size() - 1; k > 0; --k) {
    const auto& hi = trajectory[k];
    const auto& lo = trajectory[k - 1];
    const double h = lo.s - hi.s;  // negative: backward in s
    const auto mid = detail::lerp(lo, hi, 0.5 * (lo.s + hi.s));
    const auto k1 = detail::variational_rates(hi, y);
    const auto k2 = detail::variational_rates(mid, detail::axpy(y, k1, 0.5 * h));
    const auto k3 = detail::variational_rates(mid, detail::axpy(y, k2, 0.5 * h));
    const auto k4 = detail::variational_rates(lo, detail::axpy(y, k3, h));
    y.dX_dp += (k1.dX_dp + 2.0 * k2.dX_dp + 2.0 * k3.dX_dp + k4.dX_dp) * (h / 6.0);
    y.dP_dp += (k1.dP_dp + 2.0 * k2.dP_dp + 2.0 * k3.dP_dp + k4.dP_dp) * (h / 6.0);
    y.dX_dx += (k1.dX_dx + 2.0 * k2.dX_dx + 2.0 * k3.dX_dx + k4.dX_dx) * (h / 6.0);
    y.dP_dx += (k1.dP_dx + 2.0 * k2.dP_dx + 2.0 * k3.dP_dx + k4.dP_dx) * (h / 6.0);
  }
  return y;
}

// Compares |det dX/dp (0, t)| against the floor (1 - beta)^3 t^3 (1 + |p|^2)^(-5/2), p the momentum at t.
inline JacobianReport jacobian_determinant_check(const VariationalState& y, double t, const Vec3& p, double beta) {
  JacobianReport r;
  r.t = t;
  r.beta = beta;
  r.det_dpX = determinant(y.dX_dp);
  r.lower_bound = std::pow(1.0 - beta, 3) * t * t * t * std::pow(1.0 + norm2(p), -2.5);
  r.passed = std::abs(r.det_dpX) >= r.lower_bound;
  return r;
}

// Picks `count` distinct marker indices from the named stream "tracked-markers", in increasing order.
inline std::vector<std::size_t> choose_tracked_markers(std::size_t population, int count, std::uint64_t seed) {
  std::vector<std::size_t> idx(population);
  for (std::size_t i = 0; i < population; ++i) idx[i] = i;
  const std::size_t k = std::min<std::size_t>(population, static_cast<std::size_t>(std::max(count, 0)));
  RandomStream rs(seed, "tracked-markers");
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rs.below(population - i)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Records field data along a subsample of markers during a run.
class VariationalTracker {
 public:
  VariationalTracker() = default;
  explicit VariationalTracker(std::vector<std::size_t> markers)
      : markers_(std::move(markers)), trajectories_(markers_.size()) {}

  const std::vector<std::size_t>& markers() const { return markers_; }
  const std::vector<TrajectorySample>& trajectory(std::size_t i) const { return trajectories_[i]; }

  // Null pointers mean zero fields (and zero gradients).
  void record(const ParticleEnsemble& ens, double s, const GridField* e, const GridField* b,
              const GridField* grad_e, const GridField* grad_b) {
    for (std::size_t i = 0; i < markers_.size(); ++i) {
      const std::size_t q = markers_[i];
      TrajectorySample smp;
      smp.s = s;
      smp.x = ens.x[q];
      smp.p = ens.p[q];
      const GridField* any = e ? e : (b ? b : (grad_e ? grad_e : grad_b));
      if (any) {
        const CicStencil st = cic_stencil(*any, ens.x[q]);
        if (e) smp.e = interpolate_vector(*e, st);
        if (b) smp.b = interpolate_vector(*b, st);
        if (grad_e) smp.grad_e = interpolate_matrix(*grad_e, st);
        if (grad_b) smp.grad_b = interpolate_matrix(*grad_b, st);
      }
      trajectories_[i].push_back(smp);
    }
  }

  // Integrates every tracked characteristic from its last recorded time back to s = 0.
  std::vector<JacobianReport> reports(double beta) const {
    std::vector<JacobianReport> out;
    for (const auto& tr : trajectories_) {
      if (tr.empty()) continue;
      const auto y = integrate_variational(VariationalState::identity(), tr);
      out.push_back(jacobian_determinant_check(y, tr.back().s - tr.front().s, tr.back().p, beta));
    }
    return out;
  }

  std::vector<VariationalState> final_states() const {
    std::vector<VariationalState> out;
    for (const auto& tr : trajectories_) out.push_back(integrate_variational(VariationalState::identity(), tr));
    return out;
  }

 private:
  std::vector<std::size_t> markers_;
  std::vector<std::vector<TrajectorySample>> trajectories_;
};

}  // namespace vdarwin
