#pragma once

// Self-checks exposed through the command line: the projection suite, the constant-forcing Gronwall
// case, and the Boris gyration period.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fields.hpp"
#include "grid.hpp"
#include "gronwall.hpp"
#include "kernel.hpp"
#include "kinematics.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "transport.hpp"

namespace vdarwin {

// Random smooth, numerically compactly supported test data on the box [-extent, extent]^3: sums of
// modulated Gaussians with widths in [2.4 h, 0.1 extent] centred within 0.15 extent, so that both the
// samples at the box faces and the spectrum at the Nyquist frequency are below round-off.
struct GaussianPacket {
  Vec3 centre;
  double width = 1.0;
  Vec3 wave;
  double phase = 0.0;
  Vec3 amplitude;  // vector amplitude (first component used for scalars)
};

inline std::vector<GaussianPacket> random_packets(const GridField& tmpl, RandomStream& rng, int count = 3) {
  const double E = tmpl.extent, h = tmpl.spacing();
  const double wmin = 2.4 * h, wmax = std::max(wmin, 0.1 * E);
  std::vector<GaussianPacket> out(count);
  for (auto& g : out) {
    g.centre = {rng.uniform(-0.15, 0.15) * E, rng.uniform(-0.15, 0.15) * E, rng.uniform(-0.15, 0.15) * E};
    g.width = rng.uniform(wmin, wmax);
    const double kmax = 0.5 / g.width;
    g.wave = {rng.uniform(-kmax, kmax), rng.uniform(-kmax, kmax), rng.uniform(-kmax, kmax)};
    g.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    g.amplitude = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
  }
  return out;
}

inline double packet_value(const GaussianPacket& g, const Vec3& x) {
  const Vec3 d = x - g.centre;
  return std::exp(-0.5 * norm2(d) / (g.width * g.width)) * std::cos(dot(g.wave, x) + g.phase);
}

inline Vec3 packet_gradient(const GaussianPacket& g, const Vec3& x) {
  const Vec3 d = x - g.centre;
  const double env = std::exp(-0.5 * norm2(d) / (g.width * g.width));
  const double arg = dot(g.wave, x) + g.phase;
  return d * (-env * std::cos(arg) / (g.width * g.width)) - g.wave * (env * std::sin(arg));
}

inline GridField random_vector_field(const GridField& tmpl, RandomStream& rng) {
  const auto packets = random_packets(tmpl, rng);
  GridField f = GridField::like(tmpl, 3);
  for (int i = 0; i < f.n; ++i)
    for (int j = 0; j < f.n; ++j)
      for (int k = 0; k < f.n; ++k) {
        const Vec3 x = f.position(i, j, k);
        Vec3 v;
        for (const auto& g : packets) v += g.amplitude * packet_value(g, x);
        for (int c = 0; c < 3; ++c) f.at(c, i, j, k) = v[c];
      }
  return f;
}

// Analytic gradient of a random scalar packet sum.
inline GridField random_gradient_field(const GridField& tmpl, RandomStream& rng) {
  const auto packets = random_packets(tmpl, rng);
  GridField f = GridField::like(tmpl, 3);
  for (int i = 0; i < f.n; ++i)
    for (int j = 0; j < f.n; ++j)
      for (int k = 0; k < f.n; ++k) {
        const Vec3 x = f.position(i, j, k);
        Vec3 v;
        for (const auto& g : packets) v += packet_gradient(g, x) * g.amplitude.x;
        for (int c = 0; c < 3; ++c) f.at(c, i, j, k) = v[c];
      }
  return f;
}

struct ProjectionSuiteReport {
  int grid = 0;
  int fields = 0;
  double worst_divergence = 0.0;   // max ||div P F|| / ||F||
  double worst_idempotence = 0.0;  // max ||P(P F) - P F|| / ||F||
  double worst_gradient = 0.0;     // max ||P grad g|| / ||grad g||
};

// Projects `count` random fields (and as many random gradients) on an n^3 grid with the given padding.
// Below n = 48 the packets cannot be both resolved (width >= 2.4 h) and negligible at the box faces
// (width <= 0.1 extent), so coarser grids are rejected rather than reported as failures.
inline ProjectionSuiteReport run_projection_suite(int n, int count, std::uint64_t seed = 1, int pad = 2) {
  if (n < 48) throw ConfigError("projection suite needs at least 48 nodes per axis (got " + std::to_string(n) + ")");
  const FreeSpaceKernel kernel(n, 1.0, pad);
  const GridField tmpl(1.0, n, 1, pad);
  RandomStream rng(seed, "projection-suite");
  ProjectionSuiteReport rep;
  rep.grid = n;
  rep.fields = count;
  for (int t = 0; t < count; ++t) {
    const GridField F = random_vector_field(tmpl, rng);
    const double fs = sup_norm(F);
    const GridField PF = helmholtz_project(F, kernel);
    rep.worst_divergence = std::max(rep.worst_divergence, sup_norm(spectral_divergence(PF)) / fs);
    rep.worst_idempotence = std::max(rep.worst_idempotence, sup_norm(helmholtz_project(PF, kernel) - PF) / fs);
    const GridField G = random_gradient_field(tmpl, rng);
    rep.worst_gradient = std::max(rep.worst_gradient, sup_norm(helmholtz_project(G, kernel)) / sup_norm(G));
  }
  return rep;
}

// Constant c1, c2 = c3 = 0: xi(s) = c1 (t - s)^2 / 2 and the bound is c1 (t^2 - s^2) / 2, so the
// ratio is (t - s) / (t + s): below one on (0, t] and equal to one at s = 0.
struct ClosedFormGronwallReport {
  double max_ratio = 0.0;
  double argmax = 0.0;
  double equality_gap = 0.0;  // |ratio(0) - 1|
  bool bounded = false;       // ratio <= 1 (+1e-9) everywhere
};

inline ClosedFormGronwallReport closed_form_gronwall(double c1 = 1.0, double t = 2.0, int steps = 2000) {
  const GronwallProblem pb(t, PiecewiseLinear::constant(c1, t), PiecewiseLinear::constant(0.0, t),
                           PiecewiseLinear::constant(0.0, t));
  RandomStream unused(0, "gronwall-closed-form");
  const auto tr = integrate_gronwall_forcing(pb, ForcingPattern::plus, steps, unused);
  ClosedFormGronwallReport rep;
  rep.bounded = true;
  for (std::size_t i = 0; i < tr.s.size(); ++i) {
    const double b = pb.bound(tr.s[i]);
    if (!(b > 0)) continue;
    const double ratio = std::abs(tr.xi[i]) / b;
    if (ratio > rep.max_ratio) rep.max_ratio = ratio, rep.argmax = tr.s[i];
    if (ratio > 1.0 + 1e-9) rep.bounded = false;
  }
  rep.equality_gap = std::abs(std::abs(tr.xi.back()) / pb.bound(tr.s.back()) - 1.0);
  return rep;
}

// Boris gyration in a uniform magnetic field: the measured period (from the accumulated rotation angle
// of p over whole turns) against the closed form 2 pi gamma / |B|.
struct GyroReport {
  double dt = 0.0;
  double measured = 0.0;
  double exact = 0.0;
  double relative_error = 0.0;
};

inline GyroReport boris_gyro_period(double p_perp, double bz, double dt, int turns = 4) {
  GyroReport r;
  r.dt = dt;
  const Vec3 b{0, 0, bz};
  const double gamma = std::sqrt(1.0 + p_perp * p_perp);
  r.exact = 2.0 * std::numbers::pi * gamma / std::abs(bz);
  Vec3 x, p{p_perp, 0, 0};
  double angle = 0.0, prev = 0.0, time = 0.0;
  const double target = 2.0 * std::numbers::pi * turns;
  while (true) {
    boris_step(x, p, {}, b, dt);
    double a = std::atan2(-p.y * (bz > 0 ? 1 : -1), p.x);
    double d = a - prev;
    while (d < -std::numbers::pi) d += 2 * std::numbers::pi;
    while (d > std::numbers::pi) d -= 2 * std::numbers::pi;
    if (angle + d >= target) {
      // Linear interpolation of the crossing inside the last step.
      time += dt * (target - angle) / d;
      break;
    }
    angle += d;
    prev = a;
    time += dt;
  }
  r.measured = time / turns;
  r.relative_error = std::abs(r.measured - r.exact) / r.exact;
  return r;
}

}  // namespace vdarwin
