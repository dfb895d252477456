#pragma once

// Weighted marker representation of the phase-space density and its deterministic sampling.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "config.hpp"
#include "initial_datum.hpp"
#include "linalg.hpp"
#include "rng.hpp"
#include "symmetry.hpp"

namespace vdarwin {

struct ParticleEnsemble {
  std::vector<Vec3> x;
  std::vector<Vec3> p;
  std::vector<double> w;        // phase-space volume times f0
  std::vector<double> f0;       // f0 at the initial point; constant along characteristics

  std::size_t size() const { return w.size(); }

  void reserve(std::size_t n) {
    x.reserve(n);
    p.reserve(n);
    w.reserve(n);
    f0.reserve(n);
  }

  void push_back(const Vec3& xi, const Vec3& pi, double wi, double fi) {
    x.push_back(xi);
    p.push_back(pi);
    w.push_back(wi);
    f0.push_back(fi);
  }

  // Sum of weights in index order (fixed order keeps the value bit-stable).
  double total_charge() const {
    double s = 0.0;
    for (double v : w) s += v;
    return s;
  }
};

// Additive recurrence (Kronecker) sequence in 6 dimensions with generator 1/phi^k, where phi is
// the real root of x^7 = x + 1; a seeded random shift decorrelates runs with different seeds.
class KroneckerSequence6 {
 public:
  explicit KroneckerSequence6(std::array<double, 6> shift) : shift_(shift) {
    double phi = 1.5;
    for (int i = 0; i < 100; ++i) phi -= (std::pow(phi, 7) - phi - 1.0) / (7.0 * std::pow(phi, 6) - 1.0);
    double a = 1.0;
    for (auto& alpha : alpha_) alpha = (a /= phi);
  }

  std::array<double, 6> operator()(std::uint64_t k) const {
    std::array<double, 6> u{};
    const double kk = static_cast<double>(k + 1);
    for (int i = 0; i < 6; ++i) {
      const double v = shift_[i] + kk * alpha_[i];
      u[i] = v - std::floor(v);
    }
    return u;
  }

 private:
  std::array<double, 6> shift_;
  std::array<double, 6> alpha_{};
};

// Quasi-uniform markers over the support box [-R0,R0]^3 x [-P0,P0]^3; candidates with f0 = 0 are
// rejected and each kept marker carries w = f0 * (box volume / candidates drawn).
// With `symmetrize`, each accepted point contributes its full orbit under the 48 signed axis
// permutations (applied jointly to x and p), each image carrying 1/48 of the weight.
inline ParticleEnsemble sample_particles(const InitialDatum& f0, const SimConfig& config) {
  if (config.particle_count < 1) throw ConfigError("particle_count must be >= 1");
  RandomStream shift_stream(config.seed, "sampling-shift");
  std::array<double, 6> shift{};
  for (auto& s : shift) s = shift_stream.uniform();
  const KroneckerSequence6 seq(shift);

  const auto& group = all_signed_permutations();
  const std::size_t images = config.symmetrize ? group.size() : 1;
  const std::size_t wanted = (static_cast<std::size_t>(config.particle_count) + images - 1) / images;

  std::vector<std::array<double, 6>> accepted;
  std::vector<double> values;
  accepted.reserve(wanted);
  values.reserve(wanted);
  std::uint64_t candidates = 0;
  while (accepted.size() < wanted) {
    const auto u = seq(candidates++);
    const Vec3 x{f0.R0 * (2 * u[0] - 1), f0.R0 * (2 * u[1] - 1), f0.R0 * (2 * u[2] - 1)};
    const Vec3 p{f0.P0 * (2 * u[3] - 1), f0.P0 * (2 * u[4] - 1), f0.P0 * (2 * u[5] - 1)};
    const double v = f0.value(x, p);
    if (v > 0.0) {
      accepted.push_back({x.x, x.y, x.z, p.x, p.y, p.z});
      values.push_back(v);
    }
  }
  const double box_volume = std::pow(2 * f0.R0, 3) * std::pow(2 * f0.P0, 3);
  const double cell = box_volume / static_cast<double>(candidates);

  ParticleEnsemble e;
  e.reserve(accepted.size() * images);
  for (std::size_t k = 0; k < accepted.size(); ++k) {
    const Vec3 x{accepted[k][0], accepted[k][1], accepted[k][2]};
    const Vec3 p{accepted[k][3], accepted[k][4], accepted[k][5]};
    const double w = values[k] * cell / static_cast<double>(images);
    if (images == 1)
      e.push_back(x, p, w, values[k]);
    else
      for (const auto& q : group) e.push_back(q.apply(x), q.apply(p), w, values[k]);
  }
  return e;
}

}  // namespace vdarwin
