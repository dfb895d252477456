#pragma once

// Elliptic Darwin field solves on free space:
//   Phi = -G * rho,             E_L = grad Phi                  (Laplace Phi = rho)
//   A   = G * j - grad(B * div j),  B = curl A                  (Laplace A = -P j)
//   E_T = -(G * S - grad(B * div S)),  S = G1 + G2              (Laplace E_T = P S)
// with G = 1/(4 pi r), B = r/(8 pi), G1 = -div M (row-wise) and G2 the Lorentz-force moment.

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "deposit.hpp"
#include "errors.hpp"
#include "fft.hpp"
#include "grid.hpp"
#include "kernel.hpp"
#include "kinematics.hpp"
#include "particles.hpp"
#include "spectral.hpp"

namespace vdarwin {

// Where kernel-based solves return their result: the unpadded box, or the whole padded transform grid
// as a periodic field (pad_factor 1), on which spectral derivatives are exactly consistent.
enum class Output { window, padded };

struct FieldState {
  GridField phi;
  GridField a;
  GridField e_l;
  GridField e_t;
  GridField b;
  // Jacobians (component 3*i + l = d_l F_i), computed from the field spectra when requested.
  GridField grad_el;
  GridField grad_et;
  GridField grad_b;
  int fixed_point_iters = 0;
  double fixed_point_residual = 0.0;
  std::vector<double> residual_history;

  static FieldState zeros(const GridField& tmpl) {
    FieldState s;
    s.phi = GridField::like(tmpl, 1);
    s.a = GridField::like(tmpl, 3);
    s.e_l = GridField::like(tmpl, 3);
    s.e_t = GridField::like(tmpl, 3);
    s.b = GridField::like(tmpl, 3);
    return s;
  }

  GridField total_electric() const { return e_l + e_t; }
};

struct DarwinSources {
  GridField g1;
  GridField g2;
  std::string k_field_snapshot;  // which E and B entered the Lorentz force of g2
};

namespace detail {

inline std::vector<Spectrum> forward_components(const SpectralGrid& sg, const GridField& f) {
  std::vector<Spectrum> s;
  s.reserve(f.components);
  for (int c = 0; c < f.components; ++c) s.push_back(sg.forward(f.component(c)));
  return s;
}

inline GridField inverse_components(const SpectralGrid& sg, std::vector<Spectrum> s, const GridField& tmpl) {
  GridField out = GridField::like(tmpl, static_cast<int>(s.size()));
  for (std::size_t c = 0; c < s.size(); ++c) sg.inverse(std::move(s[c]), out.component(static_cast<int>(c)));
  return out;
}

inline GridField inverse_padded(const SpectralGrid& sg, std::vector<Spectrum> s, const GridField& tmpl) {
  GridField out(tmpl.extent * tmpl.pad_factor, sg.N(), static_cast<int>(s.size()), 1);
  for (std::size_t c = 0; c < s.size(); ++c) {
    auto full = sg.inverse_full(std::move(s[c]));
    std::copy(full.begin(), full.end(), out.component(static_cast<int>(c)));
  }
  return out;
}

inline GridField inverse_to(Output where, const SpectralGrid& sg, std::vector<Spectrum> s, const GridField& tmpl) {
  return where == Output::padded ? inverse_padded(sg, std::move(s), tmpl) : inverse_components(sg, std::move(s), tmpl);
}

// Jacobian field from a vector spectrum: component 3*i + l holds d_l F_i.
inline GridField jacobian_from_spectrum(const SpectralGrid& sg, const std::vector<Spectrum>& s, const GridField& tmpl,
                                        Output where = Output::window) {
  std::vector<Spectrum> d(9, Spectrum(sg.spectrum_size()));
  sg.for_each_mode([&](std::size_t q, const Vec3& k) {
    for (int i = 0; i < 3; ++i)
      for (int l = 0; l < 3; ++l) d[3 * i + l][q] = I * k[l] * s[i][q];
  });
  return inverse_to(where, sg, std::move(d), tmpl);
}

// Applies sign * (G * F - grad (B * div F)) to a vector spectrum in place, written as
// -sign * curl curl (B * F): inside the exact ball the two agree (Laplace B = G there), and the
// curl-curl form is divergence-free under the spectral divergence for any input, including rough
// deposits.
inline void apply_solenoidal_inverse(const FreeSpaceKernel& kernel, std::vector<Spectrum>& s, double sign) {
  kernel.grid().for_each_mode([&](std::size_t q, const Vec3& k) {
    const std::complex<double> kdot = k.x * s[0][q] + k.y * s[1][q] + k.z * s[2][q];
    const double k2 = norm2(k), bh = -sign * kernel.biharmonic(q);
    for (int a = 0; a < 3; ++a) s[a][q] = bh * (k2 * s[a][q] - k[a] * kdot);
  });
}

// Largest sample on the outer faces of the box, relative to the largest sample overall.
inline double boundary_fraction(const GridField& f) {
  const double total = max_abs(f);
  if (total == 0.0) return 0.0;
  double edge = 0.0;
  const int n = f.n;
  for (int c = 0; c < f.components; ++c)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          if (i != 0 && j != 0 && k != 0 && i != n - 1 && j != n - 1 && k != n - 1) continue;
          edge = std::max(edge, std::abs(f.at(c, i, j, k)));
        }
  return edge / total;
}

}  // namespace detail

// Solves Laplace Phi = source with Phi -> 0 at infinity.
inline GridField solve_poisson_free_space(const GridField& source, const FreeSpaceKernel& kernel) {
  require_components(source, 1, "solve_poisson_free_space");
  kernel.require_matches(source, "solve_poisson_free_space");
  const auto& sg = kernel.grid();
  Spectrum s = sg.forward(source.component(0));
  sg.for_each_mode([&](std::size_t q, const Vec3&) { s[q] *= -kernel.green(q); });
  GridField out = GridField::like(source, 1);
  sg.inverse(std::move(s), out.component(0));
  return out;
}

// Same solve, returning the whole padded grid as a periodic field (pad_factor 1, extent pad*extent).
inline GridField solve_poisson_free_space_padded(const GridField& source, const FreeSpaceKernel& kernel) {
  require_components(source, 1, "solve_poisson_free_space_padded");
  kernel.require_matches(source, "solve_poisson_free_space_padded");
  const auto& sg = kernel.grid();
  Spectrum s = sg.forward(source.component(0));
  sg.for_each_mode([&](std::size_t q, const Vec3&) { s[q] *= -kernel.green(q); });
  GridField out(source.extent * source.pad_factor, sg.N(), 1, 1);
  out.values = sg.inverse_full(std::move(s));
  return out;
}

// Divergence-free projection P F = F - k (k . F)/|k|^2, applied as an exact multiplier on the periodic
// transform grid. A zero-padded input (pad_factor >= 2) is projected on the padded grid and the whole
// padded grid is returned as a periodic field (pad_factor 1, extent pad*extent), because P F is not
// compactly supported. A periodic input (pad_factor 1) is projected on its own grid.
inline GridField helmholtz_project(const GridField& field, const FreeSpaceKernel& kernel) {
  require_components(field, 3, "helmholtz_project");
  const SpectralGrid* sg = nullptr;
  GridField out;
  if (field.pad_factor >= 2) {
    kernel.require_matches(field, "helmholtz_project");
    sg = &kernel.grid();
    const double frac = detail::boundary_fraction(field);
    if (frac > 1e-8)
      log_warning("helmholtz_project: input is not compactly supported in the box (boundary/max = " +
                  std::to_string(frac) + ")");
    out = GridField(field.extent * field.pad_factor, sg->N(), 3, 1);
  } else {
    sg = &SpectralGrid::for_field(field);
    out = GridField::like(field, 3);
  }
  auto s = detail::forward_components(*sg, field);
  sg->for_each_mode([&](std::size_t q, const Vec3& k) {
    const double k2 = norm2(k);
    if (k2 == 0.0) return;
    const std::complex<double> kdot = (k.x * s[0][q] + k.y * s[1][q] + k.z * s[2][q]) / k2;
    for (int a = 0; a < 3; ++a) s[a][q] -= k[a] * kdot;
  });
  for (int c = 0; c < 3; ++c) {
    auto full = sg->inverse_full(std::move(s[c]));
    std::copy(full.begin(), full.end(), out.component(c));
  }
  return out;
}

struct ElectrostaticFields {
  GridField phi;
  GridField e_l;
  GridField grad_el;  // filled when requested
};

inline ElectrostaticFields compute_electrostatic(const Moments& moments, const FreeSpaceKernel& kernel,
                                                 Output where = Output::window, bool with_gradient = false) {
  kernel.require_matches(moments.rho, "compute_electrostatic");
  const auto& sg = kernel.grid();
  Spectrum phi = sg.forward(moments.rho.component(0));
  sg.for_each_mode([&](std::size_t q, const Vec3&) { phi[q] *= -kernel.green(q); });
  std::vector<Spectrum> e(3, Spectrum(sg.spectrum_size()));
  sg.for_each_mode([&](std::size_t q, const Vec3& k) {
    for (int a = 0; a < 3; ++a) e[a][q] = detail::I * k[a] * phi[q];
  });
  ElectrostaticFields out;
  if (with_gradient) out.grad_el = detail::jacobian_from_spectrum(sg, e, moments.rho, where);
  out.phi = detail::inverse_to(where, sg, {std::move(phi)}, moments.rho);
  out.e_l = detail::inverse_to(where, sg, std::move(e), moments.rho);
  return out;
}

struct MagneticFields {
  GridField a;
  GridField b;
  GridField grad_b;  // filled when requested
};

inline MagneticFields compute_vector_potential(const Moments& moments, const FreeSpaceKernel& kernel,
                                               Output where = Output::window, bool with_gradient = false) {
  kernel.require_matches(moments.j, "compute_vector_potential");
  const auto& sg = kernel.grid();
  auto a = detail::forward_components(sg, moments.j);
  detail::apply_solenoidal_inverse(kernel, a, 1.0);
  std::vector<Spectrum> b(3, Spectrum(sg.spectrum_size()));
  sg.for_each_mode([&](std::size_t q, const Vec3& k) {
    for (int c = 0; c < 3; ++c) {
      const int d = (c + 1) % 3, e = (c + 2) % 3;
      b[c][q] = detail::I * (k[d] * a[e][q] - k[e] * a[d][q]);
    }
  });
  MagneticFields out;
  if (with_gradient) out.grad_b = detail::jacobian_from_spectrum(sg, b, moments.j, where);
  out.b = detail::inverse_to(where, sg, std::move(b), moments.j);
  out.a = detail::inverse_to(where, sg, std::move(a), moments.j);
  return out;
}

namespace detail {

// Spectrum of G1 = -div M (row-wise) from the symmetric tensor M.
inline std::vector<Spectrum> g1_spectrum(const SpectralGrid& sg, const GridField& M) {
  require_components(M, 9, "compute_G1");
  std::vector<Spectrum> m(9);
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b) {
      m[3 * a + b] = sg.forward(M.component(3 * a + b));
      if (b != a) m[3 * b + a] = m[3 * a + b];
    }
  std::vector<Spectrum> g(3, Spectrum(sg.spectrum_size()));
  sg.for_each_mode([&](std::size_t q, const Vec3& k) {
    for (int a = 0; a < 3; ++a)
      g[a][q] = -I * (k.x * m[3 * a][q] + k.y * m[3 * a + 1][q] + k.z * m[3 * a + 2][q]);
  });
  return g;
}

}  // namespace detail

inline GridField compute_G1(const Moments& moments) {
  const auto& sg = SpectralGrid::for_field(moments.M);
  return detail::inverse_components(sg, detail::g1_spectrum(sg, moments.M), moments.M);
}

namespace detail {

// Per-marker G2 integrand (w / gamma) (K - v (v . K)).
inline Vec3 g2_contribution(const Vec3& p, double w, const Vec3& k) {
  const double g = lorentz_gamma(p);
  const Vec3 v = p / g;
  return (w / g) * (k - v * dot(v, k));
}

}  // namespace detail

// G2 deposited cloud-in-cell from the Lorentz force K = E + v x B at each marker.
inline GridField compute_G2(const ParticleEnsemble& ensemble, const GridField& e_total, const GridField& b,
                            const GridField& tmpl, double time = 0.0) {
  require_components(e_total, 3, "compute_G2");
  require_components(b, 3, "compute_G2");
  require_same_layout(e_total, tmpl, "compute_G2");
  require_same_layout(b, tmpl, "compute_G2");
  require_inside(ensemble.x, tmpl, time);
  return deposit_cic(
      ensemble.x, 3,
      [&](std::size_t q, double* out) {
        const CicStencil s = cic_stencil(tmpl, ensemble.x[q]);
        const Vec3 k = lorentz_force(ensemble.p[q], interpolate_vector(e_total, s), interpolate_vector(b, s));
        const Vec3 c = detail::g2_contribution(ensemble.p[q], ensemble.w[q], k);
        out[0] = c.x;
        out[1] = c.y;
        out[2] = c.z;
      },
      tmpl, time);
}

struct TransverseSolution {
  GridField e_t;
  GridField e_t_padded;  // filled when requested
  GridField grad_et;     // filled when requested
  int iters = 0;
  double residual = 0.0;
  std::vector<double> history;
  GridField g1;
  GridField g2;
};

// Picard iteration for E_T: G2 is assembled with E = E_L + E_T^(k) and the given B, then
// Laplace E_T^(k+1) = P(G1 + G2^(k)) is solved on free space. Stops when
// sup|E_T^(k+1) - E_T^(k)| <= tol * sup|E_T^(k+1)|.
inline TransverseSolution solve_transverse_field(const Moments& moments, const ParticleEnsemble& ensemble,
                                                 const GridField& e_l, const GridField& b,
                                                 const FreeSpaceKernel& kernel, double tol, int max_iter,
                                                 const GridField* initial_guess = nullptr, double time = 0.0,
                                                 bool with_gradient = false, bool with_padded = false) {
  kernel.require_matches(e_l, "solve_transverse_field");
  kernel.require_matches(b, "solve_transverse_field");
  kernel.require_matches(moments.M, "solve_transverse_field");
  const auto& sg = kernel.grid();
  const GridField& tmpl = e_l;
  require_inside(ensemble.x, tmpl, time);

  const auto g1_hat = detail::g1_spectrum(sg, moments.M);

  // Marker-local quantities that do not change across iterations.
  const std::size_t count = ensemble.size();
  std::vector<CicStencil> stencils(count);
  std::vector<Vec3> fixed_force(count);
  for (std::size_t q = 0; q < count; ++q) {
    stencils[q] = cic_stencil(tmpl, ensemble.x[q]);
    fixed_force[q] = lorentz_force(ensemble.p[q], interpolate_vector(e_l, stencils[q]), interpolate_vector(b, stencils[q]));
  }

  TransverseSolution sol;
  sol.e_t = initial_guess ? *initial_guess : GridField::like(tmpl, 3);
  require_same_layout(sol.e_t, tmpl, "solve_transverse_field initial guess");
  for (int it = 1; it <= max_iter; ++it) {
    GridField g2 = deposit_cic(
        ensemble.x, 3,
        [&](std::size_t q, double* out) {
          const Vec3 k = fixed_force[q] + interpolate_vector(sol.e_t, stencils[q]);
          const Vec3 c = detail::g2_contribution(ensemble.p[q], ensemble.w[q], k);
          out[0] = c.x;
          out[1] = c.y;
          out[2] = c.z;
        },
        tmpl, time);
    auto s = detail::forward_components(sg, g2);
    for (int a = 0; a < 3; ++a)
      for (std::size_t q = 0; q < s[a].size(); ++q) s[a][q] += g1_hat[a][q];
    detail::apply_solenoidal_inverse(kernel, s, -1.0);
    GridField next = detail::inverse_components(sg, s, tmpl);

    const double change = sup_norm(next - sol.e_t);
    const double size = sup_norm(next);
    const double res = size > 0.0 ? change / size : (change > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    sol.history.push_back(res);
    sol.e_t = std::move(next);
    sol.g2 = std::move(g2);
    sol.iters = it;
    sol.residual = res;
    if (res <= tol) {
      sol.g1 = detail::inverse_components(sg, std::vector<Spectrum>(g1_hat), tmpl);
      if (with_gradient) sol.grad_et = detail::jacobian_from_spectrum(sg, s, tmpl);
      if (with_padded) sol.e_t_padded = detail::inverse_padded(sg, std::move(s), tmpl);
      return sol;
    }
  }
  throw FixedPointDivergenceError(sol.history);
}

// Free-space Helmholtz projection evaluated through the kernels: P F = F + grad(G * div F).
// Exact on the ball of radius kernel.exact_radius() for sources inside it.
inline GridField free_space_project(const GridField& field, const FreeSpaceKernel& kernel) {
  require_components(field, 3, "free_space_project");
  kernel.require_matches(field, "free_space_project");
  const auto& sg = kernel.grid();
  auto s = detail::forward_components(sg, field);
  sg.for_each_mode([&](std::size_t q, const Vec3& k) {
    const std::complex<double> div = detail::I * (k.x * s[0][q] + k.y * s[1][q] + k.z * s[2][q]);
    const std::complex<double> psi = kernel.green(q) * div;
    for (int a = 0; a < 3; ++a) s[a][q] += detail::I * k[a] * psi;
  });
  return detail::inverse_components(sg, std::move(s), field);
}

// Field solve for one time level, dispatched on the run mode.
inline FieldState solve_fields(const Moments& moments, const ParticleEnsemble& ensemble, const FreeSpaceKernel& kernel,
                               Mode mode, double tol, int max_iter, const GridField* et_guess = nullptr,
                               double time = 0.0, bool with_gradients = true) {
  FieldState st = FieldState::zeros(moments.rho);
  if (with_gradients) {
    st.grad_el = GridField::like(moments.rho, 9);
    st.grad_et = GridField::like(moments.rho, 9);
    st.grad_b = GridField::like(moments.rho, 9);
  }
  if (mode == Mode::free_stream || mode == Mode::radial_reference) return st;
  auto es = compute_electrostatic(moments, kernel, Output::window, with_gradients);
  st.phi = std::move(es.phi);
  st.e_l = std::move(es.e_l);
  if (with_gradients) st.grad_el = std::move(es.grad_el);
  if (mode == Mode::electrostatic) return st;
  auto mf = compute_vector_potential(moments, kernel, Output::window, with_gradients);
  st.a = std::move(mf.a);
  st.b = std::move(mf.b);
  if (with_gradients) st.grad_b = std::move(mf.grad_b);
  auto ts = solve_transverse_field(moments, ensemble, st.e_l, st.b, kernel, tol, max_iter, et_guess, time,
                                   with_gradients);
  st.e_t = std::move(ts.e_t);
  if (with_gradients) st.grad_et = std::move(ts.grad_et);
  st.fixed_point_iters = ts.iters;
  st.fixed_point_residual = ts.residual;
  st.residual_history = std::move(ts.history);
  return st;
}

}  // namespace vdarwin
