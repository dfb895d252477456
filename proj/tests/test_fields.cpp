// Deposition, spectral calculus, free-space solves, the projection and the transverse field.

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "vdarwin/vdarwin.hpp"

using namespace vdarwin;

namespace {

constexpr double kSigma = 0.25;

double gaussian_density(const Vec3& x) {
  return std::exp(-0.5 * norm2(x) / (kSigma * kSigma)) / std::pow(2 * oracle::pi * kSigma * kSigma, 1.5);
}

// Max over nodes with |x| <= radius of |a - b| (component-wise norm).
double max_diff_within(const GridField& a, const GridField& b, double radius) {
  return sup_norm_within(a - b, radius);
}

Moments moments_from(const GridField& rho, const GridField& j) {
  Moments m{rho, j, GridField::like(rho, 9)};
  return m;
}

}  // namespace

TEST(Deposit, ConservesChargeAndCurrentExactly) {
  SimConfig c;
  c.grid_n = 16;
  c.box_half_width = 4;
  c.t_end = 2;
  c.particle_count = 5000;
  const auto e = sample_particles(build_initial_datum(c), c);
  const GridField tmpl(c.box_half_width, c.grid_n, 1);
  const Moments m = deposit_moments(e, tmpl);
  double q = 0.0;
  for (double v : m.rho.values) q += v;
  EXPECT_NEAR(q * tmpl.cell_volume(), e.total_charge(), 1e-14 * e.total_charge());
  for (int a = 0; a < 3; ++a) {
    double s = 0, exact = 0;
    for (std::size_t i = 0; i < m.j.nodes(); ++i) s += m.j.component(a)[i];
    for (std::size_t i = 0; i < e.size(); ++i) exact += e.w[i] * relativistic_velocity(e.p[i])[a];
    EXPECT_NEAR(s * tmpl.cell_volume(), exact, 1e-15);
  }
  // M is symmetric and its trace integrates to sum w |v|^2.
  double tr = 0, exact_tr = 0;
  for (std::size_t i = 0; i < m.M.nodes(); ++i) {
    EXPECT_EQ(m.M.component(1)[i], m.M.component(3)[i]);
    tr += m.M.component(0)[i] + m.M.component(4)[i] + m.M.component(8)[i];
  }
  for (std::size_t i = 0; i < e.size(); ++i) exact_tr += e.w[i] * norm2(relativistic_velocity(e.p[i]));
  EXPECT_NEAR(tr * tmpl.cell_volume(), exact_tr, 1e-12 * exact_tr);
}

TEST(Deposit, MarkerOnNodeLandsOnThatNode) {
  const GridField tmpl(1.0, 16, 1);
  ParticleEnsemble e;
  e.push_back(tmpl.position(5, 6, 7), {0, 0, 0}, 2.0, 1.0);
  const Moments m = deposit_moments(e, tmpl);
  EXPECT_DOUBLE_EQ(m.rho.at(0, 5, 6, 7), 2.0 / tmpl.cell_volume());
  EXPECT_EQ(sup_norm(m.j), 0.0);
}

TEST(Deposit, EscapedMarkerIsNamed) {
  const GridField tmpl(1.0, 16, 1);
  ParticleEnsemble e;
  e.push_back({0, 0, 0}, {0, 0, 0}, 1.0, 1.0);
  e.push_back({0.99, 0, 0}, {0, 0, 0}, 1.0, 1.0);  // beyond the last full cell
  try {
    deposit_moments(e, tmpl, 3.5);
    FAIL() << "expected MarkerEscapeError";
  } catch (const MarkerEscapeError& err) {
    EXPECT_EQ(err.marker(), 1u);
    EXPECT_DOUBLE_EQ(err.time(), 3.5);
  }
}

TEST(Grid, TrilinearInterpolationIsExactForLinearFields) {
  const GridField f = sample_vector(2.0, 16, [](const Vec3& x) { return Vec3{1 + 2 * x.x, x.y - x.z, 3 * x.z}; });
  const Vec3 x{0.31, -0.77, 1.2};
  const Vec3 v = interpolate_vector(f, cic_stencil(f, x));
  EXPECT_NEAR(v.x, 1 + 2 * x.x, 1e-14);
  EXPECT_NEAR(v.y, x.y - x.z, 1e-14);
  EXPECT_NEAR(v.z, 3 * x.z, 1e-14);
}

TEST(Grid, LayoutMismatchIsAnError) {
  const GridField a(1.0, 16, 3), b(2.0, 16, 3), s(1.0, 16, 1);
  EXPECT_THROW(a + b, GridMismatchError);
  EXPECT_THROW(spectral_divergence(s), GridMismatchError);
}

TEST(Spectral, DerivativesOfGaussianMatchClosedForm) {
  const double E = 2.0;
  const int n = 64;
  const GridField g = sample_scalar(E, n, gaussian_density);
  const GridField grad = spectral_gradient(g);
  const GridField exact = sample_vector(E, n, [](const Vec3& x) { return x * (-gaussian_density(x) / (kSigma * kSigma)); });
  EXPECT_LT(sup_norm(grad - exact), 1e-9 * sup_norm(exact));
  EXPECT_LT(sup_norm(spectral_curl(grad)), 1e-9 * sup_norm(exact));
  const GridField lap = spectral_laplacian(g);
  const GridField div = spectral_divergence(grad);
  EXPECT_LT(sup_norm(lap - div), 1e-9 * sup_norm(lap));
}

TEST(Spectral, DivergenceAgreesWithIndependentTransform) {
  RandomStream rng(5, "divergence");
  const GridField F = random_vector_field(GridField(1.0, 16, 1, 1), rng);
  const GridField d = spectral_divergence(F);
  oracle::PeriodicSpectral ps(16, F.spacing());
  const auto od = ps.divergence(F.values);
  double err = 0;
  for (std::size_t i = 0; i < od.size(); ++i) err = std::max(err, std::abs(od[i] - d.values[i]));
  EXPECT_LT(err, 1e-11 * max_abs(d));
}

TEST(Poisson, GaussianPotentialMatchesClosedFormInsideExactBall) {
  const double E = 2.0;
  const int n = 32;
  const FreeSpaceKernel kernel(n, E);
  const GridField rho = sample_scalar(E, n, gaussian_density);
  const GridField phi = solve_poisson_free_space(rho, kernel);
  const GridField exact = sample_scalar(E, n, [](const Vec3& x) { return oracle::gaussian_potential(norm(x), kSigma); });
  const double R = kernel.exact_radius();
  EXPECT_NEAR(R, 0.8 * E, 1e-12);
  EXPECT_LT(max_diff_within(phi, exact, R), 1e-10 * sup_norm(exact));
}

TEST(Poisson, LongitudinalFieldIsRepellingAndMatchesClosedForm) {
  const double E = 2.0;
  const int n = 64;
  const FreeSpaceKernel kernel(n, E);
  const GridField rho = sample_scalar(E, n, gaussian_density);
  const auto es = compute_electrostatic(moments_from(rho, GridField::like(rho, 3)), kernel, Output::window, true);
  const GridField exact = sample_vector(E, n, [](const Vec3& x) {
    const double r = norm(x);
    return r > 0 ? x * (oracle::gaussian_potential_slope(r, kSigma) / r) : Vec3{};
  });
  EXPECT_LT(max_diff_within(es.e_l, exact, kernel.exact_radius()), 1e-9 * sup_norm(exact));
  // Outward at a point on the +x axis: positive charge repels.
  EXPECT_GT(es.e_l.at(0, n / 2 + 3, n / 2, n / 2), 0.0);
  // The Jacobian's trace is the divergence, which equals rho.
  GridField tr = GridField::like(rho, 1);
  for (std::size_t q = 0; q < tr.nodes(); ++q)
    tr.values[q] = es.grad_el.component(0)[q] + es.grad_el.component(4)[q] + es.grad_el.component(8)[q];
  EXPECT_LT(max_diff_within(tr, rho, kernel.exact_radius()), 1e-9 * sup_norm(rho));
}

TEST(Poisson, PaddedOutputSatisfiesLaplaceInsideExactBall) {
  const double E = 2.0;
  const int n = 64;
  const FreeSpaceKernel kernel(n, E);
  const GridField rho = sample_scalar(E, n, gaussian_density);
  const GridField phi = solve_poisson_free_space_padded(rho, kernel);
  ASSERT_EQ(phi.pad_factor, 1);
  const GridField lap = spectral_laplacian(phi);
  const GridField rho_full = sample_scalar(2 * E, 2 * n, gaussian_density, 1);
  EXPECT_LT(max_diff_within(lap, rho_full, kernel.exact_radius()), 1e-9 * sup_norm(rho));
}

TEST(Projection, PropertiesOnRandomFields) {
  const auto rep = run_projection_suite(64, 2, 11);
  EXPECT_LE(rep.worst_divergence, 1e-10);
  EXPECT_LE(rep.worst_idempotence, 1e-10);
  EXPECT_LE(rep.worst_gradient, 1e-8);
  EXPECT_THROW(run_projection_suite(32, 1), ConfigError);
}

TEST(Projection, MatchesIndependentProjectionOnPaddedGrid) {
  const int n = 16;
  const FreeSpaceKernel kernel(n, 1.0);
  RandomStream rng(9, "projection-oracle");
  const GridField F = random_vector_field(GridField(1.0, n, 1), rng);
  const GridField PF = helmholtz_project(F, kernel);
  ASSERT_EQ(PF.n, 2 * n);
  // Embed F into the padded grid by hand: node i of the box is node i + n/2 of the padded grid.
  GridField Fp(2.0, 2 * n, 3, 1);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) Fp.at(c, i + n / 2, j + n / 2, k + n / 2) = F.at(c, i, j, k);
  oracle::PeriodicSpectral ps(2 * n, F.spacing());
  const auto ref = ps.project(Fp.values);
  double err = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) err = std::max(err, std::abs(ref[i] - PF.values[i]));
  EXPECT_LT(err, 1e-12 * max_abs(F));
}

TEST(Projection, ZeroFieldProjectsToZero) {
  const FreeSpaceKernel kernel(16, 1.0);
  EXPECT_EQ(sup_norm(helmholtz_project(GridField(1.0, 16, 3), kernel)), 0.0);
}

TEST(VectorPotential, SolenoidalCurrentMatchesClosedForm) {
  // j = curl(psi e_z) with psi Gaussian; then A = curl(-Phi_psi e_z) with Laplace Phi_psi = psi.
  const double E = 2.0;
  const int n = 64;
  const FreeSpaceKernel kernel(n, E);
  const GridField j = sample_vector(E, n, [](const Vec3& x) {
    const double d = -gaussian_density(x) / (kSigma * kSigma);
    return Vec3{d * x.y, -d * x.x, 0.0};
  });
  const GridField exact = sample_vector(E, n, [](const Vec3& x) {
    const double r = norm(x);
    if (r == 0) return Vec3{};
    const double s = oracle::gaussian_potential_slope(r, kSigma) / r;
    return Vec3{-s * x.y, s * x.x, 0.0};
  });
  const auto mf = compute_vector_potential(moments_from(GridField::like(j, 1), j), kernel, Output::window, true);
  EXPECT_LT(max_diff_within(mf.a, exact, kernel.exact_radius()), 1e-9 * sup_norm(exact));
  // B = curl curl(-Phi e_z) = psi e_z - grad(d_z Phi), with Phi'' = psi - 2 Phi'/r.
  const GridField b_exact = sample_vector(E, n, [](const Vec3& x) {
    const double r = norm(x);
    const double psi = gaussian_density(x);
    if (r == 0) return Vec3{0, 0, psi - psi / 3.0};
    const double d1 = oracle::gaussian_potential_slope(r, kSigma);
    const double d2 = psi - 2.0 * d1 / r;
    const double radial = (d2 / r - d1 / (r * r)) / r;
    return Vec3{-x.z * x.x * radial, -x.z * x.y * radial, psi - d1 / r - x.z * x.z * radial};
  });
  EXPECT_LT(max_diff_within(mf.b, b_exact, kernel.exact_radius()), 1e-8 * sup_norm(b_exact));
}

TEST(VectorPotential, GradientCurrentGivesNoPotentialInsideExactBall) {
  const double E = 2.0;
  const int n = 32;
  const FreeSpaceKernel kernel(n, E);
  const GridField j = sample_vector(E, n, [](const Vec3& x) { return x * (-gaussian_density(x) / (kSigma * kSigma)); });
  const auto mf = compute_vector_potential(moments_from(GridField::like(j, 1), j), kernel);
  EXPECT_LT(sup_norm_within(mf.a, kernel.exact_radius()), 1e-9 * sup_norm(j));
  EXPECT_LT(sup_norm_within(mf.b, kernel.exact_radius()), 1e-9 * sup_norm(j));
}

TEST(Transverse, G2ContributionIsTransverseToVelocityInTheMetric) {
  const Vec3 p{0.4, -0.3, 0.8}, k{1.0, 2.0, -0.5};
  const double w = 0.7;
  const Vec3 c = detail::g2_contribution(p, w, k);
  const double g = std::sqrt(1 + norm2(p));
  const Vec3 v = p / g;
  // Independent form: (w/gamma) (I - v v^T) K.
  const Vec3 ref{w / g * (k.x - v.x * dot(v, k)), w / g * (k.y - v.y * dot(v, k)), w / g * (k.z - v.z * dot(v, k))};
  EXPECT_NEAR(norm(c - ref), 0.0, 1e-15);
}

TEST(Transverse, FixedPointConvergesAndIsSolenoidalInsideExactBall) {
  SimConfig c;
  c.grid_n = 32;
  c.box_half_width = 6;
  c.t_end = 4;
  c.amplitude = 1e-2;
  c.particle_count = 20000;
  const auto e = sample_particles(build_initial_datum(c), c);
  const FreeSpaceKernel kernel(c.grid_n, c.box_half_width);
  const GridField tmpl(c.box_half_width, c.grid_n, 1);
  const Moments m = deposit_moments(e, tmpl);
  const auto es = compute_electrostatic(m, kernel);
  const auto mf = compute_vector_potential(m, kernel);
  const auto sol = solve_transverse_field(m, e, es.e_l, mf.b, kernel, 1e-10, 30, nullptr, 0.0, false, true);
  EXPECT_LE(sol.residual, 1e-10);
  EXPECT_LE(sol.iters, 10);
  for (std::size_t i = 1; i < sol.history.size(); ++i) EXPECT_LT(sol.history[i], sol.history[i - 1]);
  const GridField div = spectral_divergence(sol.e_t_padded);
  const GridField grad = spectral_jacobian(sol.e_t_padded);
  EXPECT_LT(sup_norm_within(div, kernel.exact_radius()), 1e-6 * sup_norm_within(grad, kernel.exact_radius()));
}

TEST(Transverse, NonConvergenceRaisesWithResidualHistory) {
  SimConfig c;
  c.grid_n = 16;
  c.box_half_width = 4;
  c.t_end = 2;
  c.amplitude = 1e-2;
  c.particle_count = 2000;
  const auto e = sample_particles(build_initial_datum(c), c);
  const FreeSpaceKernel kernel(c.grid_n, c.box_half_width);
  const GridField tmpl(c.box_half_width, c.grid_n, 1);
  const Moments m = deposit_moments(e, tmpl);
  const auto es = compute_electrostatic(m, kernel);
  const auto mf = compute_vector_potential(m, kernel);
  try {
    solve_transverse_field(m, e, es.e_l, mf.b, kernel, 1e-30, 2);
    FAIL() << "expected FixedPointDivergenceError";
  } catch (const FixedPointDivergenceError& err) {
    EXPECT_EQ(err.residuals().size(), 2u);
  }
}

TEST(Fields, ModesComputeTheirOwnFieldsOnly) {
  SimConfig c;
  c.grid_n = 16;
  c.box_half_width = 4;
  c.t_end = 2;
  c.particle_count = 2000;
  const auto e = sample_particles(build_initial_datum(c), c);
  const FreeSpaceKernel kernel(c.grid_n, c.box_half_width);
  const Moments m = deposit_moments(e, GridField(c.box_half_width, c.grid_n, 1));
  const auto fs = solve_fields(m, e, kernel, Mode::free_stream, 1e-8, 20);
  EXPECT_EQ(sup_norm(fs.e_l), 0.0);
  const auto es = solve_fields(m, e, kernel, Mode::electrostatic, 1e-8, 20);
  EXPECT_GT(sup_norm(es.e_l), 0.0);
  EXPECT_EQ(sup_norm(es.e_t), 0.0);
  EXPECT_EQ(sup_norm(es.b), 0.0);
  const auto dw = solve_fields(m, e, kernel, Mode::darwin, 1e-8, 20);
  EXPECT_EQ(sup_norm(dw.e_l - es.e_l), 0.0);
  EXPECT_GT(sup_norm(dw.e_t), 0.0);
  EXPECT_GT(sup_norm(dw.b), 0.0);
}

TEST(Transverse, CurlCurlFormAgreesWithGreenFormInsideExactBall) {
  // For smooth compact sources -curl curl (B * S) equals -(G * S) + grad (B * div S) inside the exact
  // ball; the first is divergence-free on the whole padded grid.
  const int n = 64;
  const FreeSpaceKernel kernel(n, 1.0);
  RandomStream rng(3, "curl-curl");
  const GridField S = random_vector_field(GridField(1.0, n, 1), rng);
  const auto& sg = kernel.grid();
  auto a = detail::forward_components(sg, S);
  auto b = a;
  detail::apply_solenoidal_inverse(kernel, a, -1.0);
  sg.for_each_mode([&](std::size_t q, const Vec3& k) {
    const std::complex<double> kdot = k.x * b[0][q] + k.y * b[1][q] + k.z * b[2][q];
    for (int c = 0; c < 3; ++c) b[c][q] = -(kernel.green(q) * b[c][q] + kernel.biharmonic(q) * k[c] * kdot);
  });
  const GridField ea = detail::inverse_components(sg, a, S), eb = detail::inverse_components(sg, b, S);
  const double R = kernel.exact_radius();
  EXPECT_LT(max_diff_within(ea, eb, R), 1e-10 * sup_norm_within(eb, R));
  const GridField padded = detail::inverse_padded(sg, a, S);
  EXPECT_LT(sup_norm(spectral_divergence(padded)), 1e-12 * sup_norm(spectral_jacobian(padded)));
}
