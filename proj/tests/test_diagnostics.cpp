// Norms, free-streaming parameter, decay fits, the bootstrap check and the Gronwall verification.

#include <gtest/gtest.h>

#include <cmath>

#include "vdarwin/vdarwin.hpp"

using namespace vdarwin;

namespace {

std::vector<TimeSeriesRecord> power_law_series(double amp_f, double exp_f, double amp_g, double exp_g, double t_end,
                                               double dt) {
  std::vector<TimeSeriesRecord> s;
  for (double t = 0; t <= t_end + 1e-12; t += dt) {
    TimeSeriesRecord r;
    r.t = t;
    r.sup_el = amp_f * std::pow(1 + t, exp_f);
    r.sup_grad_el = amp_g * std::pow(1 + t, exp_g);
    s.push_back(r);
  }
  return s;
}

}  // namespace

TEST(Norms, SupNormWithinRadiusIgnoresOuterNodes) {
  GridField f(2.0, 16, 3);
  f.at(0, 0, 0, 0) = 5.0;             // corner, |x| = 2 sqrt(3)
  f.at(1, 8, 8, 8) = -2.0;            // origin
  f.at(2, 8, 8, 8) = 0.0;
  EXPECT_DOUBLE_EQ(sup_norm_within(f, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(sup_norm_within(f, std::numeric_limits<double>::infinity()), 5.0);
  EXPECT_DOUBLE_EQ(sup_norm(f), 5.0);
  EXPECT_EQ(sup_norm_within(GridField{}, 1.0), 0.0);
}

TEST(Norms, PointwiseVectorNormIsUsed) {
  GridField f(1.0, 16, 3);
  f.at(0, 3, 3, 3) = 3.0;
  f.at(1, 3, 3, 3) = 4.0;
  EXPECT_DOUBLE_EQ(sup_norm(f), 5.0);
}

TEST(Norms, MomentumSupportSkipsZeroWeights) {
  ParticleEnsemble e;
  e.push_back({}, {3, 0, 0}, 0.0, 0.0);
  e.push_back({}, {0, 1, 0}, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(momentum_support(e), 1.0);
  ParticleEnsemble z;
  z.push_back({}, {}, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(momentum_support(z), 0.0);
}

TEST(Alpha, ExtractionIsTheSmallestAdmissibleConstant) {
  auto s = power_law_series(2.0, -1.5, 3.0, -2.5, 20, 0.5);
  const auto rep = extract_alpha(s, 20);
  EXPECT_NEAR(rep.alpha, 3.0, 1e-12);
  EXPECT_EQ(rep.binding_branch, BindingBranch::gradients);
  EXPECT_TRUE(satisfies_free_streaming(s, rep.alpha * (1 + 1e-12), 20));
  EXPECT_FALSE(satisfies_free_streaming(s, rep.alpha * (1 - 1e-6), 20));
  // Faster decay: alpha is set by the early time.
  auto f = power_law_series(1.0, -3.0, 0.1, -3.0, 20, 0.5);
  const auto r2 = extract_alpha(f, 20);
  EXPECT_NEAR(r2.alpha, 1.0, 1e-12);
  EXPECT_EQ(r2.binding_time, 0.0);
  EXPECT_EQ(r2.binding_branch, BindingBranch::fields);
}

TEST(Alpha, ZeroFieldsGiveZeroAlpha) {
  std::vector<TimeSeriesRecord> s(5);
  for (int i = 0; i < 5; ++i) s[i].t = i;
  EXPECT_EQ(extract_alpha(s, 4).alpha, 0.0);
  EXPECT_THROW(extract_alpha({}, 1.0), Error);
}

TEST(DecayFit, RecoversPowerLawExponent) {
  std::vector<double> t, v;
  for (double x = 5; x <= 40; x += 0.5) {
    t.push_back(x);
    v.push_back(7.0 * std::pow(x, -2.25));
  }
  const auto f = fit_decay_exponent(t, v, 5, 40);
  EXPECT_NEAR(f.exponent, -2.25, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 7.0, 1e-10);
  EXPECT_LT(f.residual, 1e-12);
  EXPECT_EQ(f.points, t.size());
}

TEST(DecayFit, RejectsBadWindowsAndNonpositiveValues) {
  std::vector<double> t{1, 2, 3}, v{1, 0, 1};
  EXPECT_THROW(fit_decay_exponent(t, v, 1, 3), Error);
  EXPECT_THROW(fit_decay_exponent(t, {1, 1, 1}, 0, 3), Error);
  EXPECT_THROW(fit_decay_exponent(t, {1, 1, 1}, 2.5, 2.6), Error);
}

TEST(Bootstrap, PassesOnlyWithMargin) {
  DecayFits fits;
  fits.fields.exponent = -1.8;
  fits.gradients.exponent = -8.0 / 3.0;
  fits.fields.t_lo = fits.gradients.t_lo = 5;
  FreeStreamReport rep;
  EXPECT_TRUE(check_bootstrap(rep, fits, 5).passed);
  fits.gradients.exponent = -2.55;
  const auto r = check_bootstrap(rep, fits, 5);
  EXPECT_FALSE(r.passed);
  EXPECT_NEAR(r.margin_gradients, 0.05, 1e-12);
  EXPECT_THROW(check_bootstrap(rep, fits, 6), Error);  // window must start after t0
}

TEST(Gronwall, RejectsIncreasingC3) {
  EXPECT_THROW(GronwallProblem(1.0, PiecewiseLinear::constant(1, 1), PiecewiseLinear::constant(0, 1),
                               PiecewiseLinear{{0, 1}, {0.1, 0.2}}),
               Error);
}

TEST(Gronwall, BoundClosedFormForConstantCoefficients) {
  // c1 = 2, c2 = 0, c3 = 0.5: bound(s) = (t^2 - s^2) exp(0.5 (t - s)).
  const GronwallProblem pb(2.0, PiecewiseLinear::constant(2, 2), PiecewiseLinear::constant(0, 2),
                           PiecewiseLinear::constant(0.5, 2));
  for (double s : {0.0, 0.5, 1.7, 2.0}) EXPECT_NEAR(pb.bound(s), (4 - s * s) * std::exp(0.5 * (2 - s)), 1e-9);
}

TEST(Gronwall, ConstantForcingRatioIsBoundedWithEqualityAtTheOrigin) {
  const auto r = closed_form_gronwall(1.3, 2.5);
  EXPECT_TRUE(r.bounded);
  EXPECT_LE(r.max_ratio, 1.0 + 1e-9);
  EXPECT_LT(r.equality_gap, 1e-9);
  EXPECT_NEAR(r.argmax, 0.0, 1e-12);
}

TEST(Gronwall, RandomCampaignHasNoViolations) {
  const auto r = run_gronwall_campaign(30, 3);
  EXPECT_EQ(r.trials, 90u);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_GT(r.worst_ratio, 0.0);
  EXPECT_LE(r.worst_ratio, 1.0);
}

TEST(Gronwall, ViolatedHypothesisIsDetected) {
  // Forcing larger than the hypothesis allows (c1 doubled in the dynamics) must trip the check.
  const GronwallProblem dyn(2.0, PiecewiseLinear::constant(2, 2), PiecewiseLinear::constant(0, 2),
                            PiecewiseLinear::constant(0, 2));
  const GronwallProblem claimed(2.0, PiecewiseLinear::constant(1, 2), PiecewiseLinear::constant(0, 2),
                                PiecewiseLinear::constant(0, 2));
  RandomStream rng(1, "x");
  const auto tr = integrate_gronwall_forcing(dyn, ForcingPattern::plus, 2000, rng);
  GronwallReport rep;
  check_gronwall_trajectory(claimed, tr, rep);
  EXPECT_EQ(rep.violations, 1u);
  ASSERT_EQ(rep.failures.size(), 1u);
  EXPECT_FALSE(rep.failures[0].trajectory.empty());
}
