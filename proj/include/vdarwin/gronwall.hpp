#pragma once

// Numerical check of the Gronwall-type lemma: if xi(t) = xi'(t) = 0 and
//   |xi''(s)| <= c1(s) + c2(s) |xi(s)| + c3(s) |xi'(s)|  on [0, t], with c3 nonincreasing,
// then |xi(s)| <= (int_s^t r c1(r) dr) * exp(int_s^t (r c2(r) + c3(r)) dr).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace vdarwin {

// Continuous piecewise-linear function through (knots[i], values[i]); constant beyond the ends.
struct PiecewiseLinear {
  std::vector<double> knots;
  std::vector<double> values;

  double operator()(double s) const {
    if (knots.empty()) return 0.0;
    if (s <= knots.front()) return values.front();
    if (s >= knots.back()) return values.back();
    const auto it = std::upper_bound(knots.begin(), knots.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - knots.begin()) - 1;
    const double u = (s - knots[i]) / (knots[i + 1] - knots[i]);
    return values[i] * (1.0 - u) + values[i + 1] * u;
  }

  static PiecewiseLinear constant(double v, double t) { return {{0.0, t}, {v, v}}; }
};

enum class ForcingPattern { plus, minus, random_piecewise };

inline const char* to_string(ForcingPattern p) {
  switch (p) {
    case ForcingPattern::plus: return "plus";
    case ForcingPattern::minus: return "minus";
    case ForcingPattern::random_piecewise: return "random_piecewise";
  }
  return "unknown";
}

class GronwallProblem {
 public:
  GronwallProblem(double t, PiecewiseLinear c1, PiecewiseLinear c2, PiecewiseLinear c3)
      : t_(t), c1_(std::move(c1)), c2_(std::move(c2)), c3_(std::move(c3)) {
    if (!(t > 0)) throw Error("GronwallProblem: horizon must be positive");
    for (const auto* c : {&c1_, &c2_, &c3_}) {
      if (c->knots.size() != c->values.size() || c->knots.empty())
        throw Error("GronwallProblem: malformed coefficient");
      if (!std::is_sorted(c->knots.begin(), c->knots.end())) throw Error("GronwallProblem: knots must be sorted");
      for (double v : c->values)
        if (!(v >= 0)) throw Error("GronwallProblem: coefficients must be nonnegative");
    }
    for (std::size_t i = 1; i < c3_.values.size(); ++i)
      if (c3_.values[i] > c3_.values[i - 1]) throw Error("GronwallProblem: c3 must be nonincreasing");
  }

  double t() const { return t_; }
  double c1(double s) const { return c1_(s); }
  double c2(double s) const { return c2_(s); }
  double c3(double s) const { return c3_(s); }

  // Right-hand side of the lemma at s.
  double bound(double s, double tol = 1e-10) const {
    const double lead = adaptive_simpson([&](double r) { return r * c1(r); }, s, t_, tol);
    const double growth = adaptive_simpson([&](double r) { return r * c2(r) + c3(r); }, s, t_, tol);
    return lead * std::exp(growth);
  }

 private:
  double t_;
  PiecewiseLinear c1_, c2_, c3_;
};

struct GronwallViolation {
  double s = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  std::vector<double> s_grid;
  std::vector<double> trajectory;
};

struct GronwallReport {
  std::size_t trials = 0;
  std::size_t violations = 0;
  double worst_ratio = 0.0;     // max over trials and s of |xi(s)| / bound(s) (bound > 0)
  double worst_s = 0.0;
  std::vector<GronwallViolation> failures;
};

struct GronwallTrajectory {
  std::vector<double> s;    // decreasing from t to 0
  std::vector<double> xi;
  std::vector<double> dxi;
};

// Integrates xi'' = sigma(s) (c1 + c2 |xi| + c3 |xi'|) backwards from s = t with RK4 (`steps` steps).
// sigma is +1, -1, or piecewise constant with random switches placed on step boundaries.
inline GronwallTrajectory integrate_gronwall_forcing(const GronwallProblem& pb, ForcingPattern pattern, int steps,
                                                     RandomStream& rng) {
  std::vector<double> sigma(steps, 1.0);
  if (pattern == ForcingPattern::minus) std::fill(sigma.begin(), sigma.end(), -1.0);
  if (pattern == ForcingPattern::random_piecewise) {
    double cur = rng.uniform() < 0.5 ? -1.0 : 1.0;
    for (int i = 0; i < steps; ++i) {
      if (rng.uniform() < 8.0 / steps) cur = -cur;
      sigma[i] = cur;
    }
  }
  const double h = -pb.t() / steps;
  GronwallTrajectory tr;
  double s = pb.t(), x = 0.0, v = 0.0;
  tr.s.push_back(s);
  tr.xi.push_back(x);
  tr.dxi.push_back(v);
  for (int i = 0; i < steps; ++i) {
    const double sg = sigma[i];
    auto acc = [&](double ss, double xx, double vv) {
      return sg * (pb.c1(ss) + pb.c2(ss) * std::abs(xx) + pb.c3(ss) * std::abs(vv));
    };
    const double k1x = v, k1v = acc(s, x, v);
    const double k2x = v + 0.5 * h * k1v, k2v = acc(s + 0.5 * h, x + 0.5 * h * k1x, v + 0.5 * h * k1v);
    const double k3x = v + 0.5 * h * k2v, k3v = acc(s + 0.5 * h, x + 0.5 * h * k2x, v + 0.5 * h * k2v);
    const double k4x = v + h * k3v, k4v = acc(s + h, x + h * k3x, v + h * k3v);
    x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    s = pb.t() + (i + 1) * h;
    tr.s.push_back(s);
    tr.xi.push_back(x);
    tr.dxi.push_back(v);
  }
  return tr;
}

// Checks |xi(s)| <= bound(s) on every `stride`-th step point of one trajectory.
inline void check_gronwall_trajectory(const GronwallProblem& pb, const GronwallTrajectory& tr, GronwallReport& rep,
                                      int stride = 20, double rel_tol = 1e-9) {
  for (std::size_t i = 0; i < tr.s.size(); i += stride) {
    const double s = tr.s[i];
    const double lhs = std::abs(tr.xi[i]);
    const double rhs = pb.bound(s);
    if (rhs > 0) {
      const double ratio = lhs / rhs;
      if (ratio > rep.worst_ratio) rep.worst_ratio = ratio, rep.worst_s = s;
    }
    if (lhs > rhs * (1.0 + rel_tol) + 1e-14) {
      ++rep.violations;
      GronwallViolation v{s, lhs, rhs, tr.s, tr.xi};
      rep.failures.push_back(std::move(v));
      return;
    }
  }
}

inline GronwallReport verify_gronwall(const GronwallProblem& pb, int n_trials, std::uint64_t seed = 1,
                                      int steps = 2000) {
  GronwallReport rep;
  RandomStream rng(seed, "gronwall-forcing");
  for (int k = 0; k < n_trials; ++k) {
    const ForcingPattern pattern = k % 3 == 0 ? ForcingPattern::plus
                                   : k % 3 == 1 ? ForcingPattern::minus
                                                : ForcingPattern::random_piecewise;
    const auto tr = integrate_gronwall_forcing(pb, pattern, steps, rng);
    check_gronwall_trajectory(pb, tr, rep);
    ++rep.trials;
  }
  return rep;
}

// Random valid problem: horizon in [0.5, 4], coefficients piecewise linear on 6 knots with values in
// [0, 1] (c1), [0, 0.5] (c2, c3), c3 sorted nonincreasing.
inline GronwallProblem random_gronwall_problem(RandomStream& rng) {
  const double t = rng.uniform(0.5, 4.0);
  const int knots = 6;
  std::vector<double> s(knots);
  for (int i = 0; i < knots; ++i) s[i] = t * i / (knots - 1);
  auto draw = [&](double hi) {
    std::vector<double> v(knots);
    for (double& x : v) x = rng.uniform(0.0, hi);
    return v;
  };
  auto c1 = draw(1.0), c2 = draw(0.5), c3 = draw(0.5);
  std::sort(c3.begin(), c3.end(), std::greater<>());
  return GronwallProblem(t, {s, c1}, {s, c2}, {s, c3});
}

// Campaign: `problems` random problems, each driven with all three forcing patterns.
inline GronwallReport run_gronwall_campaign(int problems, std::uint64_t seed = 1, int steps = 2000) {
  GronwallReport total;
  RandomStream prng(seed, "gronwall-problems");
  RandomStream frng(seed, "gronwall-forcing");
  for (int k = 0; k < problems; ++k) {
    const auto pb = random_gronwall_problem(prng);
    for (auto pattern : {ForcingPattern::plus, ForcingPattern::minus, ForcingPattern::random_piecewise}) {
      const auto tr = integrate_gronwall_forcing(pb, pattern, steps, frng);
      check_gronwall_trajectory(pb, tr, total);
      ++total.trials;
    }
  }
  return total;
}

}  // namespace vdarwin
