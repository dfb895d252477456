#pragma once

// Per-step norms, the free-streaming parameter alpha, decay exponent fits and the bootstrap check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "deposit.hpp"
#include "errors.hpp"
#include "fields.hpp"
#include "grid.hpp"
#include "particles.hpp"

namespace vdarwin {

struct TimeSeriesRecord {
  double t = 0.0;
  double sup_rho = 0.0;
  double sup_j = 0.0;
  double sup_el = 0.0;
  double sup_et = 0.0;
  double sup_b = 0.0;
  double sup_grad_el = 0.0;
  double sup_grad_et = 0.0;
  double sup_grad_b = 0.0;
  double q_t = 0.0;
  double total_charge = 0.0;
  int fixed_point_iters = 0;

  double field_sum() const { return sup_el + sup_et + sup_b; }
  double gradient_sum() const { return sup_grad_el + sup_grad_et + sup_grad_b; }
};

// Pointwise sup of the component norm over nodes with |x| <= radius (all nodes if radius is infinite).
inline double sup_norm_within(const GridField& f, double radius) {
  if (f.values.empty()) return 0.0;
  const std::size_t m = f.nodes();
  const double r2 = radius * radius;
  double best = 0.0;
  for (int i = 0; i < f.n; ++i)
    for (int j = 0; j < f.n; ++j)
      for (int k = 0; k < f.n; ++k) {
        if (norm2(f.position(i, j, k)) > r2) continue;
        const std::size_t q = f.index(i, j, k);
        double s = 0.0;
        for (int c = 0; c < f.components; ++c) {
          const double v = f.values[c * m + q];
          s += v * v;
        }
        best = std::max(best, s);
      }
  return std::sqrt(best);
}

// Largest |p| over markers with nonzero weight.
inline double momentum_support(const ParticleEnsemble& e) {
  double q = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i)
    if (e.w[i] != 0.0) q = std::max(q, norm(e.p[i]));
  return q;
}

// Diagnostics for one time level. Norms are grid maxima over nodes within `radius` (the region where
// the field solve is exact); Q(t) is merged with the running maximum `previous_q`.
inline TimeSeriesRecord record_step(const Moments& moments, const FieldState& fields, const ParticleEnsemble& ensemble,
                                    double t, double previous_q = 0.0,
                                    double radius = std::numeric_limits<double>::infinity()) {
  TimeSeriesRecord r;
  r.t = t;
  r.sup_rho = sup_norm_within(moments.rho, radius);
  r.sup_j = sup_norm_within(moments.j, radius);
  r.sup_el = sup_norm_within(fields.e_l, radius);
  r.sup_et = sup_norm_within(fields.e_t, radius);
  r.sup_b = sup_norm_within(fields.b, radius);
  r.sup_grad_el = sup_norm_within(fields.grad_el, radius);
  r.sup_grad_et = sup_norm_within(fields.grad_et, radius);
  r.sup_grad_b = sup_norm_within(fields.grad_b, radius);
  r.q_t = std::max(previous_q, momentum_support(ensemble));
  r.total_charge = ensemble.total_charge();
  r.fixed_point_iters = fields.fixed_point_iters;
  return r;
}

enum class BindingBranch { fields, gradients };

inline const char* to_string(BindingBranch b) { return b == BindingBranch::fields ? "fields" : "gradients"; }

struct FreeStreamReport {
  double alpha = 0.0;
  double a = 0.0;
  double binding_time = 0.0;
  BindingBranch binding_branch = BindingBranch::fields;
};

// Smallest alpha with  field_sum <= alpha (1+t)^(-3/2)  and  gradient_sum <= alpha (1+t)^(-5/2)
// at every record with t <= a.
inline FreeStreamReport extract_alpha(const std::vector<TimeSeriesRecord>& series, double a) {
  if (series.empty()) throw Error("extract_alpha: empty time series");
  FreeStreamReport rep;
  rep.a = a;
  bool any = false;
  for (const auto& r : series) {
    if (r.t > a) continue;
    any = true;
    const double f = r.field_sum() * std::pow(1.0 + r.t, 1.5);
    const double g = r.gradient_sum() * std::pow(1.0 + r.t, 2.5);
    if (f > rep.alpha) rep.alpha = f, rep.binding_time = r.t, rep.binding_branch = BindingBranch::fields;
    if (g > rep.alpha) rep.alpha = g, rep.binding_time = r.t, rep.binding_branch = BindingBranch::gradients;
  }
  if (!any) throw Error("extract_alpha: no records in [0, a]");
  return rep;
}

// True when both free-streaming inequalities hold with parameter alpha at every record t <= a.
inline bool satisfies_free_streaming(const std::vector<TimeSeriesRecord>& series, double alpha, double a) {
  for (const auto& r : series) {
    if (r.t > a) continue;
    if (r.field_sum() > alpha * std::pow(1.0 + r.t, -1.5)) return false;
    if (r.gradient_sum() > alpha * std::pow(1.0 + r.t, -2.5)) return false;
  }
  return true;
}

struct DecayFit {
  double exponent = 0.0;
  double intercept = 0.0;  // log of the prefactor
  double t_lo = 0.0;
  double t_hi = 0.0;
  double residual = 0.0;   // RMS of the log-log fit
  std::size_t points = 0;
};

// Least-squares slope of log(value) against log(t) over t in [t_lo, t_hi].
inline DecayFit fit_decay_exponent(const std::vector<double>& t, const std::vector<double>& values, double t_lo,
                                   double t_hi) {
  if (t.size() != values.size()) throw Error("fit_decay_exponent: size mismatch");
  if (!(t_lo > 0) || !(t_hi > t_lo)) throw Error("fit_decay_exponent: window must satisfy 0 < t_lo < t_hi");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_lo || t[i] > t_hi) continue;
    if (!(values[i] > 0))
      throw Error("fit_decay_exponent: nonpositive value " + std::to_string(values[i]) + " at t=" +
                  std::to_string(t[i]) + " (noise floor reached; shrink the window)");
    lx.push_back(std::log(t[i]));
    ly.push_back(std::log(values[i]));
  }
  if (lx.size() < 2) throw Error("fit_decay_exponent: fewer than two points in the window");
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  DecayFit fit;
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;
  fit.points = lx.size();
  double ss = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - (fit.intercept + fit.exponent * lx[i]);
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

using SeriesSelector = std::function<double(const TimeSeriesRecord&)>;

inline DecayFit fit_decay_exponent(const std::vector<TimeSeriesRecord>& series, const SeriesSelector& select,
                                   double t_lo, double t_hi) {
  std::vector<double> t, v;
  for (const auto& r : series) {
    t.push_back(r.t);
    v.push_back(select(r));
  }
  return fit_decay_exponent(t, v, t_lo, t_hi);
}

namespace select {
inline double rho(const TimeSeriesRecord& r) { return r.sup_rho; }
inline double current(const TimeSeriesRecord& r) { return r.sup_j; }
inline double fields(const TimeSeriesRecord& r) { return r.field_sum(); }
inline double gradients(const TimeSeriesRecord& r) { return r.gradient_sum(); }
}  // namespace select

// Default fit window [max(5, 2 R0), 0.8 t_end].
inline std::pair<double, double> default_fit_window(double R0, double t_end) {
  return {std::max(5.0, 2.0 * R0), 0.8 * t_end};
}

struct DecayFits {
  DecayFit fields;
  DecayFit gradients;
};

struct BootstrapResult {
  bool passed = false;
  double margin_fields = 0.0;     // -3/2 - field exponent
  double margin_gradients = 0.0;  // -5/2 - gradient exponent
  double alpha = 0.0;
};

// The empirical bootstrap: fields and gradients must decay strictly faster than the free-streaming
// hypothesis, i.e. exponents <= -3/2 - margin_min and <= -5/2 - margin_min.
inline BootstrapResult check_bootstrap(const FreeStreamReport& report, const DecayFits& fits, double t0,
                                       double margin_min = 0.1) {
  const double lo = std::max(1.0, t0);
  if (fits.fields.t_lo < lo || fits.gradients.t_lo < lo)
    throw Error("check_bootstrap: fit windows must start at or after max(1, t0)");
  BootstrapResult r;
  r.alpha = report.alpha;
  r.margin_fields = -1.5 - fits.fields.exponent;
  r.margin_gradients = -2.5 - fits.gradients.exponent;
  r.passed = r.margin_fields >= margin_min && r.margin_gradients >= margin_min;
  return r;
}

}  // namespace vdarwin
