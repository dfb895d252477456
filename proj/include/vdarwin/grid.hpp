#pragma once

// Node-centred uniform cubic grid fields.
//
// Node i on each axis sits at -extent + i*h with h = 2*extent/n, i = 0..n-1. Values are stored
// component-major, then x, y, z with z fastest. pad_factor >= 2 marks a field that vanishes outside
// the box (free-space semantics: spectral operations zero-pad to pad_factor*n); pad_factor == 1 marks
// a field that is periodic on its own box.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace vdarwin {

struct GridField {
  double extent = 1.0;
  int n = 0;
  int components = 1;
  int pad_factor = 2;
  std::vector<double> values;

  GridField() = default;
  GridField(double extent_, int n_, int components_, int pad_factor_ = 2)
      : extent(extent_),
        n(n_),
        components(components_),
        pad_factor(pad_factor_),
        values(static_cast<std::size_t>(components_) * n_ * n_ * n_, 0.0) {
    if (n_ < 2) throw GridMismatchError("grid needs at least two nodes per axis");
    if (components_ < 1) throw GridMismatchError("grid field needs at least one component");
    if (pad_factor_ < 1) throw GridMismatchError("pad_factor must be >= 1");
  }

  static GridField like(const GridField& t, int components_) {
    return GridField(t.extent, t.n, components_, t.pad_factor);
  }

  double spacing() const { return 2.0 * extent / n; }
  double cell_volume() const {
    const double h = spacing();
    return h * h * h;
  }
  std::size_t nodes() const { return static_cast<std::size_t>(n) * n * n; }
  double coordinate(int i) const { return -extent + i * spacing(); }
  Vec3 position(int i, int j, int k) const { return {coordinate(i), coordinate(j), coordinate(k)}; }

  std::size_t index(int i, int j, int k) const { return (static_cast<std::size_t>(i) * n + j) * n + k; }
  std::size_t index(int c, int i, int j, int k) const { return c * nodes() + index(i, j, k); }

  double& at(int c, int i, int j, int k) { return values[index(c, i, j, k)]; }
  double at(int c, int i, int j, int k) const { return values[index(c, i, j, k)]; }

  double* component(int c) { return values.data() + c * nodes(); }
  const double* component(int c) const { return values.data() + c * nodes(); }

  Vec3 vector_at(std::size_t node) const {
    const std::size_t m = nodes();
    return {values[node], values[m + node], values[2 * m + node]};
  }

  bool same_layout(const GridField& o) const {
    return n == o.n && extent == o.extent && pad_factor == o.pad_factor;
  }
};

inline void require_same_layout(const GridField& a, const GridField& b, const std::string& what) {
  if (!a.same_layout(b))
    throw GridMismatchError(what + ": grids differ (n " + std::to_string(a.n) + " vs " + std::to_string(b.n) +
                            ", extent " + std::to_string(a.extent) + " vs " + std::to_string(b.extent) + ")");
}

inline void require_components(const GridField& f, int c, const std::string& what) {
  if (f.components != c)
    throw GridMismatchError(what + ": expected " + std::to_string(c) + " components, got " +
                            std::to_string(f.components));
}

// Pointwise sup over nodes of the Euclidean norm across components (Frobenius norm for 9 components).
inline double sup_norm(const GridField& f) {
  const std::size_t m = f.nodes();
  double best = 0.0;
  for (std::size_t q = 0; q < m; ++q) {
    double s = 0.0;
    for (int c = 0; c < f.components; ++c) {
      const double v = f.values[c * m + q];
      s += v * v;
    }
    best = std::max(best, s);
  }
  return std::sqrt(best);
}

// Largest absolute sample over all components.
inline double max_abs(const GridField& f) {
  double best = 0.0;
  for (double v : f.values) best = std::max(best, std::abs(v));
  return best;
}

inline GridField operator+(GridField a, const GridField& b) {
  require_same_layout(a, b, "field addition");
  require_components(b, a.components, "field addition");
  for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] += b.values[i];
  return a;
}

inline GridField operator-(GridField a, const GridField& b) {
  require_same_layout(a, b, "field subtraction");
  require_components(b, a.components, "field subtraction");
  for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] -= b.values[i];
  return a;
}

inline GridField operator*(double s, GridField a) {
  for (double& v : a.values) v *= s;
  return a;
}

// Fills each component by evaluating f(position) -> value (scalar) or Vec3.
template <typename F>
GridField sample_scalar(double extent, int n, F&& f, int pad_factor = 2) {
  GridField g(extent, n, 1, pad_factor);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) g.at(0, i, j, k) = f(g.position(i, j, k));
  return g;
}

template <typename F>
GridField sample_vector(double extent, int n, F&& f, int pad_factor = 2) {
  GridField g(extent, n, 3, pad_factor);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Vec3 v = f(g.position(i, j, k));
        for (int c = 0; c < 3; ++c) g.at(c, i, j, k) = v[c];
      }
  return g;
}

// Trilinear (cloud-in-cell) stencil of a point: base node and fractional offsets.
struct CicStencil {
  int i, j, k;
  double fx, fy, fz;
  bool inside;

  double weight(int a, int b, int c) const {
    return (a ? fx : 1.0 - fx) * (b ? fy : 1.0 - fy) * (c ? fz : 1.0 - fz);
  }
};

// A point is covered when all eight stencil nodes exist: -extent <= x < extent - h per axis.
inline CicStencil cic_stencil(const GridField& g, const Vec3& x) {
  const double h = g.spacing();
  CicStencil s{};
  s.inside = true;
  double u[3];
  int base[3];
  for (int a = 0; a < 3; ++a) {
    u[a] = (x[a] + g.extent) / h;
    const double fl = std::floor(u[a]);
    if (!(fl >= 0.0 && fl <= g.n - 2)) {
      s.inside = false;
      base[a] = 0;
      u[a] = 0.0;
      continue;
    }
    base[a] = static_cast<int>(fl);
    u[a] -= fl;
  }
  s.i = base[0];
  s.j = base[1];
  s.k = base[2];
  s.fx = u[0];
  s.fy = u[1];
  s.fz = u[2];
  return s;
}

// Trilinear interpolation of all components at x; `out` must have room for g.components values.
inline void interpolate(const GridField& g, const CicStencil& s, double* out) {
  const std::size_t m = g.nodes();
  for (int c = 0; c < g.components; ++c) out[c] = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int d = 0; d < 2; ++d) {
        const double wgt = s.weight(a, b, d);
        const std::size_t q = g.index(s.i + a, s.j + b, s.k + d);
        for (int c = 0; c < g.components; ++c) out[c] += wgt * g.values[c * m + q];
      }
}

inline Vec3 interpolate_vector(const GridField& g, const CicStencil& s) {
  double v[3];
  interpolate(g, s, v);
  return {v[0], v[1], v[2]};
}

// Row-major 3x3 gradient field (9 components, component 3*a + b = d_b F_a).
inline Mat3 interpolate_matrix(const GridField& g, const CicStencil& s) {
  Mat3 m;
  interpolate(g, s, m.a.data());
  return m;
}

}  // namespace vdarwin
