#pragma once

// Cloud-in-cell deposition of marker quantities onto grid nodes.

#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "errors.hpp"
#include "grid.hpp"
#include "kinematics.hpp"
#include "particles.hpp"

namespace vdarwin {

struct Moments {
  GridField rho;  // charge density
  GridField j;    // current density, 3 components
  GridField M;    // second velocity moment, 9 components (row-major, symmetric)
};

namespace detail {

inline std::string describe_position(const Vec3& x) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "x = (%.6g, %.6g, %.6g)", x.x, x.y, x.z);
  return buf;
}

inline int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline int thread_id() {
#ifdef _OPENMP
  return omp_get_thread_num();
#else
  return 0;
#endif
}

}  // namespace detail

// Throws MarkerEscapeError for the first marker whose stencil leaves the grid.
inline void require_inside(const std::vector<Vec3>& x, const GridField& grid, double time) {
  for (std::size_t q = 0; q < x.size(); ++q)
    if (!cic_stencil(grid, x[q]).inside) throw MarkerEscapeError(q, time, detail::describe_position(x[q]));
}

// Deposits `ncomp` per-marker values (filled by values(q, out)) with trilinear weights and divides
// by the cell volume. Per-thread buffers are reduced in thread order, so results are deterministic
// for a given thread count.
template <typename F>
GridField deposit_cic(const std::vector<Vec3>& x, int ncomp, F&& values, const GridField& tmpl, double time) {
  require_inside(x, tmpl, time);
  GridField out = GridField::like(tmpl, ncomp);
  const std::size_t m = out.nodes();
  const int threads = detail::thread_count();
  std::vector<std::vector<double>> buffers(threads > 1 ? threads - 1 : 0);
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(x.size());

#pragma omp parallel num_threads(threads)
  {
    const int tid = detail::thread_id();
    double* acc = out.values.data();
    if (tid > 0) {
      buffers[tid - 1].assign(out.values.size(), 0.0);
      acc = buffers[tid - 1].data();
    }
    std::vector<double> v(ncomp);
#pragma omp for schedule(static)
    for (std::ptrdiff_t q = 0; q < count; ++q) {
      const CicStencil s = cic_stencil(out, x[q]);
      values(static_cast<std::size_t>(q), v.data());
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          for (int d = 0; d < 2; ++d) {
            const double wgt = s.weight(a, b, d);
            const std::size_t node = out.index(s.i + a, s.j + b, s.k + d);
            for (int c = 0; c < ncomp; ++c) acc[c * m + node] += wgt * v[c];
          }
    }
  }
  for (const auto& buf : buffers)
    for (std::size_t i = 0; i < buf.size(); ++i) out.values[i] += buf[i];
  const double inv = 1.0 / out.cell_volume();
  for (double& val : out.values) val *= inv;
  return out;
}

// Charge density, current density and (when with_stress) the second velocity moment of the ensemble.
inline Moments deposit_moments(const ParticleEnsemble& e, const GridField& tmpl, double time = 0.0,
                               bool with_stress = true) {
  // Packed: w, w v (3), w v_a v_b for (a <= b) (6).
  const int ncomp = with_stress ? 10 : 4;
  GridField packed = deposit_cic(
      e.x, ncomp,
      [&](std::size_t q, double* out) {
        const Vec3 v = relativistic_velocity(e.p[q]);
        const double w = e.w[q];
        out[0] = w;
        out[1] = w * v.x;
        out[2] = w * v.y;
        out[3] = w * v.z;
        if (!with_stress) return;
        out[4] = w * v.x * v.x;
        out[5] = w * v.x * v.y;
        out[6] = w * v.x * v.z;
        out[7] = w * v.y * v.y;
        out[8] = w * v.y * v.z;
        out[9] = w * v.z * v.z;
      },
      tmpl, time);
  Moments mom{GridField::like(tmpl, 1), GridField::like(tmpl, 3), with_stress ? GridField::like(tmpl, 9) : GridField{}};
  const std::size_t m = packed.nodes();
  auto copy = [&](GridField& dst, int dc, int sc) {
    std::copy(packed.component(sc), packed.component(sc) + m, dst.component(dc));
  };
  copy(mom.rho, 0, 0);
  for (int c = 0; c < 3; ++c) copy(mom.j, c, 1 + c);
  if (!with_stress) return mom;
  const int sym[3][3] = {{4, 5, 6}, {5, 7, 8}, {6, 8, 9}};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) copy(mom.M, 3 * a + b, sym[a][b]);
  return mom;
}

}  // namespace vdarwin
