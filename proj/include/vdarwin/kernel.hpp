#pragma once

// Free-space Green's functions as Fourier multipliers on the zero-padded periodic grid.
//
// The Coulomb kernel G(x) = 1/(4 pi |x|) and the biharmonic kernel B(x) = |x|/(8 pi) are truncated
// smoothly: the truncation radius L is averaged over [L1, L2] with a C-infinity weight. With period P
// of the padded grid and exact radius R = 0.4 * P / 2, L1 = 2R and L2 = P - 2R, so for sources inside
// the ball |y| <= R the periodic convolution equals the free-space convolution at every |x| <= R
// (no periodic image reaches it), while the multipliers stay smooth functions of |k| and spectral
// derivatives remain exactly consistent with the solves.

#include <cmath>
#include <numbers>
#include <vector>

#include "errors.hpp"
#include "fft.hpp"
#include "initial_datum.hpp"
#include "quadrature.hpp"

namespace vdarwin {

namespace detail {

// Fourier transform of 1/(4 pi |x|) restricted to |x| < L.
inline double truncated_coulomb_symbol(double k, double L) {
  if (k * L < 1e-4) return 0.5 * L * L * (1.0 - k * k * L * L / 12.0);
  const double s = std::sin(0.5 * k * L);
  return 2.0 * s * s / (k * k);
}

// Fourier transform of |x|/(8 pi) restricted to |x| < L.
inline double truncated_biharmonic_symbol(double k, double L) {
  const double kl = k * L;
  if (kl < 1.0) {
    // 1/2 sum_m (-1)^m k^(2m) L^(2m+4) / ((2m+1)! (2m+4))
    double term = std::pow(L, 4);  // k^(2m) L^(2m+4) / (2m+1)!
    double sum = 0.0;
    for (int m = 0; m < 30; ++m) {
      sum += (m % 2 ? -1.0 : 1.0) * term / (2 * m + 4);
      term *= kl * kl / ((2.0 * m + 2.0) * (2.0 * m + 3.0));
    }
    return 0.5 * sum;
  }
  const double c = std::cos(kl), s = std::sin(kl);
  const double integral = -L * L * c / k + 2.0 * L * s / (k * k) + 2.0 * (c - 1.0) / (k * k * k);
  return integral / (2.0 * k);
}

}  // namespace detail

class FreeSpaceKernel {
 public:
  FreeSpaceKernel(int n, double extent, int pad = 2) : grid_(&SpectralGrid::shared(n, extent, pad)) {
    if (pad < 2) throw GridMismatchError("free-space kernel needs pad_factor >= 2");
    const double P = grid_->period();
    exact_radius_ = 0.2 * P;
    const double L1 = 2.0 * exact_radius_, L2 = P - 2.0 * exact_radius_;

    // Truncation-radius weight: bump on [L1, L2], normalised to unit mass.
    const int N = grid_->N();
    const auto rule = gauss_legendre(32);
    const int panels = std::max(16, N / 4);
    std::vector<double> Ls, ws;
    const double len = (L2 - L1) / panels;
    for (int p = 0; p < panels; ++p) {
      const double a = L1 + p * len, c = a + 0.5 * len;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double L = c + 0.5 * len * rule.nodes[i];
        const double u = 2.0 * (L - L1) / (L2 - L1) - 1.0;
        Ls.push_back(L);
        ws.push_back(0.5 * len * rule.weights[i] * bump_profile(u));
      }
    }
    double mass = 0.0;
    for (double w : ws) mass += w;
    for (double& w : ws) w /= mass;

    // Symbols depend on |k| only: tabulate by the integer s = m1^2 + m2^2 + m3^2.
    const int half = N / 2;
    const std::size_t smax = 3 * static_cast<std::size_t>(half) * half;
    std::vector<double> gtab(smax + 1), btab(smax + 1);
    const double kunit = grid_->wavenumber_unit();
    for (std::size_t s = 0; s <= smax; ++s) {
      const double k = kunit * std::sqrt(static_cast<double>(s));
      double g = 0.0, b = 0.0;
      for (std::size_t i = 0; i < Ls.size(); ++i) {
        g += ws[i] * detail::truncated_coulomb_symbol(k, Ls[i]);
        b += ws[i] * detail::truncated_biharmonic_symbol(k, Ls[i]);
      }
      gtab[s] = g;
      btab[s] = b;
    }

    // SpectralGrid::inverse normalises by 1/N^3, so the continuous symbols act directly as multipliers.
    green_.resize(grid_->spectrum_size());
    biharmonic_.resize(grid_->spectrum_size());
    for (int I = 0; I < N; ++I)
      for (int J = 0; J < N; ++J)
        for (int K = 0; K < grid_->Nz(); ++K) {
          const int a = grid_->frequency(I), b = grid_->frequency(J), c = grid_->frequency(K);
          const std::size_t s = static_cast<std::size_t>(a * a + b * b + c * c);
          const std::size_t q = grid_->spectral_index(I, J, K);
          green_[q] = gtab[s];
          biharmonic_[q] = btab[s];
        }
  }

  const SpectralGrid& grid() const { return *grid_; }
  int n() const { return grid_->n(); }
  double extent() const { return grid_->extent(); }
  int pad_factor() const { return grid_->pad(); }
  double spacing() const { return 2.0 * grid_->extent() / grid_->n(); }

  // Radius of the ball inside which sources must lie (and on which the solve is exact).
  double exact_radius() const { return exact_radius_; }

  // Continuous-transform symbols of the truncated kernels at each spectral index.
  double green(std::size_t q) const { return green_[q]; }
  double biharmonic(std::size_t q) const { return biharmonic_[q]; }

  void require_matches(const GridField& f, const std::string& what) const {
    if (f.n != n() || f.extent != extent() || f.pad_factor != pad_factor())
      throw GridMismatchError(what + ": field grid (n=" + std::to_string(f.n) + ", extent=" +
                              std::to_string(f.extent) + ", pad=" + std::to_string(f.pad_factor) +
                              ") does not match the kernel grid (n=" + std::to_string(n()) +
                              ", extent=" + std::to_string(extent()) + ", pad=" + std::to_string(pad_factor()) + ")");
  }

 private:
  const SpectralGrid* grid_;
  double exact_radius_ = 0.0;
  std::vector<double> green_;
  std::vector<double> biharmonic_;
};

}  // namespace vdarwin
