#pragma once

// Real 3-D transforms on the (optionally zero-padded) periodic grid that carries a GridField.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>
#include <vector>

#include "grid.hpp"
#include "linalg.hpp"

namespace vdarwin {

using Spectrum = std::vector<std::complex<double>>;

// Transform geometry: an n^3 window embedded at offset (pad-1)*n/2 in a periodic N^3 grid, N = pad*n.
// Wavevectors use the derivative convention: the Nyquist component of each axis is set to zero so
// that spectral derivatives of real data stay real.
class SpectralGrid {
 public:
  SpectralGrid(int n, double extent, int pad)
      : n_(n), pad_(pad), N_(pad * n), Nz_(pad * n / 2 + 1), offset_((pad - 1) * n / 2), extent_(extent) {
    if ((pad * n) % 2 != 0 || ((pad - 1) * n) % 2 != 0) throw GridMismatchError("padded grid size must be even");
    period_ = 2.0 * extent * pad;
    kfac_ = 2.0 * std::numbers::pi / period_;
    std::vector<double> real(real_size());
    Spectrum spec(spectrum_size());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::lock_guard lock(planner_mutex());
    forward_ = fftw_plan_dft_r2c_3d(N_, N_, N_, real.data(), reinterpret_cast<fftw_complex*>(spec.data()), flags);
    backward_ = fftw_plan_dft_c2r_3d(N_, N_, N_, reinterpret_cast<fftw_complex*>(spec.data()), real.data(), flags);
    if (!forward_ || !backward_) throw Error("FFTW planning failed");
  }

  SpectralGrid(const SpectralGrid&) = delete;
  SpectralGrid& operator=(const SpectralGrid&) = delete;

  ~SpectralGrid() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  int n() const { return n_; }
  int pad() const { return pad_; }
  int N() const { return N_; }
  int Nz() const { return Nz_; }
  double extent() const { return extent_; }
  double period() const { return period_; }
  std::size_t real_size() const { return static_cast<std::size_t>(N_) * N_ * N_; }
  std::size_t spectrum_size() const { return static_cast<std::size_t>(N_) * N_ * Nz_; }
  std::size_t spectral_index(int I, int J, int K) const { return (static_cast<std::size_t>(I) * N_ + J) * Nz_ + K; }

  // Signed integer frequency of full-axis index I.
  int frequency(int I) const { return I <= N_ / 2 ? (I == N_ / 2 ? -N_ / 2 : I) : I - N_; }
  // Derivative wavenumber of full-axis index I (Nyquist zeroed).
  double wavenumber(int I) const { return I == N_ / 2 ? 0.0 : kfac_ * frequency(I); }
  double wavenumber_unit() const { return kfac_; }

  // Zero-pads one unpadded component and transforms it.
  Spectrum forward(const double* window) const {
    std::vector<double> real(real_size(), 0.0);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        const double* src = window + (static_cast<std::size_t>(i) * n_ + j) * n_;
        double* dst = real.data() + (static_cast<std::size_t>(i + offset_) * N_ + j + offset_) * N_ + offset_;
        std::copy(src, src + n_, dst);
      }
    Spectrum spec(spectrum_size());
    fftw_execute_dft_r2c(forward_, real.data(), reinterpret_cast<fftw_complex*>(spec.data()));
    return spec;
  }

  // Inverse transform (consumes `spec`) normalised by 1/N^3; writes the unpadded window.
  void inverse(Spectrum spec, double* window) const {
    std::vector<double> real(real_size());
    fftw_execute_dft_c2r(backward_, reinterpret_cast<fftw_complex*>(spec.data()), real.data());
    const double scale = 1.0 / static_cast<double>(real_size());
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        const double* src = real.data() + (static_cast<std::size_t>(i + offset_) * N_ + j + offset_) * N_ + offset_;
        double* dst = window + (static_cast<std::size_t>(i) * n_ + j) * n_;
        for (int k = 0; k < n_; ++k) dst[k] = src[k] * scale;
      }
  }

  // Inverse transform returning the whole periodic N^3 grid.
  std::vector<double> inverse_full(Spectrum spec) const {
    std::vector<double> real(real_size());
    fftw_execute_dft_c2r(backward_, reinterpret_cast<fftw_complex*>(spec.data()), real.data());
    const double scale = 1.0 / static_cast<double>(real_size());
    for (double& v : real) v *= scale;
    return real;
  }

  // Calls f(index, k_d) for every spectral coefficient.
  template <typename F>
  void for_each_mode(F&& f) const {
    for (int I = 0; I < N_; ++I) {
      const double kx = wavenumber(I);
      for (int J = 0; J < N_; ++J) {
        const double ky = wavenumber(J);
        for (int K = 0; K < Nz_; ++K) f(spectral_index(I, J, K), Vec3{kx, ky, wavenumber(K)});
      }
    }
  }

  // Shared instance for a given geometry (plans are expensive to create for large grids).
  static const SpectralGrid& shared(int n, double extent, int pad) {
    static std::mutex m;
    static std::map<std::tuple<int, double, int>, std::unique_ptr<SpectralGrid>> cache;
    std::lock_guard lock(m);
    auto& slot = cache[{n, extent, pad}];
    if (!slot) slot = std::make_unique<SpectralGrid>(n, extent, pad);
    return *slot;
  }

  static const SpectralGrid& for_field(const GridField& f) { return shared(f.n, f.extent, f.pad_factor); }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  int n_, pad_, N_, Nz_, offset_;
  double extent_, period_ = 0.0, kfac_ = 0.0;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace vdarwin
