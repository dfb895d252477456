#pragma once

// Fourier differentiation of grid fields. Fields with pad_factor >= 2 are zero-padded before
// transforming; fields with pad_factor == 1 are differentiated as periodic data.

#include <complex>
#include <vector>

#include "fft.hpp"
#include "grid.hpp"

namespace vdarwin {

namespace detail {

inline std::vector<Spectrum> forward_all(const SpectralGrid& sg, const GridField& f) {
  std::vector<Spectrum> out;
  out.reserve(f.components);
  for (int c = 0; c < f.components; ++c) out.push_back(sg.forward(f.component(c)));
  return out;
}

constexpr std::complex<double> I{0.0, 1.0};

}  // namespace detail

inline GridField spectral_gradient(const GridField& f) {
  require_components(f, 1, "spectral_gradient");
  const auto& sg = SpectralGrid::for_field(f);
  const Spectrum s = sg.forward(f.component(0));
  GridField out = GridField::like(f, 3);
  for (int a = 0; a < 3; ++a) {
    Spectrum d(s.size());
    sg.for_each_mode([&](std::size_t q, const Vec3& k) { d[q] = detail::I * k[a] * s[q]; });
    sg.inverse(std::move(d), out.component(a));
  }
  return out;
}

inline GridField spectral_divergence(const GridField& f) {
  require_components(f, 3, "spectral_divergence");
  const auto& sg = SpectralGrid::for_field(f);
  const auto s = detail::forward_all(sg, f);
  Spectrum d(sg.spectrum_size());
  sg.for_each_mode([&](std::size_t q, const Vec3& k) {
    d[q] = detail::I * (k.x * s[0][q] + k.y * s[1][q] + k.z * s[2][q]);
  });
  GridField out = GridField::like(f, 1);
  sg.inverse(std::move(d), out.component(0));
  return out;
}

inline GridField spectral_curl(const GridField& f) {
  require_components(f, 3, "spectral_curl");
  const auto& sg = SpectralGrid::for_field(f);
  const auto s = detail::forward_all(sg, f);
  GridField out = GridField::like(f, 3);
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    Spectrum d(sg.spectrum_size());
    sg.for_each_mode([&](std::size_t q, const Vec3& k) { d[q] = detail::I * (k[b] * s[c][q] - k[c] * s[b][q]); });
    sg.inverse(std::move(d), out.component(a));
  }
  return out;
}

// Jacobian of a vector field: component 3*a + b holds d_b F_a.
inline GridField spectral_jacobian(const GridField& f) {
  require_components(f, 3, "spectral_jacobian");
  const auto& sg = SpectralGrid::for_field(f);
  const auto s = detail::forward_all(sg, f);
  GridField out = GridField::like(f, 9);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      Spectrum d(sg.spectrum_size());
      sg.for_each_mode([&](std::size_t q, const Vec3& k) { d[q] = detail::I * k[b] * s[a][q]; });
      sg.inverse(std::move(d), out.component(3 * a + b));
    }
  return out;
}

// Laplacian with the same derivative wavevectors as the first-order operators (div grad).
inline GridField spectral_laplacian(const GridField& f) {
  const auto& sg = SpectralGrid::for_field(f);
  GridField out = GridField::like(f, f.components);
  for (int c = 0; c < f.components; ++c) {
    Spectrum s = sg.forward(f.component(c));
    sg.for_each_mode([&](std::size_t q, const Vec3& k) { s[q] *= -norm2(k); });
    sg.inverse(std::move(s), out.component(c));
  }
  return out;
}

}  // namespace vdarwin
