#pragma once

#include "tma/fft3.hpp"
#include "tma/volume.hpp"

namespace tma {

/// Divergence-free component of v: the Fourier-domain Helmholtz projection
/// v_hat - k (k . v_hat) / |k|^2 on the full grid, using the continuum
/// wavenumbers of the periodic box. Identity on divergence-free input.
inline VectorVolume<double> divergence_free_part(const VectorVolume<double>& v) {
  const auto& g = v.geom;
  ComplexGrid comp[3];
  for (int c = 0; c < 3; ++c) {
    comp[c].resize(size_t(g.voxel_count()));
    for (std::int64_t i = 0; i < g.voxel_count(); ++i)
      comp[c][size_t(i)] = Complex(v.vectors(i, c), 0.0);
    fft3_inplace(comp[c], g.dims, false);
  }

  std::int64_t idx = 0;
  for (int kz = 0; kz < g.dims[2]; ++kz)
    for (int ky = 0; ky < g.dims[1]; ++ky)
      for (int kx = 0; kx < g.dims[0]; ++kx, ++idx) {
        const Vector3d k(fft_wavenumber(kx, g.dims[0], g.spacing[0]),
                         fft_wavenumber(ky, g.dims[1], g.spacing[1]),
                         fft_wavenumber(kz, g.dims[2], g.spacing[2]));
        const double k2 = k.squaredNorm();
        if (k2 == 0.0) continue;  // the constant mode is divergence-free
        const Complex kdotv = k[0] * comp[0][size_t(idx)] + k[1] * comp[1][size_t(idx)] +
                              k[2] * comp[2][size_t(idx)];
        for (int c = 0; c < 3; ++c) comp[c][size_t(idx)] -= k[c] * kdotv / k2;
      }

  VectorVolume<double> out(g);
  for (int c = 0; c < 3; ++c) {
    fft3_inplace(comp[c], g.dims, true);
    for (std::int64_t i = 0; i < g.voxel_count(); ++i)
      out.vectors(i, c) = comp[c][size_t(i)].real();
  }
  return out;
}

/// Masked incompressibility projection: divergence-free everywhere the
/// mask is on, untouched where it is off.
/// out = mask * (divergence-free v) + (1 - mask) * v.
inline VectorVolume<double> incompressibility_project(const VectorVolume<double>& v,
                                                      const Volume<double>& mask) {
  require_same_geometry(v.geom, mask.geom, "incompressibility_project");
  VectorVolume<double> df = divergence_free_part(v);
  VectorVolume<double> out(v.geom);
  for (int c = 0; c < 3; ++c)
    out.vectors.col(c) = mask.values * df.vectors.col(c).array() +
                         (1.0 - mask.values) * v.vectors.col(c).array();
  return out;
}

/// Spectral divergence of v (exact derivative of the trigonometric
/// interpolant); the diagnostic the projection drives to zero.
inline Volume<double> spectral_divergence(const VectorVolume<double>& v) {
  const auto& g = v.geom;
  ComplexGrid acc(size_t(g.voxel_count()), Complex(0, 0));
  ComplexGrid comp(size_t(g.voxel_count()));
  for (int c = 0; c < 3; ++c) {
    for (std::int64_t i = 0; i < g.voxel_count(); ++i)
      comp[size_t(i)] = Complex(v.vectors(i, c), 0.0);
    fft3_inplace(comp, g.dims, false);
    std::int64_t idx = 0;
    for (int kz = 0; kz < g.dims[2]; ++kz)
      for (int ky = 0; ky < g.dims[1]; ++ky)
        for (int kx = 0; kx < g.dims[0]; ++kx, ++idx) {
          const double k = c == 0 ? fft_wavenumber(kx, g.dims[0], g.spacing[0])
                         : c == 1 ? fft_wavenumber(ky, g.dims[1], g.spacing[1])
                                  : fft_wavenumber(kz, g.dims[2], g.spacing[2]);
          acc[size_t(idx)] += Complex(0.0, k) * comp[size_t(idx)];
        }
  }
  fft3_inplace(acc, g.dims, true);
  Volume<double> out(g);
  for (std::int64_t i = 0; i < g.voxel_count(); ++i) out.values[i] = acc[size_t(i)].real();
  return out;
}

}  // namespace tma
