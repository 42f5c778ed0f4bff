#pragma once

#include <unsupported/Eigen/FFT>

#include <complex>
#include <vector>

#include "tma/volume.hpp"

namespace tma {

using Complex = std::complex<double>;
using ComplexGrid = std::vector<Complex>;

/// In-place 3D DFT on a flattened x-fastest grid, one 1D pass per axis.
/// The inverse carries the 1/N normalization.
inline void fft3_inplace(ComplexGrid& a, const Vector3i& dims, bool inverse) {
  Eigen::FFT<double> fft;
  const int nx = dims[0], ny = dims[1], nz = dims[2];
  std::vector<Complex> line, out;

  line.resize(nx);
  out.resize(nx);
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y) {
      Complex* p = a.data() + std::int64_t(nx) * (y + std::int64_t(ny) * z);
      std::copy(p, p + nx, line.begin());
      if (inverse) fft.inv(out, line); else fft.fwd(out, line);
      std::copy(out.begin(), out.end(), p);
    }

  line.resize(ny);
  out.resize(ny);
  for (int z = 0; z < nz; ++z)
    for (int x = 0; x < nx; ++x) {
      const std::int64_t base = x + std::int64_t(nx) * ny * z;
      for (int y = 0; y < ny; ++y) line[y] = a[base + std::int64_t(nx) * y];
      if (inverse) fft.inv(out, line); else fft.fwd(out, line);
      for (int y = 0; y < ny; ++y) a[base + std::int64_t(nx) * y] = out[y];
    }

  line.resize(nz);
  out.resize(nz);
  const std::int64_t zstride = std::int64_t(nx) * ny;
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      const std::int64_t base = x + std::int64_t(nx) * y;
      for (int z = 0; z < nz; ++z) line[z] = a[base + zstride * z];
      if (inverse) fft.inv(out, line); else fft.fwd(out, line);
      for (int z = 0; z < nz; ++z) a[base + zstride * z] = out[z];
    }
}

template <class T>
ComplexGrid to_complex_grid(const Volume<T>& v) {
  ComplexGrid g(v.values.size());
  for (std::int64_t i = 0; i < v.values.size(); ++i) g[i] = Complex(double(v.values[i]), 0.0);
  return g;
}

/// Angular frequency (rad/mm) of DFT bin n on an axis of extent dim*spacing.
inline double fft_wavenumber(int n, int dim, double spacing) {
  const int folded = (n <= dim / 2) ? n : n - dim;
  return 2.0 * M_PI * folded / (double(dim) * spacing);
}

}  // namespace tma
