#pragma once

#include <cmath>

#include "tma/fft3.hpp"
#include "tma/finite_difference.hpp"
#include "tma/interpolate.hpp"
#include "tma/mask.hpp"
#include "tma/volume.hpp"

namespace tma::harp {

/// Wrap an angle into [-pi, pi): mod(theta + pi, 2 pi) - pi.
inline double wrap(double theta) {
  double r = std::fmod(theta + M_PI, 2.0 * M_PI);
  if (r < 0.0) r += 2.0 * M_PI;
  return r - M_PI;
}

template <class T>
Volume<T> wrap(const Volume<T>& v) {
  Volume<T> out(v.geom);
  for (std::int64_t i = 0; i < v.values.size(); ++i) out.values[i] = T(wrap(double(v.values[i])));
  return out;
}

/// Harmonic phase (radians, wrapped to [-pi, pi)) with its magnitude image.
template <class T>
struct PhasePair {
  Volume<T> phase;
  Volume<T> magnitude;
};

template <class T>
using TissueMask = RegionMask<T>;

/// Gradient of a wrapped phase volume. At each voxel picks the smaller of
/// the plain gradient and the gradient of the half-turn-shifted rewrap, so
/// wrap seams of a smooth underlying phase do not contaminate the result.
template <class T>
VectorVolume<T> wrapped_gradient(const Volume<T>& phase) {
  Volume<T> shifted(phase.geom);
  for (std::int64_t i = 0; i < phase.values.size(); ++i)
    shifted.values[i] = T(wrap(double(phase.values[i]) + M_PI));
  const VectorVolume<T> g1 = gradient(phase);
  const VectorVolume<T> g2 = gradient(shifted);
  VectorVolume<T> out(phase.geom);
  for (std::int64_t i = 0; i < out.vectors.rows(); ++i) {
    const bool take_plain = g1.vectors.row(i).squaredNorm() <= g2.vectors.row(i).squaredNorm();
    out.vectors.row(i) = take_plain ? g1.vectors.row(i) : g2.vectors.row(i);
  }
  return out;
}

namespace detail {

inline void require_nyquist(const GridGeometry& g, double period_mm) {
  if (!(period_mm > 2.0 * g.max_spacing()))
    throw param_error("tag period must exceed twice the largest voxel spacing");
}

}  // namespace detail

/// Isolate the +1 tag harmonic: FFT, radially symmetric Gaussian bandpass
/// at 1/period along the tag axis (sigma = half the center frequency),
/// inverse FFT. Phase is the argument wrapped to [-pi, pi); magnitude is
/// the modulus. Intensity scaling moves only the magnitude.
template <class T>
PhasePair<T> extract_phase(const Volume<T>& tagged, int tag_axis, double period_mm) {
  tagged.geom.require_valid();
  detail::require_nyquist(tagged.geom, period_mm);
  if (tag_axis < 0 || tag_axis > 2) throw param_error("tag axis must be 0, 1 or 2");

  const auto& g = tagged.geom;
  const double w0 = 2.0 * M_PI / period_mm;
  const double sigma_f = 0.5 * w0;

  ComplexGrid spec = to_complex_grid(tagged);
  fft3_inplace(spec, g.dims, false);

  Vector3d k0 = Vector3d::Zero();
  k0[tag_axis] = w0;
  std::int64_t idx = 0;
  for (int kz = 0; kz < g.dims[2]; ++kz)
    for (int ky = 0; ky < g.dims[1]; ++ky)
      for (int kx = 0; kx < g.dims[0]; ++kx, ++idx) {
        const Vector3d k(fft_wavenumber(kx, g.dims[0], g.spacing[0]),
                         fft_wavenumber(ky, g.dims[1], g.spacing[1]),
                         fft_wavenumber(kz, g.dims[2], g.spacing[2]));
        spec[size_t(idx)] *= std::exp(-(k - k0).squaredNorm() / (2.0 * sigma_f * sigma_f));
      }
  fft3_inplace(spec, g.dims, true);

  PhasePair<T> out{Volume<T>(g), Volume<T>(g)};
  for (std::int64_t i = 0; i < g.voxel_count(); ++i) {
    out.phase.values[i] = T(wrap(std::arg(spec[size_t(i)])));
    out.magnitude.values[i] = T(std::abs(spec[size_t(i)]));
  }
  return out;
}

/// Combined tissue mask: voxelwise geometric mean of the three magnitudes,
/// peak-normalized, binarized at threshold_fraction of the maximum. The
/// default fraction keeps the mask boundary near the half-intensity shell
/// of a faded tag envelope.
template <class T>
TissueMask<T> combine_masks(const Volume<T>& mag_a, const Volume<T>& mag_s,
                            const Volume<T>& mag_c, double threshold_fraction = 0.40) {
  require_same_geometry(mag_a.geom, mag_s.geom, "combine_masks");
  require_same_geometry(mag_a.geom, mag_c.geom, "combine_masks");
  Volume<T> gm(mag_a.geom);
  gm.values = (mag_a.values.max(T(0)) * mag_s.values.max(T(0)) * mag_c.values.max(T(0)))
                  .pow(T(1) / T(3));
  const T peak = gm.values.maxCoeff();
  if (peak > T(0)) gm.values /= peak;
  return binarize(gm, threshold_fraction);
}

/// Resample a wrapped phase volume at deformed points. Interpolating the
/// unit phasor (cos, sin) keeps the result meaningful across wrap seams;
/// interpolating wrapped values directly would not.
template <class T>
Volume<T> warp_phase(const Volume<T>& phase, const VectorVolume<double>& displacement) {
  require_same_geometry(phase.geom, displacement.geom, "warp_phase");
  const auto& g = phase.geom;
  Volume<T> cosv(g), sinv(g);
  for (std::int64_t i = 0; i < g.voxel_count(); ++i) {
    cosv.values[i] = T(std::cos(double(phase.values[i])));
    sinv.values[i] = T(std::sin(double(phase.values[i])));
  }
  Volume<T> out(g);
  std::int64_t idx = 0;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i, ++idx) {
        const Vector3d vx = Vector3d(i, j, k) +
                            displacement.vectors.row(idx).transpose().cwiseQuotient(g.spacing);
        const double c = double(sample_voxel(cosv, vx));
        const double s = double(sample_voxel(sinv, vx));
        out.values[idx] = T(wrap(std::atan2(s, c)));
      }
  return out;
}

}  // namespace tma::harp
