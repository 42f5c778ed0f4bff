#pragma once

#include <cmath>

#include "tma/gaussian.hpp"
#include "tma/harp.hpp"
#include "tma/interpolate.hpp"
#include "tma/volume.hpp"

namespace tma {

inline GridGeometry coarsen_geometry(const GridGeometry& g) {
  GridGeometry c;
  for (int a = 0; a < 3; ++a) c.dims[a] = std::max(2, (g.dims[a] + 1) / 2);
  c.spacing = 2.0 * g.spacing;
  c.origin = g.origin;  // coarse voxel i sits exactly on fine voxel 2i
  return c;
}

/// Smooth-and-subsample by 2. Plain intensity volumes only; wrapped phase
/// must go through downsample_phase_pair instead.
template <class T>
Volume<T> downsample(const Volume<T>& v) {
  Volume<T> s = gaussian_smooth(v, 1.0);
  const GridGeometry cg = coarsen_geometry(v.geom);
  Volume<T> out(cg);
  for (int k = 0; k < cg.dims[2]; ++k)
    for (int j = 0; j < cg.dims[1]; ++j)
      for (int i = 0; i < cg.dims[0]; ++i)
        out(i, j, k) = s(std::min(2 * i, v.geom.dims[0] - 1),
                         std::min(2 * j, v.geom.dims[1] - 1),
                         std::min(2 * k, v.geom.dims[2] - 1));
  return out;
}

/// Coarsen a phase/magnitude pair through the complex phasor so wrap seams
/// survive the smoothing.
template <class T>
harp::PhasePair<T> downsample_phase_pair(const harp::PhasePair<T>& p) {
  const auto& g = p.phase.geom;
  Volume<T> re(g), im(g);
  for (std::int64_t i = 0; i < g.voxel_count(); ++i) {
    const double m = double(p.magnitude.values[i]);
    const double ph = double(p.phase.values[i]);
    re.values[i] = T(m * std::cos(ph));
    im.values[i] = T(m * std::sin(ph));
  }
  const Volume<T> re2 = downsample(re);
  const Volume<T> im2 = downsample(im);
  harp::PhasePair<T> out{Volume<T>(re2.geom), Volume<T>(re2.geom)};
  for (std::int64_t i = 0; i < re2.geom.voxel_count(); ++i) {
    out.phase.values[i] = T(harp::wrap(std::atan2(double(im2.values[i]), double(re2.values[i]))));
    out.magnitude.values[i] = T(std::hypot(double(re2.values[i]), double(im2.values[i])));
  }
  return out;
}

/// Trilinear resample of a displacement/velocity field onto another level
/// of the same pyramid (shared origin, scaled spacing). Vector values are
/// in mm and unchanged.
inline VectorVolume<double> resample_field(const VectorVolume<double>& src,
                                           const GridGeometry& dst) {
  const Vector3d ratio = dst.spacing.cwiseQuotient(src.geom.spacing);
  VectorVolume<double> out(dst);
  std::int64_t idx = 0;
  for (int k = 0; k < dst.dims[2]; ++k)
    for (int j = 0; j < dst.dims[1]; ++j)
      for (int i = 0; i < dst.dims[0]; ++i, ++idx)
        out.vectors.row(idx) =
            sample_voxel(src, Vector3d(i, j, k).cwiseProduct(ratio)).transpose();
  return out;
}

}  // namespace tma
