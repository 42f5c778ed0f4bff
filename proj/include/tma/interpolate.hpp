#pragma once

#include <algorithm>
#include <cmath>

#include "tma/volume.hpp"

namespace tma {

namespace detail {

// Cell base + fractional offsets for a voxel-space point, clamped to the
// grid so sampling is total. Exact at voxel centers.
struct TrilinearCell {
  int i0, j0, k0;
  double fx, fy, fz;
};

inline TrilinearCell trilinear_cell(const GridGeometry& g, const Vector3d& voxel) {
  auto prep = [](double v, int n, int& i0, double& f) {
    v = std::clamp(v, 0.0, double(n - 1));
    i0 = std::min(int(std::floor(v)), n - 2);
    f = v - i0;
  };
  TrilinearCell c;
  prep(voxel[0], g.dims[0], c.i0, c.fx);
  prep(voxel[1], g.dims[1], c.j0, c.fy);
  prep(voxel[2], g.dims[2], c.k0, c.fz);
  return c;
}

}  // namespace detail

/// Trilinear sample at a voxel-space coordinate, clamp-to-edge outside.
template <class T>
T sample_voxel(const Volume<T>& vol, const Vector3d& voxel) {
  const auto c = detail::trilinear_cell(vol.geom, voxel);
  const auto& g = vol.geom;
  auto v = [&](int di, int dj, int dk) {
    return double(vol.values[g.index(c.i0 + di, c.j0 + dj, c.k0 + dk)]);
  };
  const double c00 = v(0, 0, 0) * (1 - c.fx) + v(1, 0, 0) * c.fx;
  const double c10 = v(0, 1, 0) * (1 - c.fx) + v(1, 1, 0) * c.fx;
  const double c01 = v(0, 0, 1) * (1 - c.fx) + v(1, 0, 1) * c.fx;
  const double c11 = v(0, 1, 1) * (1 - c.fx) + v(1, 1, 1) * c.fx;
  const double d0 = c00 * (1 - c.fy) + c10 * c.fy;
  const double d1 = c01 * (1 - c.fy) + c11 * c.fy;
  return T(d0 * (1 - c.fz) + d1 * c.fz);
}

template <class T>
Vector3<T> sample_voxel(const VectorVolume<T>& vol, const Vector3d& voxel) {
  const auto c = detail::trilinear_cell(vol.geom, voxel);
  const auto& g = vol.geom;
  Eigen::Vector3d out = Eigen::Vector3d::Zero();
  const double wx[2] = {1 - c.fx, c.fx};
  const double wy[2] = {1 - c.fy, c.fy};
  const double wz[2] = {1 - c.fz, c.fz};
  for (int dk = 0; dk < 2; ++dk)
    for (int dj = 0; dj < 2; ++dj)
      for (int di = 0; di < 2; ++di) {
        const double w = wx[di] * wy[dj] * wz[dk];
        out += w * vol.vectors.row(g.index(c.i0 + di, c.j0 + dj, c.k0 + dk))
                       .transpose()
                       .template cast<double>();
      }
  return out.cast<T>();
}

/// Trilinear sample at a world-space point (mm), clamp-to-edge outside.
template <class T>
T interpolate(const Volume<T>& vol, const Vector3d& world_point) {
  return sample_voxel(vol, vol.geom.voxel_from_world(world_point));
}

template <class T>
Vector3<T> interpolate(const VectorVolume<T>& vol, const Vector3d& world_point) {
  return sample_voxel(vol, vol.geom.voxel_from_world(world_point));
}

/// Pull-back warp: out(x) = vol(x + displacement(x)), displacement in mm.
template <class T>
Volume<T> warp(const Volume<T>& vol, const VectorVolume<double>& displacement) {
  require_same_geometry(vol.geom, displacement.geom, "warp");
  const auto& g = vol.geom;
  Volume<T> out(g);
  std::int64_t idx = 0;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i, ++idx) {
        const Vector3d vx = Vector3d(i, j, k) +
                            displacement.vectors.row(idx).transpose().cwiseQuotient(g.spacing);
        out.values[idx] = sample_voxel(vol, vx);
      }
  return out;
}

}  // namespace tma
