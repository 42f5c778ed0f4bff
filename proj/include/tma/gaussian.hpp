#pragma once

#include <cmath>
#include <vector>

#include "tma/volume.hpp"

namespace tma {

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma_voxels) {
  const int radius = std::max(1, int(std::ceil(3.0 * sigma_voxels)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma_voxels * sigma_voxels));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

// One separable pass along `axis`; kernel renormalized where it overhangs
// the boundary.
template <class T>
void convolve_axis(const GridGeometry& g, int axis, const std::vector<double>& kernel,
                   Eigen::Ref<Eigen::Matrix<T, Eigen::Dynamic, 1>> data) {
  const int n = g.dims[axis];
  const int radius = int(kernel.size() / 2);
  const std::int64_t stride = (axis == 0) ? 1
                            : (axis == 1) ? g.dims[0]
                                          : std::int64_t(g.dims[0]) * g.dims[1];
  std::vector<double> line(n);
  const int n0 = (axis == 0) ? g.dims[1] : g.dims[0];
  const int n1 = (axis == 2) ? g.dims[1] : g.dims[2];
  for (int b = 0; b < n1; ++b)
    for (int a = 0; a < n0; ++a) {
      std::int64_t base;
      if (axis == 0)
        base = g.index(0, a, b);
      else if (axis == 1)
        base = g.index(a, 0, b);
      else
        base = g.index(a, b, 0);
      for (int i = 0; i < n; ++i) line[i] = double(data[base + stride * i]);
      for (int i = 0; i < n; ++i) {
        double acc = 0.0, wsum = 0.0;
        const int lo = std::max(0, i - radius), hi = std::min(n - 1, i + radius);
        for (int s = lo; s <= hi; ++s) {
          const double w = kernel[s - i + radius];
          acc += w * line[s];
          wsum += w;
        }
        data[base + stride * i] = T(acc / wsum);
      }
    }
}

}  // namespace detail

/// Separable Gaussian smoothing, sigma given in voxels. sigma <= 0 is a no-op.
template <class T>
void gaussian_smooth_inplace(Volume<T>& vol, double sigma_voxels) {
  if (sigma_voxels <= 0.0) return;
  const auto kernel = detail::gaussian_kernel(sigma_voxels);
  Eigen::Matrix<T, Eigen::Dynamic, 1> buf = vol.values.matrix();
  for (int axis = 0; axis < 3; ++axis)
    detail::convolve_axis<T>(vol.geom, axis, kernel, buf);
  vol.values = buf.array();
}

template <class T>
void gaussian_smooth_inplace(VectorVolume<T>& vol, double sigma_voxels) {
  if (sigma_voxels <= 0.0) return;
  const auto kernel = detail::gaussian_kernel(sigma_voxels);
  for (int c = 0; c < 3; ++c)
    for (int axis = 0; axis < 3; ++axis)
      detail::convolve_axis<T>(vol.geom, axis, kernel, vol.vectors.col(c));
}

template <class T>
Volume<T> gaussian_smooth(Volume<T> vol, double sigma_voxels) {
  gaussian_smooth_inplace(vol, sigma_voxels);
  return vol;
}

template <class T>
VectorVolume<T> gaussian_smooth(VectorVolume<T> vol, double sigma_voxels) {
  gaussian_smooth_inplace(vol, sigma_voxels);
  return vol;
}

}  // namespace tma
