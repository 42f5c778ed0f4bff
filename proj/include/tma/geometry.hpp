#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "tma/error.hpp"

namespace tma {

using Eigen::Vector3d;
using Eigen::Vector3i;

/// Regular axis-aligned 3D grid: voxel counts, physical spacing (mm/voxel)
/// and the world position of voxel (0,0,0). World coordinates are
/// right-handed with axes parallel to the voxel axes.
struct GridGeometry {
  Vector3i dims{0, 0, 0};
  Vector3d spacing{1.0, 1.0, 1.0};
  Vector3d origin{0.0, 0.0, 0.0};

  GridGeometry() = default;
  GridGeometry(Vector3i d, Vector3d s, Vector3d o = Vector3d::Zero())
      : dims(std::move(d)), spacing(std::move(s)), origin(std::move(o)) {}

  static GridGeometry isotropic(int n, double h) {
    return GridGeometry(Vector3i(n, n, n), Vector3d(h, h, h));
  }

  bool valid() const {
    return (dims.array() >= 2).all() && (spacing.array() > 0.0).all();
  }

  void require_valid() const {
    if (!(dims.array() >= 2).all()) throw param_error("grid dims must all be >= 2");
    if (!(spacing.array() > 0.0).all()) throw param_error("grid spacing must be > 0");
  }

  std::int64_t voxel_count() const {
    return std::int64_t(dims[0]) * dims[1] * dims[2];
  }

  // Flattened index, x fastest (matches the on-disk layout).
  std::int64_t index(int i, int j, int k) const {
    return std::int64_t(i) + dims[0] * (std::int64_t(j) + std::int64_t(dims[1]) * k);
  }

  Vector3d world_from_voxel(const Vector3d& v) const {
    return origin + spacing.cwiseProduct(v);
  }

  Vector3d voxel_from_world(const Vector3d& p) const {
    return (p - origin).cwiseQuotient(spacing);
  }

  Vector3d voxel_center(int i, int j, int k) const {
    return world_from_voxel(Vector3d(i, j, k));
  }

  double min_spacing() const { return spacing.minCoeff(); }
  double max_spacing() const { return spacing.maxCoeff(); }
  double mean_spacing() const { return spacing.mean(); }

  bool operator==(const GridGeometry& o) const {
    return dims == o.dims && spacing == o.spacing && origin == o.origin;
  }
  bool operator!=(const GridGeometry& o) const { return !(*this == o); }
};

inline void require_same_geometry(const GridGeometry& a, const GridGeometry& b,
                                  const char* what) {
  if (a != b) throw shape_error(std::string("geometry mismatch in ") + what);
}

}  // namespace tma
