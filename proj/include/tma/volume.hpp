#pragma once

#include <Eigen/Dense>
#include <utility>

#include "tma/geometry.hpp"

namespace tma {

template <class T>
using ArrayX = Eigen::Array<T, Eigen::Dynamic, 1>;

template <class T>
using Vector3 = Eigen::Matrix<T, 3, 1>;

template <class T>
using Matrix3 = Eigen::Matrix<T, 3, 3>;

/// One real value per voxel on a regular grid.
template <class T>
struct Volume {
  GridGeometry geom;
  ArrayX<T> values;  // size = voxel_count(), x fastest

  Volume() = default;
  explicit Volume(GridGeometry g) : geom(std::move(g)) {
    values = ArrayX<T>::Zero(geom.voxel_count());
  }
  Volume(GridGeometry g, ArrayX<T> v) : geom(std::move(g)), values(std::move(v)) {}

  T& operator()(int i, int j, int k) { return values[geom.index(i, j, k)]; }
  T operator()(int i, int j, int k) const { return values[geom.index(i, j, k)]; }

  template <class U>
  Volume<U> cast() const {
    return Volume<U>(geom, values.template cast<U>());
  }
};

/// One 3-vector per voxel (world-frame mm components). Column-major storage
/// keeps each component contiguous, so component c behaves like a scalar
/// volume and maps directly onto the 4D file layout.
template <class T>
struct VectorVolume {
  GridGeometry geom;
  Eigen::Matrix<T, Eigen::Dynamic, 3> vectors;  // row per voxel

  VectorVolume() = default;
  explicit VectorVolume(GridGeometry g) : geom(std::move(g)) {
    vectors = Eigen::Matrix<T, Eigen::Dynamic, 3>::Zero(geom.voxel_count(), 3);
  }
  VectorVolume(GridGeometry g, Eigen::Matrix<T, Eigen::Dynamic, 3> v)
      : geom(std::move(g)), vectors(std::move(v)) {}

  Vector3<T> at(std::int64_t idx) const { return vectors.row(idx).transpose(); }
  void set(std::int64_t idx, const Vector3<T>& v) { vectors.row(idx) = v.transpose(); }

  Volume<T> component(int c) const {
    return Volume<T>(geom, vectors.col(c).array());
  }

  template <class U>
  VectorVolume<U> cast() const {
    return VectorVolume<U>(geom, vectors.template cast<U>());
  }
};

/// One 3x3 matrix per voxel, row-major entries (m00,m01,m02,m10,...,m22).
template <class T>
struct MatrixVolume {
  GridGeometry geom;
  Eigen::Matrix<T, Eigen::Dynamic, 9> entries;

  MatrixVolume() = default;
  explicit MatrixVolume(GridGeometry g) : geom(std::move(g)) {
    entries = Eigen::Matrix<T, Eigen::Dynamic, 9>::Zero(geom.voxel_count(), 9);
  }

  Matrix3<T> at(std::int64_t idx) const {
    Matrix3<T> m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = entries(idx, 3 * r + c);
    return m;
  }
  void set(std::int64_t idx, const Matrix3<T>& m) {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) entries(idx, 3 * r + c) = m(r, c);
  }
};

/// Per-voxel weights in [0,1]; binary masks use exactly {0,1}.
template <class T>
using RegionMask = Volume<T>;

template <class T>
bool all_finite(const Volume<T>& v) {
  return v.values.isFinite().all();
}

template <class T>
bool all_finite(const VectorVolume<T>& v) {
  return v.vectors.array().isFinite().all();
}

}  // namespace tma
