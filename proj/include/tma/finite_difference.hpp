#pragma once

#include "tma/volume.hpp"

namespace tma {

namespace detail {

// d/daxis of one scalar component: central differences in the interior,
// one-sided first order at boundaries, scaled by physical spacing.
template <class T, class Getter>
void axis_derivative(const GridGeometry& g, int axis, const Getter& get,
                     Eigen::Ref<Eigen::Matrix<T, Eigen::Dynamic, 1>> out) {
  const int n = g.dims[axis];
  const double h = g.spacing[axis];
  const double inv2h = 1.0 / (2.0 * h);
  const double invh = 1.0 / h;
  Vector3i step = Vector3i::Zero();
  step[axis] = 1;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const Vector3i p(i, j, k);
        const int a = p[axis];
        double d;
        if (a == 0)
          d = (get(p + step) - get(p)) * invh;
        else if (a == n - 1)
          d = (get(p) - get(p - step)) * invh;
        else
          d = (get(p + step) - get(p - step)) * inv2h;
        out[g.index(i, j, k)] = T(d);
      }
}

}  // namespace detail

/// Spatial gradient (value/mm) of a scalar volume.
template <class T>
VectorVolume<T> gradient(const Volume<T>& vol) {
  vol.geom.require_valid();
  VectorVolume<T> out(vol.geom);
  auto get = [&](const Vector3i& p) {
    return double(vol.values[vol.geom.index(p[0], p[1], p[2])]);
  };
  for (int axis = 0; axis < 3; ++axis)
    detail::axis_derivative<T>(vol.geom, axis, get, out.vectors.col(axis));
  return out;
}

/// Per-voxel du/dX: row r of the matrix is the gradient of component r.
template <class T>
MatrixVolume<T> jacobian(const VectorVolume<T>& field) {
  field.geom.require_valid();
  MatrixVolume<T> out(field.geom);
  for (int r = 0; r < 3; ++r) {
    auto get = [&](const Vector3i& p) {
      return double(field.vectors(field.geom.index(p[0], p[1], p[2]), r));
    };
    for (int axis = 0; axis < 3; ++axis)
      detail::axis_derivative<T>(field.geom, axis, get, out.entries.col(3 * r + axis));
  }
  return out;
}

/// Central-difference divergence (1/frame-unit per mm scaling of the field).
template <class T>
Volume<T> divergence(const VectorVolume<T>& field) {
  field.geom.require_valid();
  Volume<T> out(field.geom);
  Eigen::Matrix<T, Eigen::Dynamic, 1> tmp(field.geom.voxel_count());
  out.values.setZero();
  for (int axis = 0; axis < 3; ++axis) {
    auto get = [&](const Vector3i& p) {
      return double(field.vectors(field.geom.index(p[0], p[1], p[2]), axis));
    };
    detail::axis_derivative<T>(field.geom, axis, get, tmp);
    out.values += tmp.array();
  }
  return out;
}

/// Per-voxel determinant of F = I + du/dX.
template <class T>
Volume<T> jacobian_determinant(const VectorVolume<T>& displacement) {
  const MatrixVolume<T> J = jacobian(displacement);
  Volume<T> out(displacement.geom);
  for (std::int64_t idx = 0; idx < displacement.geom.voxel_count(); ++idx) {
    Matrix3<T> F = J.at(idx);
    F.diagonal().array() += T(1);
    out.values[idx] = F.determinant();
  }
  return out;
}

}  // namespace tma
