#pragma once

#include <cmath>

#include "tma/interpolate.hpp"
#include "tma/volume.hpp"

namespace tma {

/// A displacement-represented diffeomorphism with its inverse, both on one
/// grid. forward(x) = x + forward_disp(x) maps reference coordinates to
/// deformed coordinates; inverse deviates from its exact inverse only by
/// the exponentiation and resampling tolerance.
struct DiffeoField {
  VectorVolume<double> forward;
  VectorVolume<double> inverse;

  DiffeoField() = default;
  explicit DiffeoField(const GridGeometry& g) : forward(g), inverse(g) {}
  DiffeoField(VectorVolume<double> fwd, VectorVolume<double> inv)
      : forward(std::move(fwd)), inverse(std::move(inv)) {
    require_same_geometry(forward.geom, inverse.geom, "DiffeoField");
  }

  const GridGeometry& geometry() const { return forward.geom; }

  static DiffeoField identity(const GridGeometry& g) { return DiffeoField(g); }

  Vector3d apply_forward(const Vector3d& x) const {
    return x + interpolate(forward, x);
  }
  Vector3d apply_inverse(const Vector3d& x) const {
    return x + interpolate(inverse, x);
  }
};

/// Displacement of a(b(x)) for displacement fields a, b on one grid:
/// out(x) = b(x) + a(x + b(x)).
inline VectorVolume<double> compose_displacements(const VectorVolume<double>& outer,
                                                  const VectorVolume<double>& inner) {
  require_same_geometry(outer.geom, inner.geom, "compose_displacements");
  const auto& g = outer.geom;
  VectorVolume<double> out(g);
  std::int64_t idx = 0;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i, ++idx) {
        const Vector3d b = inner.vectors.row(idx).transpose();
        const Vector3d vox = Vector3d(i, j, k) + b.cwiseQuotient(g.spacing);
        out.vectors.row(idx) = (b + sample_voxel(outer, vox)).transpose();
      }
  return out;
}

/// Group exponential of a stationary velocity field by scaling and
/// squaring: scale v so the largest step is below half a voxel, integrate,
/// then self-compose back up.
inline VectorVolume<double> exponentiate_velocity(const VectorVolume<double>& v) {
  const double max_norm = v.vectors.rows() ? v.vectors.rowwise().norm().maxCoeff() : 0.0;
  const double limit = 0.5 * v.geom.min_spacing();
  int n = 0;
  if (max_norm > limit) n = int(std::ceil(std::log2(max_norm / limit)));
  VectorVolume<double> phi = v;
  phi.vectors *= std::pow(0.5, n);
  for (int s = 0; s < n; ++s) phi = compose_displacements(phi, phi);
  return phi;
}

/// phi = exp(v), phi^-1 = exp(-v).
inline DiffeoField exponentiate(const VectorVolume<double>& v) {
  VectorVolume<double> neg = v;
  neg.vectors = -v.vectors;
  return DiffeoField(exponentiate_velocity(v), exponentiate_velocity(neg));
}

}  // namespace tma
