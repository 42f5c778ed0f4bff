#pragma once

#include <string>

#include "tma/finite_difference.hpp"
#include "tma/mask.hpp"
#include "tma/volume.hpp"

namespace tma::mech {

/// Per-voxel symmetric Lagrangian strain with its eigen-system.
/// Eigenvalues are sorted E1 >= E2 >= E3; eigenvectors are unit length with
/// a deterministic sign (largest-magnitude component positive).
struct StrainField {
  GridGeometry geom;
  Eigen::Matrix<double, Eigen::Dynamic, 6> tensors;       // E00,E11,E22,E01,E02,E12
  Eigen::Matrix<double, Eigen::Dynamic, 3> eigenvalues;   // descending
  Eigen::Matrix<double, Eigen::Dynamic, 9> eigenvectors;  // rows v1 | v2 | v3

  explicit StrainField(const GridGeometry& g)
      : geom(g),
        tensors(Eigen::Matrix<double, Eigen::Dynamic, 6>::Zero(g.voxel_count(), 6)),
        eigenvalues(Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(g.voxel_count(), 3)),
        eigenvectors(Eigen::Matrix<double, Eigen::Dynamic, 9>::Zero(g.voxel_count(), 9)) {}

  Matrix3<double> tensor_at(std::int64_t idx) const {
    Matrix3<double> E;
    E << tensors(idx, 0), tensors(idx, 3), tensors(idx, 4),
         tensors(idx, 3), tensors(idx, 1), tensors(idx, 5),
         tensors(idx, 4), tensors(idx, 5), tensors(idx, 2);
    return E;
  }
  Vector3d eigenvector_at(std::int64_t idx, int which) const {
    return eigenvectors.row(idx).segment<3>(3 * which).transpose();
  }
};

/// Region summary in the Table-2 layout: mean and SD of the principal
/// strains plus the mean deformation MD (mm).
struct RegionStats {
  std::string label;
  double md = 0.0;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();  // E1, E2, E3
  Eigen::Vector3d sd = Eigen::Vector3d::Zero();
};

/// E = (F^T F - I) / 2 with F = I + du/dX, plus the principal system.
inline StrainField strain(const VectorVolume<double>& u) {
  const MatrixVolume<double> J = jacobian(u);
  StrainField out(u.geom);
  Eigen::SelfAdjointEigenSolver<Matrix3<double>> eig;
  for (std::int64_t idx = 0; idx < u.geom.voxel_count(); ++idx) {
    Matrix3<double> F = J.at(idx);
    F.diagonal().array() += 1.0;
    Matrix3<double> E = 0.5 * (F.transpose() * F - Matrix3<double>::Identity());
    E = Matrix3<double>(0.5 * (E + E.transpose()));  // symmetric to the last bit
    out.tensors(idx, 0) = E(0, 0);
    out.tensors(idx, 1) = E(1, 1);
    out.tensors(idx, 2) = E(2, 2);
    out.tensors(idx, 3) = E(0, 1);
    out.tensors(idx, 4) = E(0, 2);
    out.tensors(idx, 5) = E(1, 2);

    eig.compute(E);
    // Eigen returns ascending order; store descending with fixed signs.
    for (int r = 0; r < 3; ++r) {
      const int src = 2 - r;
      out.eigenvalues(idx, r) = eig.eigenvalues()[src];
      Vector3d v = eig.eigenvectors().col(src);
      int dominant = 0;
      v.cwiseAbs().maxCoeff(&dominant);
      if (v[dominant] < 0.0) v = -v;
      out.eigenvectors.row(idx).segment<3>(3 * r) = v.transpose();
    }
  }
  return out;
}

/// Largest interior Frobenius norm of E for a displacement that should be
/// rigid; near zero when it is.
inline double rigid_invariance_check(const VectorVolume<double>& u_rigid) {
  const StrainField s = strain(u_rigid);
  const auto& g = u_rigid.geom;
  double worst = 0.0;
  for (int k = 1; k < g.dims[2] - 1; ++k)
    for (int j = 1; j < g.dims[1] - 1; ++j)
      for (int i = 1; i < g.dims[0] - 1; ++i)
        worst = std::max(worst, s.tensor_at(g.index(i, j, k)).norm());
  return worst;
}

/// MD: region-weighted mean of |u| (mm), the discrete form of the
/// magnitude integral over the bounded region.
inline double mean_deformation(const VectorVolume<double>& u, const RegionMask<double>& region) {
  require_same_geometry(u.geom, region.geom, "mean_deformation");
  double acc = 0.0, wsum = 0.0;
  for (std::int64_t i = 0; i < u.vectors.rows(); ++i) {
    acc += region.values[i] * u.vectors.row(i).norm();
    wsum += region.values[i];
  }
  if (wsum <= 0.0) throw region_error("mean_deformation: empty region");
  return acc / wsum;
}

/// Axis-aligned box covering the support of a mask, as a binary mask.
inline RegionMask<double> bounding_box_mask(const RegionMask<double>& region) {
  const auto& g = region.geom;
  Vector3i lo = g.dims, hi = Vector3i(-1, -1, -1);
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i)
        if (region(i, j, k) > 0.5) {
          lo = lo.cwiseMin(Vector3i(i, j, k));
          hi = hi.cwiseMax(Vector3i(i, j, k));
        }
  RegionMask<double> box(g);
  if ((hi.array() < lo.array()).any()) return box;
  for (int k = lo[2]; k <= hi[2]; ++k)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int i = lo[0]; i <= hi[0]; ++i) box(i, j, k) = 1.0;
  return box;
}

/// Mean and SD of E1..E3 plus MD over the region. Volume-boundary voxels
/// are skipped: their one-sided stencils would bias the strain statistics.
inline RegionStats region_stats(const StrainField& s, const VectorVolume<double>& u,
                                const RegionMask<double>& region, const std::string& label) {
  require_same_geometry(s.geom, region.geom, "region_stats");
  require_same_geometry(u.geom, region.geom, "region_stats");
  const auto& g = region.geom;

  RegionMask<double> interior = region;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i)
        if (i == 0 || j == 0 || k == 0 || i == g.dims[0] - 1 || j == g.dims[1] - 1 ||
            k == g.dims[2] - 1)
          interior(i, j, k) = 0.0;

  double wsum = interior.values.sum();
  if (wsum <= 0.0) throw region_error("region_stats: empty region");

  RegionStats out;
  out.label = label;
  for (int c = 0; c < 3; ++c) {
    const Eigen::ArrayXd vals = s.eigenvalues.col(c).array();
    const double mean = (interior.values * vals).sum() / wsum;
    const double var = (interior.values * (vals - mean).square()).sum() / wsum;
    out.mean[c] = mean;
    out.sd[c] = std::sqrt(std::max(0.0, var));
  }
  out.md = mean_deformation(u, interior);
  return out;
}

}  // namespace tma::mech
