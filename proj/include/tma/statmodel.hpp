#pragma once

#include <string>
#include <vector>

#include "tma/error.hpp"
#include "tma/textio.hpp"
#include "tma/volume.hpp"

namespace tma::pca {

/// One subject's transported motion at one frame, flattened over the
/// region D: per masked voxel in ascending flat-index order, the three
/// displacement components in mm.
struct MotionSample {
  std::string subject_id;
  std::string frame_label;
  Eigen::VectorXd values;
};

/// Linear motion model C = mean + components * b.
struct MotionModel {
  std::string frame_label;
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // orthonormal columns, one per retained mode
  Eigen::VectorXd variances;   // descending, one per retained mode
  Eigen::MatrixXd loadings;    // row per training subject
  std::vector<std::string> subject_ids;

  int mode_count() const { return int(variances.size()); }
};

/// Flatten a displacement field over the masked voxels of D.
inline Eigen::VectorXd flatten_over_region(const VectorVolume<double>& field,
                                           const RegionMask<double>& region) {
  require_same_geometry(field.geom, region.geom, "flatten_over_region");
  std::int64_t count = 0;
  for (std::int64_t i = 0; i < region.values.size(); ++i)
    if (region.values[i] > 0.5) ++count;
  Eigen::VectorXd out(3 * count);
  std::int64_t at = 0;
  for (std::int64_t i = 0; i < region.values.size(); ++i)
    if (region.values[i] > 0.5) {
      out.segment<3>(at) = field.vectors.row(i).transpose();
      at += 3;
    }
  return out;
}

/// Scatter a flattened sample back onto the grid; voxels outside D are zero.
inline VectorVolume<double> unflatten_over_region(const Eigen::VectorXd& values,
                                                  const RegionMask<double>& region) {
  VectorVolume<double> out(region.geom);
  std::int64_t at = 0;
  for (std::int64_t i = 0; i < region.values.size(); ++i)
    if (region.values[i] > 0.5) {
      if (at + 3 > values.size())
        throw shape_error("unflatten_over_region: sample shorter than the region");
      out.vectors.row(i) = values.segment<3>(at).transpose();
      at += 3;
    }
  if (at != values.size())
    throw shape_error("unflatten_over_region: sample length does not match the region");
  return out;
}

namespace detail {

// Deterministic component orientation: first above-noise entry positive.
inline void fix_sign(Eigen::Ref<Eigen::VectorXd> component, Eigen::Ref<Eigen::VectorXd> loading) {
  const double tol = 1e-12 * component.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < component.size(); ++i) {
    if (std::abs(component[i]) > tol) {
      if (component[i] < 0.0) {
        component = -component;
        loading = -loading;
      }
      return;
    }
  }
}

}  // namespace detail

/// PCA of the samples through the n x n Gram matrix (the sample count is
/// far below the field dimension). Retains modes whose variance is above
/// numerical noise; loadings are the centered samples projected onto the
/// components, so they average to zero by construction.
inline MotionModel fit(const std::vector<MotionSample>& samples) {
  const int n = int(samples.size());
  if (n < 2) throw param_error("PCA needs at least two samples");
  const Eigen::Index dim = samples[0].values.size();
  for (const auto& s : samples)
    if (s.values.size() != dim)
      throw shape_error("PCA samples disagree on the region dimension");

  MotionModel model;
  model.frame_label = samples[0].frame_label;
  for (const auto& s : samples) model.subject_ids.push_back(s.subject_id);

  model.mean = Eigen::VectorXd::Zero(dim);
  for (const auto& s : samples) model.mean += s.values;
  model.mean /= double(n);

  Eigen::MatrixXd centered(dim, n);
  for (int i = 0; i < n; ++i) centered.col(i) = samples[size_t(i)].values - model.mean;

  const Eigen::MatrixXd gram = centered.transpose() * centered / double(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);

  const double lambda_max = std::max(0.0, eig.eigenvalues().maxCoeff());
  double sample_scale = 0.0;  // mean squared sample norm, the variance scale
  for (const auto& s : samples) sample_scale += s.values.squaredNorm();
  sample_scale /= double(n);
  // relative cutoff for rank, absolute floor against pure rounding noise
  const double cutoff = std::max({lambda_max * 1e-12, sample_scale * 1e-24, 1e-300});
  std::vector<int> keep;
  for (int i = n - 1; i >= 0; --i)  // descending
    if (eig.eigenvalues()[i] > cutoff) keep.push_back(i);
  const int m = int(keep.size());

  model.components.resize(dim, m);
  model.variances.resize(m);
  for (int k = 0; k < m; ++k) {
    const double lambda = eig.eigenvalues()[keep[size_t(k)]];
    model.variances[k] = lambda;
    const Eigen::VectorXd w = eig.eigenvectors().col(keep[size_t(k)]);
    Eigen::VectorXd dir = centered * w;
    model.components.col(k) = dir / dir.norm();
  }
  model.loadings = centered.transpose() * model.components;  // n x m
  for (int k = 0; k < m; ++k)
    detail::fix_sign(model.components.col(k), model.loadings.col(k));
  return model;
}

/// C = mean + components * b; b may use only the leading modes.
inline Eigen::VectorXd reconstruct(const MotionModel& model, const Eigen::VectorXd& b) {
  if (b.size() > model.mode_count())
    throw param_error("more coefficients than model modes");
  Eigen::VectorXd out = model.mean;
  if (b.size() > 0) out += model.components.leftCols(b.size()) * b;
  return out;
}

/// Percent of total variance captured by PC1..PC3 per frame model, in the
/// caller's row order. CSV matches the published loading-table layout.
inline std::string loadings_table(const std::vector<MotionModel>& models) {
  if (models.empty()) throw param_error("loadings_table needs at least one model");
  std::string csv = "label,PC1,PC2,PC3\n";
  for (const auto& model : models) {
    const double total = model.variances.size() ? model.variances.sum() : 0.0;
    csv += model.frame_label;
    for (int k = 0; k < 3; ++k) {
      const double pct =
          (total > 0.0 && k < model.mode_count()) ? 100.0 * model.variances[k] / total : 0.0;
      csv += "," + format_double(pct, 2);
    }
    csv += "\n";
  }
  return csv;
}

}  // namespace tma::pca
