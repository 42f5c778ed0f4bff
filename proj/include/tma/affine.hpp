#pragma once

#include <unsupported/Eigen/MatrixFunctions>

#include <vector>

#include "tma/interpolate.hpp"
#include "tma/ncc.hpp"
#include "tma/pyramid.hpp"

namespace tma::atlas {

/// 12-parameter affine map x -> A x + t in world coordinates.
struct AffineTransform {
  Matrix3<double> matrix = Matrix3<double>::Identity();
  Vector3d translation = Vector3d::Zero();

  static AffineTransform identity() { return {}; }

  Vector3d apply(const Vector3d& x) const { return matrix * x + translation; }

  AffineTransform inverse() const {
    if (std::abs(matrix.determinant()) <= 1e-9)
      throw param_error("affine matrix is singular");
    AffineTransform inv;
    inv.matrix = matrix.inverse();
    inv.translation = -inv.matrix * translation;
    return inv;
  }

  Eigen::Matrix4d homogeneous() const {
    Eigen::Matrix4d h = Eigen::Matrix4d::Identity();
    h.topLeftCorner<3, 3>() = matrix;
    h.topRightCorner<3, 1>() = translation;
    return h;
  }
  static AffineTransform from_homogeneous(const Eigen::Matrix4d& h) {
    AffineTransform t;
    t.matrix = h.topLeftCorner<3, 3>();
    t.translation = h.topRightCorner<3, 1>();
    return t;
  }
};

/// Pull-back resampling: out(x) = vol(T(x)).
template <class T>
Volume<T> resample(const Volume<T>& vol, const AffineTransform& t) {
  const auto& g = vol.geom;
  Volume<T> out(g);
  std::int64_t idx = 0;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i, ++idx)
        out.values[idx] = interpolate(vol, t.apply(g.voxel_center(i, j, k)));
  return out;
}

struct AffineConfig {
  int cc_radius = 2;
  int pyramid_levels = 3;
  int iterations_per_level = 60;
  int rounds = 3;                 // re-average / re-center passes
  int max_affine_dim = 32;        // finer pyramid levels are skipped
  double initial_step = 0.05;     // in normalized (unit-box) parameter units
  double min_step = 1e-5;
};

namespace detail {

// Gradient of the CC metric with respect to the affine parameters of the
// pull-back b(x) = vol(A (x - c) + c + t), via the chain rule on the
// voxelwise CC force. Coordinates are normalized by `radius_scale` so the
// matrix and translation entries step comparably.
// The 12 parameters in unit-box normalization: the map is
// x -> (I + M)(x - c) + c + s * u with coordinates scaled by the half
// extent s, so matrix entries and the translation step comparably.
struct AffineParams {
  Eigen::Matrix<double, 12, 1> p = Eigen::Matrix<double, 12, 1>::Zero();

  static AffineParams from(const AffineTransform& t, const Vector3d& c, double s) {
    AffineParams out;
    const Matrix3<double> M = t.matrix - Matrix3<double>::Identity();
    for (int r = 0; r < 3; ++r)
      for (int cc = 0; cc < 3; ++cc) out.p[3 * r + cc] = M(r, cc);
    out.p.tail<3>() = (t.matrix * c + t.translation - c) / s;
    return out;
  }
  AffineTransform to(const Vector3d& c, double s) const {
    AffineTransform t;
    for (int r = 0; r < 3; ++r)
      for (int cc = 0; cc < 3; ++cc) t.matrix(r, cc) += p[3 * r + cc];
    t.translation = c - t.matrix * c + s * p.tail<3>();
    return t;
  }
};

// Gradient-ascent registration of `moving` onto `fixed` with a numerical
// central-difference gradient of the windowed CC metric and a backtracking
// step. The metric landscape is cheap at the coarse levels where the
// affine stage runs.
inline AffineTransform register_affine(const Volume<double>& fixed_full,
                                       const Volume<double>& moving_full,
                                       AffineTransform t, const AffineConfig& cfg) {
  std::vector<Volume<double>> fpyr{fixed_full}, mpyr{moving_full};
  for (int l = 1; l < cfg.pyramid_levels; ++l) {
    if ((coarsen_geometry(fpyr.back().geom).dims.array() < 8).any()) break;
    fpyr.push_back(downsample(fpyr.back()));
    mpyr.push_back(downsample(mpyr.back()));
  }

  const auto& g = fixed_full.geom;
  const Vector3d center =
      g.origin + 0.5 * g.spacing.cwiseProduct((g.dims.array() - 1).cast<double>().matrix());
  const double radius_scale =
      0.5 * g.spacing.cwiseProduct(g.dims.cast<double>()).maxCoeff();

  for (int li = int(fpyr.size()) - 1; li >= 0; --li) {
    const auto& fixed = fpyr[size_t(li)];
    const auto& moving = mpyr[size_t(li)];
    if (fixed.geom.dims.maxCoeff() > cfg.max_affine_dim && li + 1 < int(fpyr.size()))
      continue;  // leave sub-voxel refinement at scale to the deformable stage

    auto value = [&](const AffineParams& params) {
      return cc_metric(fixed, resample(moving, params.to(center, radius_scale)),
                       cfg.cc_radius, false)
          .metric;
    };

    AffineParams params = AffineParams::from(t, center, radius_scale);
    double metric = value(params);
    double step = cfg.initial_step;
    const double eps = 1e-3;
    for (int it = 0; it < cfg.iterations_per_level && step > cfg.min_step; ++it) {
      Eigen::Matrix<double, 12, 1> grad;
      for (int d = 0; d < 12; ++d) {
        AffineParams plus = params, minus = params;
        plus.p[d] += eps;
        minus.p[d] -= eps;
        grad[d] = (value(plus) - value(minus)) / (2.0 * eps);
      }
      const double gn = grad.norm();
      if (gn == 0.0) break;
      AffineParams trial = params;
      trial.p += step / gn * grad;
      const double trial_metric = value(trial);
      if (trial_metric > metric) {
        params = trial;
        metric = trial_metric;
        step = std::min(step * 1.5, 4.0 * cfg.initial_step);
      } else {
        step *= 0.5;
      }
    }
    t = params.to(center, radius_scale);
  }
  return t;
}

// Subtract the log-mean so the cohort of affines stays centered on the
// identity.
inline void center_affines(std::vector<AffineTransform>& transforms) {
  Eigen::Matrix4d mean_log = Eigen::Matrix4d::Zero();
  std::vector<Eigen::Matrix4d> logs;
  for (const auto& t : transforms) {
    logs.push_back(Eigen::Matrix4d(t.homogeneous().log()));
    mean_log += logs.back();
  }
  mean_log /= double(transforms.size());
  for (size_t i = 0; i < transforms.size(); ++i)
    transforms[i] = AffineTransform::from_homogeneous(
        Eigen::Matrix4d((logs[i] - mean_log).exp()));
}

// Zero-mean / unit-variance inside the foreground (values above 2% of the
// peak), applied to the whole volume.
inline Volume<double> normalize_intensity(const Volume<double>& vol) {
  const double peak = vol.values.maxCoeff();
  const double thr = 0.02 * peak;
  double mean = 0.0;
  std::int64_t cnt = 0;
  for (std::int64_t i = 0; i < vol.values.size(); ++i)
    if (vol.values[i] > thr) {
      mean += vol.values[i];
      ++cnt;
    }
  if (cnt == 0) return vol;
  mean /= double(cnt);
  double var = 0.0;
  for (std::int64_t i = 0; i < vol.values.size(); ++i)
    if (vol.values[i] > thr) var += (vol.values[i] - mean) * (vol.values[i] - mean);
  var /= double(cnt);
  Volume<double> out(vol.geom);
  const double inv_sd = var > 0 ? 1.0 / std::sqrt(var) : 1.0;
  out.values = (vol.values - mean) * inv_sd;
  return out;
}

}  // namespace detail

/// Groupwise affine alignment: iteratively register every volume to the
/// running average and subtract the mean log-transform so the cohort stays
/// centered. Returned transforms are pull-back maps (common -> subject).
inline std::vector<AffineTransform> groupwise_affine(const std::vector<Volume<double>>& volumes,
                                                     const AffineConfig& cfg = {}) {
  if (volumes.size() < 2) throw param_error("groupwise_affine needs at least two volumes");
  for (const auto& v : volumes)
    require_same_geometry(v.geom, volumes[0].geom, "groupwise_affine");

  std::vector<Volume<double>> norm;
  norm.reserve(volumes.size());
  for (const auto& v : volumes) norm.push_back(detail::normalize_intensity(v));

  std::vector<AffineTransform> transforms(volumes.size());
  for (int round = 0; round < cfg.rounds; ++round) {
    Volume<double> average(volumes[0].geom);
    for (size_t i = 0; i < norm.size(); ++i)
      average.values += resample(norm[i], transforms[i]).values;
    average.values /= double(norm.size());

    for (size_t i = 0; i < norm.size(); ++i)
      transforms[i] = detail::register_affine(average, norm[i], transforms[i], cfg);
    detail::center_affines(transforms);
  }
  return transforms;
}

}  // namespace tma::atlas
