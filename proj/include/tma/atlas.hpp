#pragma once

#include <map>
#include <string>
#include <vector>

#include "tma/affine.hpp"
#include "tma/gaussian.hpp"
#include "tma/svf.hpp"

namespace tma::atlas {

/// Reference template plus per-subject mappings. forward = phi_i (subject
/// -> atlas), inverse = phi_i^-1 (atlas -> subject); both are displacement
/// fields on the shared grid and fold in the affine initialization.
struct Atlas {
  Volume<double> template_volume;
  std::vector<std::string> subject_ids;
  std::vector<DiffeoField> mappings;
  double mean_inverse_rms_voxels = 0.0;  // unbiasedness diagnostic

  const DiffeoField& mapping_for(const std::string& id) const {
    for (size_t i = 0; i < subject_ids.size(); ++i)
      if (subject_ids[i] == id) return mappings[i];
    throw manifest_error("atlas has no mapping for subject '" + id + "'");
  }
};

struct AtlasConfig {
  AffineConfig affine;
  int cc_radius = 2;
  int pyramid_levels = 3;
  int iterations_per_level = 30;
  int template_iterations = 4;
  double step_voxels = 0.4;        // largest update step per iteration
  double fluid_sigma_voxels = 1.0;
  double diffusion_sigma_voxels = 0.5;
  double convergence_tol = 1e-4;   // metric gain per iteration
};

struct AtlasConvergenceRecord {
  int round = 0;
  std::string subject;
  int level = 0;
  int iteration = 0;
  double metric = 0.0;
};

namespace detail {

// One SVF demons registration of `moving` onto `fixed` driven by the CC
// force; returns the stationary velocity (fixed -> moving pull map).
inline VectorVolume<double> register_deformable(
    const Volume<double>& fixed_full, const Volume<double>& moving_full,
    VectorVolume<double> velocity, const AtlasConfig& cfg, int round,
    const std::string& subject, std::vector<AtlasConvergenceRecord>* log) {
  std::vector<Volume<double>> fpyr{fixed_full}, mpyr{moving_full};
  for (int l = 1; l < cfg.pyramid_levels; ++l) {
    if ((coarsen_geometry(fpyr.back().geom).dims.array() < 8).any()) break;
    fpyr.push_back(downsample(fpyr.back()));
    mpyr.push_back(downsample(mpyr.back()));
  }

  for (int li = int(fpyr.size()) - 1; li >= 0; --li) {
    const auto& fixed = fpyr[size_t(li)];
    const auto& moving = mpyr[size_t(li)];
    const auto& g = fixed.geom;
    if (velocity.geom.voxel_count() == 0)
      velocity = VectorVolume<double>(g);
    else if (velocity.geom != g)
      velocity = resample_field(velocity, g);

    const double max_step_mm = cfg.step_voxels * g.min_spacing();
    double best_metric = -2.0;
    VectorVolume<double> best_v = velocity;
    int stalled = 0;
    for (int it = 0; it < cfg.iterations_per_level; ++it) {
      const VectorVolume<double> disp = exponentiate_velocity(velocity);
      const Volume<double> warped = warp(moving, disp);
      CcResult cc = cc_metric(fixed, warped, cfg.cc_radius);
      if (log) log->push_back({round, subject, li, it, cc.metric});

      if (cc.metric > best_metric + cfg.convergence_tol) {
        best_metric = cc.metric;
        best_v = velocity;
        stalled = 0;
      } else if (++stalled >= 4) {
        velocity = best_v;
        break;
      }

      const double peak = cc.force.vectors.rowwise().norm().maxCoeff();
      if (peak == 0.0) break;
      cc.force.vectors *= max_step_mm / peak;
      gaussian_smooth_inplace(cc.force, cfg.fluid_sigma_voxels);
      velocity.vectors += cc.force.vectors;
      gaussian_smooth_inplace(velocity, cfg.diffusion_sigma_voxels);
    }
  }
  return velocity;
}

}  // namespace detail

/// Unbiased groupwise template construction. Each round registers every
/// affine-initialized subject to the running template with a stationary
/// velocity field, re-averages the warped subjects, and removes the mean
/// velocity so no subject drags the template toward itself.
inline Atlas groupwise_deformable(const std::vector<Volume<double>>& volumes,
                                  const std::vector<std::string>& ids,
                                  const std::vector<AffineTransform>& affines,
                                  const AtlasConfig& cfg = {},
                                  std::vector<AtlasConvergenceRecord>* log = nullptr) {
  if (volumes.size() < 2) throw param_error("groupwise_deformable needs at least two volumes");
  if (volumes.size() != affines.size() || volumes.size() != ids.size())
    throw param_error("groupwise_deformable: volumes, ids and affines must align");
  const GridGeometry& g = volumes[0].geom;
  for (const auto& v : volumes) require_same_geometry(v.geom, g, "groupwise_deformable");

  const int n = int(volumes.size());
  std::vector<Volume<double>> aligned;  // affine-resampled, intensity-normalized
  aligned.reserve(volumes.size());
  for (size_t i = 0; i < volumes.size(); ++i)
    aligned.push_back(resample(detail::normalize_intensity(volumes[i]), affines[i]));

  Volume<double> tmpl(g);
  for (const auto& v : aligned) tmpl.values += v.values;
  tmpl.values /= double(n);

  std::vector<VectorVolume<double>> velocities(static_cast<size_t>(n));
  for (int round = 0; round < cfg.template_iterations; ++round) {
    for (int i = 0; i < n; ++i)
      velocities[size_t(i)] = detail::register_deformable(tmpl, aligned[size_t(i)],
                                                          velocities[size_t(i)], cfg, round,
                                                          ids[size_t(i)], log);
    // mean velocity -> zero: recenter subjects and counter-warp the template
    VectorVolume<double> mean_v(g);
    for (const auto& v : velocities) mean_v.vectors += v.vectors;
    mean_v.vectors /= double(n);
    for (auto& v : velocities) v.vectors -= mean_v.vectors;

    Volume<double> avg(g);
    for (int i = 0; i < n; ++i)
      avg.values += warp(aligned[size_t(i)], exponentiate_velocity(velocities[size_t(i)])).values;
    avg.values /= double(n);
    tmpl = avg;
  }

  Atlas atlas;
  atlas.template_volume = tmpl;
  atlas.subject_ids = ids;

  // fold affine and deformable parts into total mappings on the grid
  VectorVolume<double> mean_inverse(g);
  for (int i = 0; i < n; ++i) {
    const DiffeoField dfm = exponentiate(velocities[size_t(i)]);
    const AffineTransform& aff = affines[size_t(i)];
    const AffineTransform aff_inv = aff.inverse();
    DiffeoField total(g);
    std::int64_t idx = 0;
    for (int k = 0; k < g.dims[2]; ++k)
      for (int j = 0; j < g.dims[1]; ++j)
        for (int i2 = 0; i2 < g.dims[0]; ++i2, ++idx) {
          const Vector3d x = g.voxel_center(i2, j, k);
          // phi^-1: atlas -> subject = affine after the deformable pull
          const Vector3d y = x + dfm.forward.vectors.row(idx).transpose();
          total.inverse.set(idx, aff.apply(y) - x);
          // phi: subject -> atlas = deformable inverse after the affine undo
          const Vector3d z = aff_inv.apply(x);
          total.forward.set(idx, z + interpolate(dfm.inverse, z) - x);
        }
    mean_inverse.vectors += total.inverse.vectors;
    atlas.mappings.push_back(std::move(total));
  }
  mean_inverse.vectors /= double(n);
  atlas.mean_inverse_rms_voxels =
      std::sqrt(mean_inverse.vectors.rowwise().squaredNorm().mean()) / g.min_spacing();
  return atlas;
}

/// Convenience wrapper: affine initialization followed by the deformable
/// template loop.
inline Atlas build_atlas(const std::vector<Volume<double>>& volumes,
                         const std::vector<std::string>& ids, const AtlasConfig& cfg = {},
                         std::vector<AtlasConvergenceRecord>* log = nullptr) {
  const auto affines = groupwise_affine(volumes, cfg.affine);
  return groupwise_deformable(volumes, ids, affines, cfg, log);
}

}  // namespace tma::atlas
