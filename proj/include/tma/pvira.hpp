#pragma once

#include <array>
#include <iostream>
#include <string>
#include <vector>

#include "tma/finite_difference.hpp"
#include "tma/gaussian.hpp"
#include "tma/harp.hpp"
#include "tma/helmholtz.hpp"
#include "tma/pyramid.hpp"
#include "tma/svf.hpp"

namespace tma::pvira {

using harp::PhasePair;

/// Reference/current phase pairs for the three tag orientations. Index
/// order matches TagOrientation: 0 axial, 1 sagittal, 2 coronal.
struct PhaseVolumes {
  std::array<PhasePair<double>, 3> ref;
  std::array<PhasePair<double>, 3> cur;
};

struct PviraConfig {
  double normalization_k = 0.0;       // mm^2; 0 -> (mean voxel spacing)^2 per level
  double fluid_sigma_mm = -1.0;       // <0 -> one voxel at the level
  double diffusion_sigma_mm = -1.0;   // <0 -> one voxel at the level
  int iterations_per_level = 50;
  int pyramid_levels = 3;
  double incompressibility_tolerance = 0.05;  // mean |div| (1/frame) inside mask
  double epsilon_scale = 1e-12;       // denominator guard = epsilon_scale * K
  bool mask_updates = true;           // damp updates by the tissue weight
  double convergence_tol_voxels = 2e-3;

  void validate() const {
    if (normalization_k < 0.0) throw param_error("normalization K must be >= 0");
    if (iterations_per_level < 1) throw param_error("iterations per level must be >= 1");
    if (pyramid_levels < 1) throw param_error("pyramid levels must be >= 1");
  }

  double resolved_k(const GridGeometry& g) const {
    return normalization_k > 0.0 ? normalization_k
                                 : g.mean_spacing() * g.mean_spacing();
  }
  double resolved_fluid_sigma_voxels(const GridGeometry& g) const {
    return fluid_sigma_mm < 0.0 ? 1.0 : fluid_sigma_mm / g.mean_spacing();
  }
  double resolved_diffusion_sigma_voxels(const GridGeometry& g) const {
    return diffusion_sigma_mm < 0.0 ? 0.5 : diffusion_sigma_mm / g.mean_spacing();
  }
};

/// One symmetric demons step on wrapped phases.
/// Per voxel, with d_o = W(phi_o0 - phi_ot) and g_o the sum of the wrapped
/// gradients of the two phases:
///   dv = sum_o d_o g_o / (sum_o |g_o|^2 + sum_o d_o^2 / K),
/// zero wherever the denominator falls under the epsilon guard. The time-t
/// phases are resampled through current_warp first so both gradients are
/// evaluated at corresponding points; magnitudes are not used.
inline VectorVolume<double> velocity_update(const PhaseVolumes& phases,
                                            const DiffeoField& current_warp,
                                            const PviraConfig& cfg) {
  const GridGeometry& g = phases.ref[0].phase.geom;
  for (int o = 0; o < 3; ++o) {
    require_same_geometry(phases.ref[size_t(o)].phase.geom, g, "velocity_update");
    require_same_geometry(phases.cur[size_t(o)].phase.geom, g, "velocity_update");
  }
  require_same_geometry(current_warp.geometry(), g, "velocity_update");

  const double K = cfg.resolved_k(g);
  const double eps = cfg.epsilon_scale * K;

  VectorVolume<double> numer(g);
  Volume<double> alpha1(g), alpha2(g);
  for (int o = 0; o < 3; ++o) {
    const Volume<double> warped = harp::warp_phase(phases.cur[size_t(o)].phase,
                                                   current_warp.forward);
    const VectorVolume<double> grad_ref = harp::wrapped_gradient(phases.ref[size_t(o)].phase);
    const VectorVolume<double> grad_cur = harp::wrapped_gradient(warped);
    for (std::int64_t i = 0; i < g.voxel_count(); ++i) {
      const double d = harp::wrap(phases.ref[size_t(o)].phase.values[i] - warped.values[i]);
      const Eigen::RowVector3d gsum = grad_ref.vectors.row(i) + grad_cur.vectors.row(i);
      numer.vectors.row(i) += d * gsum;
      alpha1.values[i] += gsum.squaredNorm();
      alpha2.values[i] += d * d;
    }
  }

  VectorVolume<double> dv(g);
  for (std::int64_t i = 0; i < g.voxel_count(); ++i) {
    const double denom = alpha1.values[i] + alpha2.values[i] / K;
    if (denom >= eps) dv.vectors.row(i) = numer.vectors.row(i) / denom;
  }
  return dv;
}

struct ConvergenceRecord {
  int frame = 0;
  int level = 0;
  int iteration = 0;
  double update_rms_voxels = 0.0;
  double mean_abs_div = 0.0;
};

struct TrackResult {
  std::vector<DiffeoField> fields;  // one per tracked frame (t = 1..T-1)
  std::vector<ConvergenceRecord> log;
  std::vector<std::string> warnings;
};

namespace detail {

struct Level {
  PhaseVolumes phases;
  Volume<double> mask;
};

// 90th percentile of the masked wrapped-gradient magnitude of the
// reference phases: an estimate of the tag frequency, used to drop pyramid
// levels whose spacing would alias the tags.
inline double estimate_phase_frequency(const std::array<PhasePair<double>, 3>& ref,
                                       const Volume<double>& mask) {
  std::vector<double> mags;
  for (const auto& pp : ref) {
    const auto grad = harp::wrapped_gradient(pp.phase);
    for (std::int64_t i = 0; i < grad.vectors.rows(); ++i)
      if (mask.values[i] > 0.5) mags.push_back(grad.vectors.row(i).norm());
  }
  if (mags.empty()) return 0.0;
  std::nth_element(mags.begin(), mags.begin() + std::ptrdiff_t(0.9 * mags.size()), mags.end());
  return mags[size_t(0.9 * mags.size())];
}

inline double masked_rms_voxels(const VectorVolume<double>& v, const Volume<double>& mask) {
  double acc = 0.0, wsum = 0.0;
  for (std::int64_t i = 0; i < v.vectors.rows(); ++i) {
    acc += mask.values[i] * v.vectors.row(i).squaredNorm();
    wsum += mask.values[i];
  }
  return wsum > 0 ? std::sqrt(acc / wsum) / v.geom.min_spacing() : 0.0;
}

inline double masked_mean_abs_div(const VectorVolume<double>& v, const Volume<double>& mask) {
  const Volume<double> div = divergence(v);
  double acc = 0.0, wsum = 0.0;
  for (std::int64_t i = 0; i < div.values.size(); ++i) {
    acc += mask.values[i] * std::abs(div.values[i]);
    wsum += mask.values[i];
  }
  return wsum > 0 ? acc / wsum : 0.0;
}

}  // namespace detail

/// Track one frame pair: multi-resolution loop of
///   velocity update -> accumulate -> fluid smooth -> incompressibility
///   projection -> diffusion smooth -> exponentiate.
/// Levels that would alias the tag frequency are skipped. Returns forward
/// (reference -> frame t) and inverse maps.
inline DiffeoField track_frame(const std::array<PhasePair<double>, 3>& ref,
                               const std::array<PhasePair<double>, 3>& cur,
                               const Volume<double>& tissue_mask, const PviraConfig& cfg,
                               int frame_index, std::vector<ConvergenceRecord>* log = nullptr,
                               std::vector<std::string>* warnings = nullptr) {
  cfg.validate();
  const GridGeometry& fine = ref[0].phase.geom;
  require_same_geometry(tissue_mask.geom, fine, "track_frame");

  // build the pyramid, coarsest last
  std::vector<detail::Level> levels(1);
  levels[0].phases = PhaseVolumes{ref, cur};
  levels[0].mask = tissue_mask;
  const double omega = detail::estimate_phase_frequency(ref, tissue_mask);
  for (int l = 1; l < cfg.pyramid_levels; ++l) {
    const auto& prev = levels.back();
    const GridGeometry cg = coarsen_geometry(prev.phases.ref[0].phase.geom);
    if ((cg.dims.array() < 8).any()) break;
    if (omega * cg.max_spacing() > 0.9 * M_PI) break;  // tags alias at this level
    detail::Level next;
    for (int o = 0; o < 3; ++o) {
      next.phases.ref[size_t(o)] = downsample_phase_pair(prev.phases.ref[size_t(o)]);
      next.phases.cur[size_t(o)] = downsample_phase_pair(prev.phases.cur[size_t(o)]);
    }
    next.mask = downsample(prev.mask);
    levels.push_back(std::move(next));
  }

  VectorVolume<double> v;  // velocity accumulated across levels
  for (int li = int(levels.size()) - 1; li >= 0; --li) {
    const detail::Level& lv = levels[size_t(li)];
    const GridGeometry& g = lv.phases.ref[0].phase.geom;
    if (v.geom.voxel_count() == 0)
      v = VectorVolume<double>(g);
    else if (v.geom != g)
      v = resample_field(v, g);

    const double sf = cfg.resolved_fluid_sigma_voxels(g);
    const double sd = cfg.resolved_diffusion_sigma_voxels(g);

    double best_rms = std::numeric_limits<double>::infinity();
    double prev_rms = std::numeric_limits<double>::infinity();
    VectorVolume<double> best_v = v;
    int rising = 0;
    for (int it = 0; it < cfg.iterations_per_level; ++it) {
      const DiffeoField warp(exponentiate_velocity(v), VectorVolume<double>(g));
      VectorVolume<double> dv = velocity_update(lv.phases, warp, cfg);
      if (cfg.mask_updates)
        for (int c = 0; c < 3; ++c) dv.vectors.col(c).array() *= lv.mask.values;

      const double rms = detail::masked_rms_voxels(dv, lv.mask);
      gaussian_smooth_inplace(dv, sf);  // fluid: regularize the update
      v.vectors += dv.vectors;
      v = incompressibility_project(v, lv.mask);
      gaussian_smooth_inplace(v, sd);   // diffusion: regularize the field

      if (log)
        log->push_back({frame_index, li, it, rms, detail::masked_mean_abs_div(v, lv.mask)});
      if (rms < best_rms) {
        best_rms = rms;
        best_v = v;
        rising = 0;
      } else if (++rising >= 5) {
        if (warnings)
          warnings->push_back("frame " + std::to_string(frame_index) + " level " +
                              std::to_string(li) +
                              ": update norm stopped decreasing; keeping best iterate");
        v = best_v;
        break;
      }
      if (rms < cfg.convergence_tol_voxels) break;
      prev_rms = rms;
    }
    (void)prev_rms;
  }

  return exponentiate(v);
}

/// Full sequence: frame 0 is the undeformed reference; every later frame is
/// tracked against it independently.
inline TrackResult track(const std::array<PhasePair<double>, 3>& ref,
                         const std::vector<std::array<PhasePair<double>, 3>>& frames,
                         const Volume<double>& tissue_mask, const PviraConfig& cfg) {
  if (frames.empty()) throw param_error("track needs at least one frame beyond the reference");
  TrackResult result;
  result.fields.reserve(frames.size());
  for (size_t t = 0; t < frames.size(); ++t)
    result.fields.push_back(track_frame(ref, frames[t], tissue_mask, cfg, int(t) + 1,
                                        &result.log, &result.warnings));
  return result;
}

}  // namespace tma::pvira
