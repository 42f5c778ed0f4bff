#pragma once

#include <map>
#include <string>
#include <vector>

#include "tma/interpolate.hpp"
#include "tma/svf.hpp"

namespace tma::transport {

/// A subject's motion expressed in atlas material coordinates, defined on
/// the restricted region D.
struct TransportedMotion {
  VectorVolume<double> displacement;  // zero outside D
  RegionMask<double> region;
};

/// Conjugation: for each atlas voxel x in D,
///   y = atlas_map^-1(x), z = subject_motion(y), out = atlas_map(z),
/// stored as the displacement out - x. All maps are displacement fields
/// sampled trilinearly.
inline TransportedMotion conjugate(const DiffeoField& subject_motion,
                                   const DiffeoField& atlas_map,
                                   const RegionMask<double>& region) {
  require_same_geometry(subject_motion.geometry(), atlas_map.geometry(), "conjugate");
  require_same_geometry(region.geom, atlas_map.geometry(), "conjugate");
  const auto& g = region.geom;

  TransportedMotion out{VectorVolume<double>(g), region};
  std::int64_t idx = 0;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i, ++idx) {
        if (region.values[idx] <= 0.5) continue;
        const Vector3d x = g.voxel_center(i, j, k);
        const Vector3d y = x + sample_voxel(atlas_map.inverse, Vector3d(i, j, k));
        const Vector3d z = y + interpolate(subject_motion.forward, y);
        const Vector3d mapped = z + interpolate(atlas_map.forward, z);
        out.displacement.set(idx, mapped - x);
      }
  return out;
}

/// Per-subject, per-frame conjugation for a cohort. motions[i] holds the
/// tracked frames of subject_ids[i]; atlas_maps must cover every id.
inline std::vector<std::vector<TransportedMotion>> transport_cohort(
    const std::map<std::string, DiffeoField>& atlas_maps,
    const std::vector<std::string>& subject_ids,
    const std::vector<std::vector<DiffeoField>>& motions, const RegionMask<double>& region) {
  if (subject_ids.size() != motions.size())
    throw param_error("transport_cohort: one motion sequence per subject id");
  std::vector<std::vector<TransportedMotion>> out(subject_ids.size());
  for (size_t s = 0; s < subject_ids.size(); ++s) {
    const auto it = atlas_maps.find(subject_ids[s]);
    if (it == atlas_maps.end())
      throw manifest_error("transport_cohort: no atlas mapping for subject '" +
                           subject_ids[s] + "'");
    out[s].reserve(motions[s].size());
    for (const auto& frame : motions[s]) out[s].push_back(conjugate(frame, it->second, region));
  }
  return out;
}

}  // namespace tma::transport
