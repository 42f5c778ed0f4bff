#include <doctest.h>

#include "support/testutil.hpp"
#include "tma/phantom.hpp"
#include "tma/pvira.hpp"

using namespace tma;
using namespace tma::pvira;

namespace {

// Analytic wrapped linear phases along each axis, optionally translated.
std::array<PhasePair<double>, 3> linear_phases(const GridGeometry& g, double omega,
                                               const Vector3d& shift = Vector3d::Zero()) {
  std::array<PhasePair<double>, 3> out;
  for (int o = 0; o < 3; ++o) {
    out[size_t(o)].phase = Volume<double>(g);
    out[size_t(o)].magnitude = Volume<double>(g);
    out[size_t(o)].magnitude.values.setConstant(1.0);
    for (int k = 0; k < g.dims[2]; ++k)
      for (int j = 0; j < g.dims[1]; ++j)
        for (int i = 0; i < g.dims[0]; ++i)
          out[size_t(o)].phase(i, j, k) =
              harp::wrap(omega * (g.voxel_center(i, j, k)[o] - shift[o]));
  }
  return out;
}

Volume<double> full_mask(const GridGeometry& g) {
  Volume<double> m(g);
  m.values.setConstant(1.0);
  return m;
}

struct PhantomTracking {
  phantom::PhantomSpec spec;
  std::array<PhasePair<double>, 3> ref;
  std::vector<std::array<PhasePair<double>, 3>> frames;
  Volume<double> mask;
};

PhantomTracking phantom_phases(const phantom::PhantomSpec& spec,
                               const phantom::AnalyticDeformation& def) {
  PhantomTracking out;
  out.spec = spec;
  out.frames.resize(size_t(spec.frames - 1));
  Volume<double> mags[3];
  for (int o = 0; o < 3; ++o) {
    auto tagged = phantom::generate_tagged(spec, def, phantom::TagOrientation(o));
    auto pp0 = harp::extract_phase(tagged[0], o, spec.tag_period_mm);
    mags[o] = pp0.magnitude;
    out.ref[size_t(o)] = std::move(pp0);
    for (int t = 1; t < spec.frames; ++t)
      out.frames[size_t(t - 1)][size_t(o)] =
          harp::extract_phase(tagged[size_t(t)], o, spec.tag_period_mm);
  }
  out.mask = harp::combine_masks(mags[0], mags[1], mags[2]);
  return out;
}

}  // namespace

TEST_CASE("zero phase difference gives a zero update") {
  GridGeometry g = GridGeometry::isotropic(16, 1.875);
  auto phases = linear_phases(g, 2.0 * M_PI / 12.0);
  PhaseVolumes pv{phases, phases};
  PviraConfig cfg;
  auto dv = velocity_update(pv, DiffeoField::identity(g), cfg);
  CHECK(dv.vectors.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("the update uses phases only: magnitudes can be rescaled freely") {
  GridGeometry g = GridGeometry::isotropic(16, 1.875);
  auto ref = linear_phases(g, 2.0 * M_PI / 12.0);
  auto cur = linear_phases(g, 2.0 * M_PI / 12.0, Vector3d(1.0, 0.5, -0.25));
  PviraConfig cfg;
  PhaseVolumes pv{ref, cur};
  auto dv1 = velocity_update(pv, DiffeoField::identity(g), cfg);
  for (auto& p : pv.ref) p.magnitude.values *= 2.0;
  for (auto& p : pv.cur) p.magnitude.values *= 2.0;
  auto dv2 = velocity_update(pv, DiffeoField::identity(g), cfg);
  CHECK((dv1.vectors - dv2.vectors).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("the update is invariant to a constant phase offset before wrapping") {
  GridGeometry g = GridGeometry::isotropic(20, 1.875);
  const double w = 2.0 * M_PI / 12.0;
  auto ref = linear_phases(g, w);
  auto cur = linear_phases(g, w, Vector3d(1.2, -0.8, 0.4));
  PviraConfig cfg;
  auto dv1 = velocity_update({ref, cur}, DiffeoField::identity(g), cfg);

  const double c = 1.2345;
  for (auto* set : {&ref, &cur})
    for (auto& p : *set)
      for (std::int64_t i = 0; i < g.voxel_count(); ++i)
        p.phase.values[i] = harp::wrap(p.phase.values[i] + c);
  auto dv2 = velocity_update({ref, cur}, DiffeoField::identity(g), cfg);
  CHECK((dv1.vectors - dv2.vectors).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("a small translation along one axis is recovered by the outer loop") {
  GridGeometry g = GridGeometry::isotropic(32, 1.875);
  const double w = 2.0 * M_PI / 12.0;
  const Vector3d d(2.0, 0.0, 0.0);  // mm, about one voxel
  auto ref = linear_phases(g, w);
  auto cur = linear_phases(g, w, d);

  PviraConfig cfg;
  cfg.pyramid_levels = 1;
  cfg.iterations_per_level = 60;
  auto field = track_frame(ref, cur, full_mask(g), cfg, 1);

  // deep interior: the recovered displacement matches d
  double err = 0.0;
  int count = 0;
  for (int k = 8; k < 24; ++k)
    for (int j = 8; j < 24; ++j)
      for (int i = 8; i < 24; ++i) {
        const Vector3d u = field.forward.at(g.index(i, j, k));
        err += (u - d).norm();
        ++count;
      }
  err /= count;
  CHECK(err < 0.2);  // mm; one tenth of the translation
}

TEST_CASE("identity motion is a fixed point of tracking") {
  auto spec = phantom::PhantomSpec::centered(GridGeometry::isotropic(32, 1.875));
  spec.frames = 2;
  auto def = phantom::AnalyticDeformation::identity().with_constant_amplitude(2, 0.0);
  auto data = phantom_phases(spec, def);

  PviraConfig cfg;
  auto result = track(data.ref, data.frames, data.mask, cfg);
  REQUIRE(result.fields.size() == 1);
  const double rms = test::rms_vector_diff(result.fields[0].forward,
                                           VectorVolume<double>(spec.geometry), &data.mask) /
                     spec.geometry.min_spacing();
  CHECK(rms < 0.02);
}

TEST_CASE("a 1.5 voxel swirl is tracked to better than a third of a voxel") {
  auto spec = phantom::PhantomSpec::centered(GridGeometry::isotropic(32, 1.875));
  spec.frames = 2;
  const double h = spec.geometry.min_spacing();

  auto def = phantom::AnalyticDeformation::swirl_about(spec.ellipsoid_center,
                                                       Vector3d::UnitZ(), 0.55, 12.0, 14.0)
                 .with_constant_amplitude(2, 1.0);
  // scale the swirl so the true peak displacement is 1.5 voxels
  auto truth_raw = phantom::ground_truth_displacement(def, 1, spec.geometry);
  const double peak = truth_raw.vectors.rowwise().norm().maxCoeff();
  def.angle *= 1.5 * h / peak;
  auto truth = phantom::ground_truth_displacement(def, 1, spec.geometry);

  auto data = phantom_phases(spec, def);
  PviraConfig cfg;
  auto result = track(data.ref, data.frames, data.mask, cfg);

  const double rms_err =
      test::rms_vector_diff(result.fields[0].forward, truth, &data.mask) / h;
  CHECK(rms_err < 1.0 / 3.0);

  // inverse consistency inside the mask
  auto round = compose_displacements(result.fields[0].forward, result.fields[0].inverse);
  const double inv_rms =
      test::rms_vector_diff(round, VectorVolume<double>(spec.geometry), &data.mask) / h;
  CHECK(inv_rms < 0.1);

  // masked Jacobian determinant stays near 1 for incompressible motion
  auto det = jacobian_determinant(result.fields[0].forward);
  auto interior = erode(data.mask, 1);
  double lo = 1e9, hi = -1e9;
  for (std::int64_t i = 0; i < det.values.size(); ++i)
    if (interior.values[i] > 0.5) {
      lo = std::min(lo, det.values[i]);
      hi = std::max(hi, det.values[i]);
    }
  CHECK(lo > 0.95);
  CHECK(hi < 1.05);
}

TEST_CASE("tag fade and noise do not break the error bound") {
  auto spec = phantom::PhantomSpec::centered(GridGeometry::isotropic(32, 1.875));
  spec.frames = 2;
  spec.fade_per_frame = 0.7;
  spec.noise_sigma = 0.04;  // 2% of the [-1,1] intensity range
  spec.seed = 99;
  const double h = spec.geometry.min_spacing();

  auto def = phantom::AnalyticDeformation::swirl_about(spec.ellipsoid_center,
                                                       Vector3d::UnitZ(), 0.4, 12.0, 14.0)
                 .with_constant_amplitude(2, 1.0);
  auto truth_raw = phantom::ground_truth_displacement(def, 1, spec.geometry);
  def.angle *= 1.5 * h / truth_raw.vectors.rowwise().norm().maxCoeff();
  auto truth = phantom::ground_truth_displacement(def, 1, spec.geometry);

  auto data = phantom_phases(spec, def);
  PviraConfig cfg;
  auto result = track(data.ref, data.frames, data.mask, cfg);
  const double rms_err =
      test::rms_vector_diff(result.fields[0].forward, truth, &data.mask) / h;
  CHECK(rms_err < 1.0 / 3.0);
}

TEST_CASE("track rejects an empty frame list") {
  GridGeometry g = GridGeometry::isotropic(16, 1.875);
  auto phases = linear_phases(g, 2.0 * M_PI / 12.0);
  CHECK_THROWS_AS(track(phases, {}, full_mask(g), PviraConfig{}), param_error);
}
