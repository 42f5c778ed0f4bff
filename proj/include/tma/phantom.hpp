#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "tma/error.hpp"
#include "tma/volume.hpp"

namespace tma::phantom {

enum class DeformationKind {
  translation,
  rigid_rotation,
  incompressible_shear,
  divergence_free_swirl,
};

inline const char* to_string(DeformationKind k) {
  switch (k) {
    case DeformationKind::translation: return "translation";
    case DeformationKind::rigid_rotation: return "rigid-rotation";
    case DeformationKind::incompressible_shear: return "incompressible-shear";
    case DeformationKind::divergence_free_swirl: return "divergence-free-swirl";
  }
  return "?";
}

/// A family of closed-form diffeomorphisms x -> f(x; amplitude) with exact
/// inverse and Jacobian. Every kind here preserves volume: det J == 1
/// analytically at any point and amplitude.
struct AnalyticDeformation {
  DeformationKind kind = DeformationKind::translation;

  Vector3d direction = Vector3d::Zero();   // translation at amplitude 1 (mm)
  Vector3d center = Vector3d::Zero();      // rotation/shear/swirl center (mm)
  Vector3d axis = Vector3d::UnitZ();       // rotation/swirl axis (unit)
  double angle = 0.0;                      // rotation/swirl angle at amplitude 1 (rad)
  double shear = 0.0;                      // shear coefficient at amplitude 1
  Vector3d shear_dir = Vector3d::UnitX();    // s, displacement direction (unit)
  Vector3d shear_normal = Vector3d::UnitY(); // g, graded coordinate (unit), s._|_ g
  double swirl_radius = 10.0;              // in-plane Gaussian radius (mm)
  double swirl_height = 10.0;              // along-axis Gaussian extent (mm)

  std::vector<double> schedule;            // amplitude per frame; schedule[0] == 0

  static AnalyticDeformation translation_of(const Vector3d& d) {
    AnalyticDeformation a;
    a.kind = DeformationKind::translation;
    a.direction = d;
    return a;
  }
  static AnalyticDeformation rotation_about(const Vector3d& center, const Vector3d& axis,
                                            double angle_rad) {
    AnalyticDeformation a;
    a.kind = DeformationKind::rigid_rotation;
    a.center = center;
    a.axis = axis.normalized();
    a.angle = angle_rad;
    return a;
  }
  static AnalyticDeformation shear_of(const Vector3d& center, const Vector3d& graded_normal,
                                      const Vector3d& displacement_dir, double gamma) {
    AnalyticDeformation a;
    a.kind = DeformationKind::incompressible_shear;
    a.center = center;
    a.shear_normal = graded_normal.normalized();
    // project out any component along the normal so s._|_ g holds exactly
    Vector3d s = displacement_dir - displacement_dir.dot(a.shear_normal) * a.shear_normal;
    a.shear_dir = s.normalized();
    a.shear = gamma;
    return a;
  }
  static AnalyticDeformation swirl_about(const Vector3d& center, const Vector3d& axis,
                                         double angle_rad, double radius_mm,
                                         double height_mm) {
    AnalyticDeformation a;
    a.kind = DeformationKind::divergence_free_swirl;
    a.center = center;
    a.axis = axis.normalized();
    a.angle = angle_rad;
    a.swirl_radius = radius_mm;
    a.swirl_height = height_mm;
    return a;
  }
  static AnalyticDeformation identity() { return translation_of(Vector3d::Zero()); }

  /// Linear 0 -> peak amplitude ramp over `frames` frames.
  AnalyticDeformation& with_linear_ramp(int frames, double peak = 1.0) {
    schedule.resize(size_t(frames));
    for (int t = 0; t < frames; ++t)
      schedule[size_t(t)] = frames > 1 ? peak * t / double(frames - 1) : 0.0;
    return *this;
  }
  AnalyticDeformation& with_constant_amplitude(int frames, double amp) {
    schedule.assign(size_t(frames), amp);
    if (!schedule.empty()) schedule[0] = 0.0;
    return *this;
  }

  double amplitude(int t) const {
    if (t < 0 || size_t(t) >= schedule.size())
      throw param_error("frame index outside the amplitude schedule");
    return schedule[size_t(t)];
  }

  // swirl angle phi(q) = amp * angle * exp(-(r/rho)^2) * exp(-(z/zeta)^2),
  // with r the in-plane distance from the axis and z the along-axis offset.
  double swirl_angle(const Vector3d& q, double amp) const {
    const double z = axis.dot(q);
    const double r2 = (q - z * axis).squaredNorm();
    return amp * angle * std::exp(-r2 / (swirl_radius * swirl_radius)) *
           std::exp(-(z * z) / (swirl_height * swirl_height));
  }

  Vector3d forward(const Vector3d& x, double amp) const {
    switch (kind) {
      case DeformationKind::translation:
        return x + amp * direction;
      case DeformationKind::rigid_rotation:
        return center + Eigen::AngleAxisd(amp * angle, axis) * (x - center);
      case DeformationKind::incompressible_shear:
        return x + amp * shear * (x - center).dot(shear_normal) * shear_dir;
      case DeformationKind::divergence_free_swirl: {
        const Vector3d q = x - center;
        return center + Eigen::AngleAxisd(swirl_angle(q, amp), axis) * q;
      }
    }
    return x;
  }

  /// Exact inverse: all kinds leave the quantities their own parameters
  /// depend on invariant, so the inverse is the forward map negated.
  Vector3d inverse(const Vector3d& x, double amp) const {
    switch (kind) {
      case DeformationKind::translation:
        return x - amp * direction;
      case DeformationKind::rigid_rotation:
        return center + Eigen::AngleAxisd(-amp * angle, axis) * (x - center);
      case DeformationKind::incompressible_shear:
        return x - amp * shear * (x - center).dot(shear_normal) * shear_dir;
      case DeformationKind::divergence_free_swirl: {
        const Vector3d q = x - center;  // r and z are rotation invariants
        return center + Eigen::AngleAxisd(-swirl_angle(q, amp), axis) * q;
      }
    }
    return x;
  }

  Matrix3<double> jacobian(const Vector3d& x, double amp) const {
    switch (kind) {
      case DeformationKind::translation:
        return Matrix3<double>::Identity();
      case DeformationKind::rigid_rotation:
        return Eigen::AngleAxisd(amp * angle, axis).toRotationMatrix();
      case DeformationKind::incompressible_shear:
        return Matrix3<double>::Identity() +
               amp * shear * shear_dir * shear_normal.transpose();
      case DeformationKind::divergence_free_swirl: {
        const Vector3d q = x - center;
        const double z = axis.dot(q);
        const Vector3d p = q - z * axis;
        const double phi = swirl_angle(q, amp);
        const Matrix3<double> R = Eigen::AngleAxisd(phi, axis).toRotationMatrix();
        // grad phi = phi * (-2 p / rho^2 - 2 z n / zeta^2)
        const Vector3d grad_phi = phi * (-2.0 / (swirl_radius * swirl_radius) * p -
                                         2.0 * z / (swirl_height * swirl_height) * axis);
        // d/dphi [R(phi) q] = axis x (R q)
        const Vector3d dq = axis.cross(R * q);
        return R + dq * grad_phi.transpose();
      }
    }
    return Matrix3<double>::Identity();
  }
};

/// Synthetic cohort description; defaults follow the desk-scale grid the
/// test suite runs at (64^3 voxels, 1.875 mm isotropic, 12 mm tag period).
struct PhantomSpec {
  GridGeometry geometry = GridGeometry::isotropic(64, 1.875);
  double tag_period_mm = 12.0;
  Vector3d ellipsoid_center = Vector3d(59.0625, 59.0625, 59.0625);  // grid center (mm)
  Vector3d ellipsoid_radii = Vector3d(42.0, 36.0, 33.0);
  double shell_width = 0.3;      // smoothstep band as a fraction of the radius
  double noise_sigma = 0.0;      // absolute intensity units (tags span [-1, 1])
  double fade_per_frame = 1.0;   // tag amplitude multiplier per frame
  int frames = 8;
  std::uint64_t seed = 0;

  void validate() const {
    geometry.require_valid();
    if (!(tag_period_mm > 2.0 * geometry.max_spacing()))
      throw param_error("tag period must exceed twice the largest voxel spacing");
    if (frames < 1) throw param_error("frame count must be >= 1");
    if (!(fade_per_frame > 0.0)) throw param_error("fade factor must be > 0");
    if (noise_sigma < 0.0) throw param_error("noise sigma must be >= 0");
    if (!(ellipsoid_radii.array() > 0.0).all())
      throw param_error("ellipsoid radii must be > 0");
    if (!(shell_width > 0.0 && shell_width < 1.0))
      throw param_error("shell width must lie in (0,1)");
  }

  static PhantomSpec centered(const GridGeometry& g) {
    PhantomSpec s;
    s.geometry = g;
    const Vector3d extent = g.spacing.cwiseProduct((g.dims.array() - 1).cast<double>().matrix());
    s.ellipsoid_center = g.origin + 0.5 * extent;
    s.ellipsoid_radii = 0.35 * extent;
    return s;
  }
};

enum class TagOrientation { axial = 0, sagittal = 1, coronal = 2 };

inline int tag_axis(TagOrientation o) { return int(o); }

inline char orientation_letter(TagOrientation o) {
  return o == TagOrientation::axial ? 'a' : o == TagOrientation::sagittal ? 's' : 'c';
}

inline TagOrientation orientation_from_letter(char c) {
  switch (c) {
    case 'a': return TagOrientation::axial;
    case 's': return TagOrientation::sagittal;
    case 'c': return TagOrientation::coronal;
  }
  throw param_error(std::string("unknown tag orientation '") + c + "'");
}

namespace detail {

// C2 quintic smoothstep on [0,1].
inline double smoothstep5(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

inline std::mt19937_64 frame_rng(const PhantomSpec& spec, int stream, int t) {
  return std::mt19937_64(spec.seed * 0x9E3779B97F4A7C15ULL + std::uint64_t(stream) * 1000003ULL +
                         std::uint64_t(t));
}

}  // namespace detail

/// Smooth ellipsoidal tissue envelope: 1 inside, 0 outside, C2 smoothstep
/// shell in between.
inline double tissue_envelope(const PhantomSpec& spec, const Vector3d& x) {
  const double rho = ((x - spec.ellipsoid_center).cwiseQuotient(spec.ellipsoid_radii)).norm();
  return detail::smoothstep5((1.0 - rho) / spec.shell_width);
}

inline Volume<double> tissue_mask_truth(const PhantomSpec& spec) {
  Volume<double> m(spec.geometry);
  const auto& g = spec.geometry;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i)
        m(i, j, k) = tissue_envelope(spec, g.voxel_center(i, j, k)) >= 0.5 ? 1.0 : 0.0;
  return m;
}

/// Untagged anatomy: the envelope modulated by a smooth interior pattern.
/// The low-frequency lattice keeps local windows curved (locally affine
/// intensity is degenerate for normalized correlation) and the off-center
/// bumps break rotational symmetry.
inline double cine_intensity(const PhantomSpec& spec, const Vector3d& x) {
  const double env = tissue_envelope(spec, x);
  if (env == 0.0) return 0.0;
  const Vector3d q = (x - spec.ellipsoid_center).cwiseQuotient(spec.ellipsoid_radii);
  double tex = 0.55 + 0.18 * q[2] + 0.08 * q[0] * q[1];
  tex += 0.22 * std::cos(2.6 * M_PI * q[0] + 0.4) * std::cos(2.2 * M_PI * q[1] - 0.2) *
         std::cos(1.8 * M_PI * q[2] + 0.7);
  const Vector3d b1(0.45, 0.2, -0.1), b2(-0.35, -0.3, 0.25), b3(0.0, 0.45, 0.35);
  tex += 0.35 * std::exp(-(q - b1).squaredNorm() / 0.045);
  tex -= 0.30 * std::exp(-(q - b2).squaredNorm() / 0.06);
  tex += 0.28 * std::exp(-(q - b3).squaredNorm() / 0.05);
  return env * tex;
}

/// Tagged frames: frame 0 is envelope * cos(w x_axis); frame t carries the
/// material pattern through the deformation and fades by fade^t. Everything
/// is evaluated in closed form, so material intensity conservation is exact
/// up to the additive noise.
inline std::vector<Volume<double>> generate_tagged(const PhantomSpec& spec,
                                                   const AnalyticDeformation& def,
                                                   TagOrientation orientation) {
  spec.validate();
  if (int(def.schedule.size()) < spec.frames)
    throw param_error("deformation schedule shorter than the frame count");
  const auto& g = spec.geometry;
  const int axis = tag_axis(orientation);
  const double omega = 2.0 * M_PI / spec.tag_period_mm;

  auto frame0 = [&](const Vector3d& x) {
    return tissue_envelope(spec, x) * std::cos(omega * x[axis]);
  };

  std::vector<Volume<double>> frames;
  frames.reserve(size_t(spec.frames));
  for (int t = 0; t < spec.frames; ++t) {
    Volume<double> vol(g);
    const double amp = def.amplitude(t);
    const double fade = std::pow(spec.fade_per_frame, t);
    for (int k = 0; k < g.dims[2]; ++k)
      for (int j = 0; j < g.dims[1]; ++j)
        for (int i = 0; i < g.dims[0]; ++i) {
          const Vector3d x = g.voxel_center(i, j, k);
          vol(i, j, k) = fade * frame0(t == 0 ? x : def.inverse(x, amp));
        }
    if (spec.noise_sigma > 0.0) {
      auto rng = detail::frame_rng(spec, 1 + int(orientation), t);
      std::normal_distribution<double> noise(0.0, spec.noise_sigma);
      for (std::int64_t idx = 0; idx < vol.values.size(); ++idx) vol.values[idx] += noise(rng);
    }
    frames.push_back(std::move(vol));
  }
  return frames;
}

/// Cine-like anatomy frames: the subject_shape gives each synthetic subject
/// its own static anatomy; def animates it. Tag fade does not apply.
inline std::vector<Volume<double>> generate_cine(const PhantomSpec& spec,
                                                 const AnalyticDeformation& def,
                                                 const AnalyticDeformation& subject_shape) {
  spec.validate();
  if (int(def.schedule.size()) < spec.frames)
    throw param_error("deformation schedule shorter than the frame count");
  const auto& g = spec.geometry;

  std::vector<Volume<double>> frames;
  frames.reserve(size_t(spec.frames));
  for (int t = 0; t < spec.frames; ++t) {
    Volume<double> vol(g);
    const double amp = def.amplitude(t);
    for (int k = 0; k < g.dims[2]; ++k)
      for (int j = 0; j < g.dims[1]; ++j)
        for (int i = 0; i < g.dims[0]; ++i) {
          Vector3d x = g.voxel_center(i, j, k);
          if (t > 0) x = def.inverse(x, amp);
          vol(i, j, k) = cine_intensity(spec, subject_shape.inverse(x, 1.0));
        }
    if (spec.noise_sigma > 0.0) {
      auto rng = detail::frame_rng(spec, 17, t);
      std::normal_distribution<double> noise(0.0, spec.noise_sigma);
      for (std::int64_t idx = 0; idx < vol.values.size(); ++idx) vol.values[idx] += noise(rng);
    }
    frames.push_back(std::move(vol));
  }
  return frames;
}

/// Exact u(X) = def_t(X) - X sampled at voxel centers.
inline VectorVolume<double> ground_truth_displacement(const AnalyticDeformation& def, int t,
                                                      const GridGeometry& g) {
  g.require_valid();
  const double amp = def.amplitude(t);
  VectorVolume<double> u(g);
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const Vector3d x = g.voxel_center(i, j, k);
        u.set(g.index(i, j, k), def.forward(x, amp) - x);
      }
  return u;
}

}  // namespace tma::phantom
