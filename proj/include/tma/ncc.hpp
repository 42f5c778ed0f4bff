#pragma once

#include "tma/finite_difference.hpp"
#include "tma/volume.hpp"

namespace tma::atlas {

struct CcResult {
  double metric = 0.0;            // signed local NCC averaged over the grid
  VectorVolume<double> force;     // ascent direction for b's deformation
};

namespace detail {

// Running box sum of half-width r along one axis, clamped windows at the
// ends (window shrinks rather than wrapping).
inline void box_sum_axis(const GridGeometry& g, int axis, int r, Eigen::ArrayXd& data) {
  const int n = g.dims[axis];
  const std::int64_t stride = (axis == 0) ? 1
                            : (axis == 1) ? g.dims[0]
                                          : std::int64_t(g.dims[0]) * g.dims[1];
  const int n0 = (axis == 0) ? g.dims[1] : g.dims[0];
  const int n1 = (axis == 2) ? g.dims[1] : g.dims[2];
  Eigen::ArrayXd line(n), prefix(n + 1);
  for (int b = 0; b < n1; ++b)
    for (int a = 0; a < n0; ++a) {
      std::int64_t base;
      if (axis == 0)
        base = g.index(0, a, b);
      else if (axis == 1)
        base = g.index(a, 0, b);
      else
        base = g.index(a, b, 0);
      for (int i = 0; i < n; ++i) line[i] = data[base + stride * i];
      prefix[0] = 0.0;
      for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + line[i];
      for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - r), hi = std::min(n - 1, i + r);
        data[base + stride * i] = prefix[hi + 1] - prefix[lo];
      }
    }
}

inline Eigen::ArrayXd box_sum(const GridGeometry& g, const Eigen::ArrayXd& values, int r) {
  Eigen::ArrayXd out = values;
  for (int axis = 0; axis < 3; ++axis) box_sum_axis(g, axis, r, out);
  return out;
}

}  // namespace detail

/// Local normalized cross-correlation over (2r+1)^3 windows, averaged over
/// the valid windows, with the analytic ascent force on b's deformation.
/// Windows where either image has (near) zero variance contribute nothing.
inline CcResult cc_metric(const Volume<double>& a, const Volume<double>& b, int radius,
                          bool with_force = true) {
  require_same_geometry(a.geom, b.geom, "cc_metric");
  if (radius < 1) throw param_error("cc_metric radius must be >= 1");
  const auto& g = a.geom;
  const std::int64_t n = g.voxel_count();

  Eigen::ArrayXd ones = Eigen::ArrayXd::Ones(n);
  const Eigen::ArrayXd cnt = detail::box_sum(g, ones, radius);
  const Eigen::ArrayXd sa = detail::box_sum(g, a.values, radius);
  const Eigen::ArrayXd sb = detail::box_sum(g, b.values, radius);
  const Eigen::ArrayXd saa = detail::box_sum(g, a.values.square(), radius);
  const Eigen::ArrayXd sbb = detail::box_sum(g, b.values.square(), radius);
  const Eigen::ArrayXd sab = detail::box_sum(g, a.values * b.values, radius);

  const Eigen::ArrayXd mean_a = sa / cnt;
  const Eigen::ArrayXd mean_b = sb / cnt;
  const Eigen::ArrayXd var_a = (saa / cnt - mean_a.square()).max(0.0);
  const Eigen::ArrayXd var_b = (sbb / cnt - mean_b.square()).max(0.0);
  const Eigen::ArrayXd cov = sab / cnt - mean_a * mean_b;

  const double scale2 = std::max(a.values.square().mean(), b.values.square().mean());
  const double eps_var = 1e-12 * std::max(scale2, 1e-300);

  CcResult out;
  VectorVolume<double> grad_b;
  if (with_force) {
    out.force = VectorVolume<double>(g);
    grad_b = gradient(b);
  }
  double acc = 0.0;
  std::int64_t valid = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (var_a[i] <= eps_var || var_b[i] <= eps_var) continue;  // flat window: contributes 0
    const double sig = std::sqrt(var_a[i] * var_b[i]);
    const double cc = cov[i] / sig;
    acc += cc;
    ++valid;
    if (!with_force) continue;
    // d cc / d b(x) with window statistics centered at x
    const double da = (a.values[i] - mean_a[i]);
    const double db = (b.values[i] - mean_b[i]);
    const double w = (da - (cov[i] / var_b[i]) * db) / sig;
    out.force.vectors.row(i) = w * grad_b.vectors.row(i);
  }
  out.metric = valid > 0 ? acc / double(valid) : 0.0;
  return out;
}

}  // namespace tma::atlas
