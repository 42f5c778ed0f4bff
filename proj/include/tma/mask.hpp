#pragma once

#include "tma/volume.hpp"

namespace tma {

template <class T>
Volume<T> binarize(const Volume<T>& weights, double threshold) {
  Volume<T> out(weights.geom);
  out.values = (weights.values >= T(threshold)).template cast<T>();
  return out;
}

/// One 6-neighborhood dilation pass, applied `steps` times.
template <class T>
Volume<T> dilate(const Volume<T>& mask, int steps) {
  Volume<T> cur = mask;
  const auto& g = mask.geom;
  for (int s = 0; s < steps; ++s) {
    Volume<T> next = cur;
    for (int k = 0; k < g.dims[2]; ++k)
      for (int j = 0; j < g.dims[1]; ++j)
        for (int i = 0; i < g.dims[0]; ++i) {
          if (cur(i, j, k) > T(0.5)) continue;
          const bool on =
              (i > 0 && cur(i - 1, j, k) > T(0.5)) ||
              (i + 1 < g.dims[0] && cur(i + 1, j, k) > T(0.5)) ||
              (j > 0 && cur(i, j - 1, k) > T(0.5)) ||
              (j + 1 < g.dims[1] && cur(i, j + 1, k) > T(0.5)) ||
              (k > 0 && cur(i, j, k - 1) > T(0.5)) ||
              (k + 1 < g.dims[2] && cur(i, j, k + 1) > T(0.5));
          if (on) next(i, j, k) = T(1);
        }
    cur = std::move(next);
  }
  return cur;
}

template <class T>
Volume<T> erode(const Volume<T>& mask, int steps) {
  Volume<T> inv(mask.geom);
  inv.values = T(1) - mask.values;
  inv = dilate(inv, steps);
  inv.values = T(1) - inv.values;
  return inv;
}

template <class T>
double dice(const Volume<T>& a, const Volume<T>& b) {
  require_same_geometry(a.geom, b.geom, "dice");
  double inter = 0, na = 0, nb = 0;
  for (std::int64_t i = 0; i < a.values.size(); ++i) {
    const bool pa = a.values[i] > T(0.5), pb = b.values[i] > T(0.5);
    inter += (pa && pb) ? 1 : 0;
    na += pa ? 1 : 0;
    nb += pb ? 1 : 0;
  }
  return (na + nb) > 0 ? 2.0 * inter / (na + nb) : 1.0;
}

template <class T>
std::int64_t mask_count(const Volume<T>& mask) {
  std::int64_t n = 0;
  for (std::int64_t i = 0; i < mask.values.size(); ++i)
    if (mask.values[i] > T(0.5)) ++n;
  return n;
}

}  // namespace tma
