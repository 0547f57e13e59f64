#pragma once

#include <cmath>

#include "cmrf/imagery.hpp"

namespace cmrf {

/// Slanted disparity plane around a reference center (cx, cy):
/// d(u, v) = alpha (u - cx) + beta (v - cy) + gamma.
struct Plane {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  friend bool operator==(const Plane&, const Plane&) = default;
};

inline double plane_disparity(const Plane& y, double u, double v, double cx, double cy) {
  return y.alpha * (u - cx) + y.beta * (v - cy) + y.gamma;
}

inline double plane_disparity(const Plane& y, Pixel p, double cx, double cy) {
  return plane_disparity(y, static_cast<double>(p.u), static_cast<double>(p.v), cx, cy);
}

/// Same plane expressed around another center.
inline Plane recenter(const Plane& y, double from_cx, double from_cy, double to_cx, double to_cy) {
  return {y.alpha, y.beta, plane_disparity(y, to_cx, to_cy, from_cx, from_cy)};
}

inline bool is_finite(const Plane& y) {
  return std::isfinite(y.alpha) && std::isfinite(y.beta) && std::isfinite(y.gamma);
}

}  // namespace cmrf
