#pragma once

#include <cmath>
#include <vector>

#include "ltc/errors.hpp"

namespace ltc {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Ordered planar path; used for 2-D latent trajectories.
struct Polyline2D {
  std::vector<Vec2> points;
};

// Sum of Euclidean norms of consecutive differences; 0 for a single point.
inline double arc_length(const Polyline2D& path) {
  if (path.points.empty()) throw ParameterError("arc_length: path needs at least one point");
  double total = 0.0;
  for (std::size_t i = 0; i < path.points.size(); ++i) {
    const Vec2& p = path.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw ParameterError("arc_length: non-finite coordinate at point " + std::to_string(i));
    if (i > 0) {
      const Vec2& q = path.points[i - 1];
      total += std::hypot(p.x - q.x, p.y - q.y);
    }
  }
  return total;
}

}  // namespace ltc
