#include "qmembrane/geometry2d.hpp"

#include <algorithm>

namespace qmem {

double polygon_area(std::span<const PlanarPoint> polygon) {
  const std::size_t n = polygon.size();
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const PlanarPoint& a = polygon[i];
    const PlanarPoint& b = polygon[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

double polygon_perimeter(std::span<const PlanarPoint> polygon) {
  const std::size_t n = polygon.size();
  double per = 0.0;
  for (std::size_t i = 0; i < n; ++i) per += distance(polygon[i], polygon[(i + 1) % n]);
  return per;
}

bool point_in_polygon(PlanarPoint p, std::span<const PlanarPoint> polygon) {
  const std::size_t n = polygon.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const PlanarPoint& a = polygon[i];
    const PlanarPoint& b = polygon[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double xint = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (p.x < xint) inside = !inside;
    }
  }
  return inside;
}

namespace {

bool on_segment(PlanarPoint a, PlanarPoint b, PlanarPoint p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

bool segments_intersect(PlanarPoint a, PlanarPoint b, PlanarPoint c, PlanarPoint d) {
  const int d1 = sign_of(orient2d(c, d, a));
  const int d2 = sign_of(orient2d(c, d, b));
  const int d3 = sign_of(orient2d(a, b, c));
  const int d4 = sign_of(orient2d(a, b, d));
  if (d1 != d2 && d3 != d4) return true;
  if (d1 == 0 && on_segment(c, d, a)) return true;
  if (d2 == 0 && on_segment(c, d, b)) return true;
  if (d3 == 0 && on_segment(a, b, c)) return true;
  if (d4 == 0 && on_segment(a, b, d)) return true;
  return false;
}

bool polygon_is_simple(std::span<const PlanarPoint> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const PlanarPoint a = polygon[i];
    const PlanarPoint b = polygon[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      // Skip the shared-vertex adjacencies.
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_intersect(a, b, polygon[j], polygon[(j + 1) % n])) return false;
    }
  }
  return true;
}

}  // namespace qmem
