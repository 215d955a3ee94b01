#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <vector>

namespace qmem {

using Complex = std::complex<double>;

struct PlanarPoint {
  double x = 0.0;
  double y = 0.0;

  friend PlanarPoint operator+(PlanarPoint a, PlanarPoint b) { return {a.x + b.x, a.y + b.y}; }
  friend PlanarPoint operator-(PlanarPoint a, PlanarPoint b) { return {a.x - b.x, a.y - b.y}; }
  friend PlanarPoint operator*(double s, PlanarPoint p) { return {s * p.x, s * p.y}; }
  friend bool operator==(PlanarPoint a, PlanarPoint b) { return a.x == b.x && a.y == b.y; }
};

inline Complex to_complex(PlanarPoint p) { return {p.x, p.y}; }
inline PlanarPoint to_point(Complex z) { return {z.real(), z.imag()}; }

inline double distance(PlanarPoint a, PlanarPoint b) { return std::hypot(a.x - b.x, a.y - b.y); }
inline double squared_distance(PlanarPoint a, PlanarPoint b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

/// Twice the signed area of triangle (a, b, c); positive when counterclockwise.
inline double orient2d(PlanarPoint a, PlanarPoint b, PlanarPoint c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

/// Signed shoelace area; positive for counterclockwise polygons.
double polygon_area(std::span<const PlanarPoint> polygon);

double polygon_perimeter(std::span<const PlanarPoint> polygon);

/// Crossing-number test; points on the boundary give an unspecified result.
bool point_in_polygon(PlanarPoint p, std::span<const PlanarPoint> polygon);

/// True when no two non-adjacent edges intersect.
bool polygon_is_simple(std::span<const PlanarPoint> polygon);

/// Proper or touching intersection of segments (a,b) and (c,d).
bool segments_intersect(PlanarPoint a, PlanarPoint b, PlanarPoint c, PlanarPoint d);

}  // namespace qmem
