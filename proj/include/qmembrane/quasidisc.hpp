#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "qmembrane/beltrami.hpp"

namespace qmem {

/// Boundary polygon of the inverse image of the unit disc, rescaled about the
/// anchor (the inverse image of the disc center) so its shoelace area is pi.
struct QuasidiscShape {
  std::vector<PlanarPoint> boundary;  // counterclockwise
  PlanarPoint anchor;
  double area = 0.0;           // shoelace area after normalization
  double scale_applied = 1.0;  // factor applied about the anchor
};

struct EnclosingCircle {
  PlanarPoint center;
  double radius = 0.0;
};

/// Inverts n_boundary uniform unit-circle samples (and the origin) through the
/// map, orients the polygon counterclockwise, checks simplicity, and rescales
/// about the anchor to area pi.
QuasidiscShape quasidisc_from_map(const PlanarMap& map, int n_boundary = 1024,
                                  double invert_tol = 1e-10);

/// Max distance from the anchor to the boundary.
double centered_radius(const QuasidiscShape& shape);

/// Min distance from the anchor to the boundary.
double centered_inradius(const QuasidiscShape& shape);

/// Boundary in the coordinates of the map (undoes the area normalization).
std::vector<PlanarPoint> unnormalized_boundary(const QuasidiscShape& shape);

/// Welzl's randomized incremental algorithm with move-to-front, iterative
/// form; the permutation is drawn from the seed, the result is unique up to
/// floating-point noise regardless of it.
EnclosingCircle smallest_enclosing_circle(std::span<const PlanarPoint> points,
                                          std::uint64_t seed = 0);

/// Upper bound (1/16) e^{pi K_A} for the anchored radius of an area-pi
/// quasidisc with quasiconformality coefficient K_A.
double distortion_radius_bound(double K_A);

/// SVG figure: quasidisc path, anchor marker, smallest enclosing circle, and
/// the anchored circle of the given radius.
void write_quasidisc_svg(const std::filesystem::path& path, const QuasidiscShape& shape,
                         const std::optional<EnclosingCircle>& sec,
                         std::optional<double> anchored_radius);

/// Sidecar text file: one "x y" vertex per line.
void write_vertices(const std::filesystem::path& path, std::span<const PlanarPoint> points);

/// Point-set input for the sec subcommand: one "x y" pair per line, '#' comments.
std::vector<PlanarPoint> read_points(const std::filesystem::path& path);

}  // namespace qmem
