#include "qmembrane/quasidisc.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace qmem {

QuasidiscShape quasidisc_from_map(const PlanarMap& map, int n_boundary, double invert_tol) {
  if (n_boundary < 64) throw ConfigError("n_boundary must be at least 64");
  if (map.residual_l2() > 1e-2)
    throw Error("map residual too large for a reliable quasidisc construction");

  std::vector<PlanarPoint> targets;
  targets.reserve(n_boundary + 1);
  for (int i = 0; i < n_boundary; ++i) {
    const double th = 2.0 * M_PI * i / n_boundary;
    targets.push_back({std::cos(th), std::sin(th)});
  }
  targets.push_back({0.0, 0.0});

  std::vector<PlanarPoint> preimages = invert_map(map, targets, invert_tol);
  const PlanarPoint anchor = preimages.back();
  preimages.pop_back();

  double area = polygon_area(preimages);
  if (area < 0.0) {  // orient counterclockwise
    std::reverse(preimages.begin(), preimages.end());
    area = -area;
  }
  if (!(area > 0.0)) throw GeometryError("quasidisc polygon has non-positive area");
  if (!polygon_is_simple(preimages))
    throw GeometryError(
        "quasidisc polygon self-intersects at this resolution; "
        "increase n_boundary or refine the grid");
  if (!point_in_polygon(anchor, preimages))
    throw GeometryError("anchor fell outside the quasidisc polygon");

  QuasidiscShape shape;
  shape.anchor = anchor;
  shape.scale_applied = std::sqrt(M_PI / area);
  shape.boundary.reserve(preimages.size());
  for (const PlanarPoint& p : preimages)
    shape.boundary.push_back(anchor + shape.scale_applied * (p - anchor));
  shape.area = polygon_area(shape.boundary);
  return shape;
}

double centered_radius(const QuasidiscShape& shape) {
  double r = 0.0;
  for (const PlanarPoint& p : shape.boundary) r = std::max(r, distance(p, shape.anchor));
  return r;
}

double centered_inradius(const QuasidiscShape& shape) {
  double r = std::numeric_limits<double>::infinity();
  for (const PlanarPoint& p : shape.boundary) r = std::min(r, distance(p, shape.anchor));
  return r;
}

std::vector<PlanarPoint> unnormalized_boundary(const QuasidiscShape& shape) {
  std::vector<PlanarPoint> raw;
  raw.reserve(shape.boundary.size());
  const double inv = 1.0 / shape.scale_applied;
  for (const PlanarPoint& p : shape.boundary)
    raw.push_back(shape.anchor + inv * (p - shape.anchor));
  return raw;
}

// ---------------------------------------------------------------------------
// Smallest enclosing circle, Welzl with move-to-front in the iterative form.
// ---------------------------------------------------------------------------

namespace {

constexpr double kSecSlack = 1e-12;

EnclosingCircle circle_two(PlanarPoint a, PlanarPoint b) {
  const PlanarPoint c{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
  return {c, 0.5 * distance(a, b)};
}

// Circumcircle; falls back to the widest diametral pair when nearly collinear.
EnclosingCircle circle_three(PlanarPoint a, PlanarPoint b, PlanarPoint c) {
  const double d = 2.0 * orient2d(a, b, c);
  const double scale =
      std::max({std::abs(a.x), std::abs(a.y), std::abs(b.x), std::abs(b.y), std::abs(c.x),
                std::abs(c.y), 1.0});
  if (std::abs(d) < 1e-14 * scale * scale) {
    EnclosingCircle best = circle_two(a, b);
    for (const auto& cand : {circle_two(a, c), circle_two(b, c)})
      if (cand.radius > best.radius) best = cand;
    return best;
  }
  const double a2 = a.x * a.x + a.y * a.y;
  const double b2 = b.x * b.x + b.y * b.y;
  const double c2 = c.x * c.x + c.y * c.y;
  const double ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d;
  const double uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d;
  const PlanarPoint center{ux, uy};
  return {center, distance(center, a)};
}

bool circle_contains(const EnclosingCircle& c, PlanarPoint p) {
  return distance(c.center, p) <= c.radius * (1.0 + kSecSlack) + kSecSlack;
}

EnclosingCircle support_circle(const std::array<PlanarPoint, 3>& support, int n_support) {
  switch (n_support) {
    case 0:
      return {{0.0, 0.0}, -1.0};  // contains nothing
    case 1:
      return {support[0], 0.0};
    case 2:
      return circle_two(support[0], support[1]);
    default:
      return circle_three(support[0], support[1], support[2]);
  }
}

// Move-to-front Welzl. The recursion grows the support set, so its depth is
// bounded by three regardless of the input size; certificate points migrate
// to the front of the working order.
EnclosingCircle welzl_mtf(std::vector<PlanarPoint>& pts, std::size_t count,
                          std::array<PlanarPoint, 3>& support, int n_support) {
  EnclosingCircle circle = support_circle(support, n_support);
  if (n_support == 3) return circle;
  for (std::size_t i = 0; i < count; ++i) {
    const PlanarPoint p = pts[i];
    if (circle_contains(circle, p)) continue;
    support[n_support] = p;
    circle = welzl_mtf(pts, i, support, n_support + 1);
    std::rotate(pts.begin(), pts.begin() + i, pts.begin() + i + 1);
  }
  return circle;
}

}  // namespace

EnclosingCircle smallest_enclosing_circle(std::span<const PlanarPoint> points,
                                          std::uint64_t seed) {
  if (points.empty()) throw GeometryError("smallest enclosing circle of an empty point set");
  std::vector<PlanarPoint> pts(points.begin(), points.end());
  std::mt19937_64 rng(seed);
  std::shuffle(pts.begin(), pts.end(), rng);
  std::array<PlanarPoint, 3> support{};
  return welzl_mtf(pts, pts.size(), support, 0);
}

double distortion_radius_bound(double K_A) {
  if (!(K_A >= 1.0)) throw DomainError("quasiconformality coefficient must be at least 1");
  return std::exp(M_PI * K_A) / 16.0;
}

// ---------------------------------------------------------------------------
// Figure and point-file io.
// ---------------------------------------------------------------------------

void write_quasidisc_svg(const std::filesystem::path& path, const QuasidiscShape& shape,
                         const std::optional<EnclosingCircle>& sec,
                         std::optional<double> anchored_radius) {
  double xmin = shape.anchor.x, xmax = shape.anchor.x;
  double ymin = shape.anchor.y, ymax = shape.anchor.y;
  auto grow = [&](PlanarPoint c, double r) {
    xmin = std::min(xmin, c.x - r);
    xmax = std::max(xmax, c.x + r);
    ymin = std::min(ymin, c.y - r);
    ymax = std::max(ymax, c.y + r);
  };
  for (const PlanarPoint& p : shape.boundary) grow(p, 0.0);
  if (sec) grow(sec->center, sec->radius);
  if (anchored_radius) grow(shape.anchor, *anchored_radius);
  const double pad = 0.05 * std::max(xmax - xmin, ymax - ymin);
  xmin -= pad;
  xmax += pad;
  ymin -= pad;
  ymax += pad;

  std::ofstream out(path);
  if (!out) throw Error("cannot open svg file for writing: " + path.string());
  out.precision(8);
  const double w = xmax - xmin, h = ymax - ymin;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" viewBox=\""
      << xmin << ' ' << -ymax << ' ' << w << ' ' << h << "\">\n";
  // Flip y so the mathematical orientation matches the screen.
  out << "<g transform=\"scale(1,-1)\">\n";
  out << "<path fill=\"#cfe3f7\" stroke=\"#1f4e8c\" stroke-width=\"" << 0.004 * w << "\" d=\"M";
  for (std::size_t i = 0; i < shape.boundary.size(); ++i) {
    const PlanarPoint& p = shape.boundary[i];
    out << (i ? " L" : "") << p.x << ' ' << p.y;
  }
  out << " Z\"/>\n";
  if (sec) {
    out << "<circle fill=\"none\" stroke=\"#b03030\" stroke-width=\"" << 0.004 * w << "\" cx=\""
        << sec->center.x << "\" cy=\"" << sec->center.y << "\" r=\"" << sec->radius << "\"/>\n";
  }
  if (anchored_radius) {
    out << "<circle fill=\"none\" stroke=\"#2e8b57\" stroke-dasharray=\"" << 0.02 * w << ','
        << 0.02 * w << "\" stroke-width=\"" << 0.004 * w << "\" cx=\"" << shape.anchor.x
        << "\" cy=\"" << shape.anchor.y << "\" r=\"" << *anchored_radius << "\"/>\n";
  }
  const double m = 0.015 * w;
  out << "<path stroke=\"#000\" stroke-width=\"" << 0.004 * w << "\" d=\"M"
      << shape.anchor.x - m << ' ' << shape.anchor.y << " L" << shape.anchor.x + m << ' '
      << shape.anchor.y << " M" << shape.anchor.x << ' ' << shape.anchor.y - m << " L"
      << shape.anchor.x << ' ' << shape.anchor.y + m << "\"/>\n";
  out << "</g>\n</svg>\n";
}

void write_vertices(const std::filesystem::path& path, std::span<const PlanarPoint> points) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open vertex file for writing: " + path.string());
  out.precision(17);
  for (const PlanarPoint& p : points) out << p.x << ' ' << p.y << '\n';
}

std::vector<PlanarPoint> read_points(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open point file: " + path.string());
  std::vector<PlanarPoint> points;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double x, y;
    if (ls >> x >> y) {
      points.push_back({x, y});
    } else {
      ls.clear();
      std::string rest;
      ls >> rest;
      if (!rest.empty())
        throw GeometryError("malformed point file line " + std::to_string(lineno));
    }
  }
  return points;
}

}  // namespace qmem
