#include "qmembrane/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "qmembrane/errors.hpp"

namespace qmem {

namespace {

// ---------------------------------------------------------------------------
// Incremental Delaunay triangulation: point location by walking, insertion by
// 1-to-3 / 2-to-4 split, Lawson edge legalization. Predicates use doubles
// with relative thresholds; the no-flip margin keeps cocircular lattice
// configurations from cycling.
// ---------------------------------------------------------------------------

struct Tri {
  int v[3];    // counterclockwise
  int nbr[3];  // neighbor across the edge opposite v[i]; -1 = none
  bool alive = true;
};

class Delaunay {
public:
  explicit Delaunay(double cx, double cy, double extent) {
    // Super-triangle generously containing the working area.
    const double m = 1000.0 * extent;
    pts_.push_back({cx - 2.0 * m, cy - m});
    pts_.push_back({cx + 2.0 * m, cy - m});
    pts_.push_back({cx, cy + 2.0 * m});
    tris_.push_back(Tri{{0, 1, 2}, {-1, -1, -1}, true});
  }

  static constexpr int kSuperVertices = 3;

  const std::vector<PlanarPoint>& points() const { return pts_; }
  const std::vector<Tri>& triangles() const { return tris_; }

  /// Inserts p and returns its vertex index; returns the index of an existing
  /// vertex when p coincides with one.
  int insert(PlanarPoint p) {
    auto [t, edge] = locate(p);
    for (int k = 0; k < 3; ++k) {
      if (squared_distance(pts_[tris_[t].v[k]], p) < 1e-24) return tris_[t].v[k];
    }
    const int pi = static_cast<int>(pts_.size());
    pts_.push_back(p);
    if (edge < 0)
      split_interior(t, pi);
    else if (tris_[t].nbr[edge] >= 0)
      split_edge(t, edge, pi);
    else
      split_interior(t, pi);
    return pi;
  }

  /// Set of undirected edges of the live triangles, keyed lo * 2^32 + hi.
  std::unordered_set<std::uint64_t> edge_set() const {
    std::unordered_set<std::uint64_t> edges;
    edges.reserve(tris_.size() * 3);
    for (const Tri& t : tris_) {
      if (!t.alive) continue;
      for (int k = 0; k < 3; ++k) {
        const std::uint64_t lo = std::min(t.v[k], t.v[(k + 1) % 3]);
        const std::uint64_t hi = std::max(t.v[k], t.v[(k + 1) % 3]);
        edges.insert((lo << 32) | hi);
      }
    }
    return edges;
  }

  static std::uint64_t edge_key(int a, int b) {
    const std::uint64_t lo = std::min(a, b);
    const std::uint64_t hi = std::max(a, b);
    return (lo << 32) | hi;
  }

private:
  std::vector<PlanarPoint> pts_;
  std::vector<Tri> tris_;
  int hint_ = 0;

  static double orient_eps(PlanarPoint a, PlanarPoint b, PlanarPoint c) {
    const double s = std::abs(b.x - a.x) + std::abs(b.y - a.y) + std::abs(c.x - a.x) +
                     std::abs(c.y - a.y);
    return 1e-12 * s * s;
  }

  std::pair<int, int> locate(PlanarPoint p) {
    int t = hint_;
    if (t < 0 || t >= static_cast<int>(tris_.size()) || !tris_[t].alive) t = first_alive();
    for (int step = 0; step < 4 * static_cast<int>(tris_.size()) + 16; ++step) {
      const Tri& tri = tris_[t];
      int worst_edge = -1;
      double worst = 0.0;
      int zero_edge = -1;
      bool inside = true;
      for (int i = 0; i < 3; ++i) {
        const PlanarPoint a = pts_[tri.v[(i + 1) % 3]];
        const PlanarPoint b = pts_[tri.v[(i + 2) % 3]];
        const double o = orient2d(a, b, p);
        const double eps = orient_eps(a, b, p);
        if (o < -eps) {
          inside = false;
          if (o < worst) {
            worst = o;
            worst_edge = i;
          }
        } else if (o <= eps) {
          zero_edge = i;
        }
      }
      if (inside) {
        hint_ = t;
        return {t, zero_edge};
      }
      const int next = tri.nbr[worst_edge];
      if (next < 0) throw GeometryError("point located outside the triangulation");
      t = next;
    }
    return locate_exhaustive(p);
  }

  std::pair<int, int> locate_exhaustive(PlanarPoint p) {
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
      if (!tris_[t].alive) continue;
      int zero_edge = -1;
      bool inside = true;
      for (int i = 0; i < 3 && inside; ++i) {
        const PlanarPoint a = pts_[tris_[t].v[(i + 1) % 3]];
        const PlanarPoint b = pts_[tris_[t].v[(i + 2) % 3]];
        const double o = orient2d(a, b, p);
        const double eps = orient_eps(a, b, p);
        if (o < -eps) inside = false;
        else if (o <= eps) zero_edge = i;
      }
      if (inside) {
        hint_ = t;
        return {t, zero_edge};
      }
    }
    throw GeometryError("point lies outside the triangulation");
  }

  int first_alive() const {
    for (int i = static_cast<int>(tris_.size()) - 1; i >= 0; --i)
      if (tris_[i].alive) return i;
    throw GeometryError("triangulation has no triangles");
  }

  int index_in(const Tri& t, int v) const {
    for (int k = 0; k < 3; ++k)
      if (t.v[k] == v) return k;
    throw GeometryError("inconsistent triangulation adjacency");
  }

  void repoint(int t, int from, int to) {
    if (t < 0) return;
    for (int k = 0; k < 3; ++k)
      if (tris_[t].nbr[k] == from) {
        tris_[t].nbr[k] = to;
        return;
      }
  }

  void split_interior(int t, int pi) {
    const Tri old = tris_[t];
    const int v0 = old.v[0], v1 = old.v[1], v2 = old.v[2];
    const int n0 = old.nbr[0], n1 = old.nbr[1], n2 = old.nbr[2];
    const int t1 = static_cast<int>(tris_.size());
    const int t2 = t1 + 1;
    tris_[t] = Tri{{pi, v1, v2}, {n0, t1, t2}, true};
    tris_.push_back(Tri{{pi, v2, v0}, {n1, t2, t}, true});
    tris_.push_back(Tri{{pi, v0, v1}, {n2, t, t1}, true});
    repoint(n1, t, t1);
    repoint(n2, t, t2);
    legalize(t, 0);
    legalize(t1, 0);
    legalize(t2, 0);
  }

  // p lies on the edge opposite vertex e of triangle t.
  void split_edge(int t, int e, int pi) {
    const Tri told = tris_[t];
    const int a = told.v[e];
    const int b = told.v[(e + 1) % 3];
    const int c = told.v[(e + 2) % 3];
    const int u = told.nbr[e];
    const Tri uold = tris_[u];
    const int j = opposite_index(uold, b, c);
    const int d = uold.v[j];

    const int nb = told.nbr[(e + 1) % 3];  // across (c, a)
    const int nc = told.nbr[(e + 2) % 3];  // across (a, b)
    const int ub = uold.nbr[index_in(uold, b)];  // across (d, c)
    const int uc = uold.nbr[index_in(uold, c)];  // across (b, d)

    const int t1 = static_cast<int>(tris_.size());
    const int t3 = t1 + 1;
    // T0 reuses t, T2 reuses u.
    tris_[t] = Tri{{a, b, pi}, {u, t1, nc}, true};
    tris_[u] = Tri{{d, pi, b}, {t, uc, t3}, true};
    tris_.push_back(Tri{{a, pi, c}, {t3, nb, t}, true});   // t1
    tris_.push_back(Tri{{d, c, pi}, {t1, u, ub}, true});   // t3
    repoint(nb, t, t1);
    repoint(ub, u, t3);

    legalize(t, index_in(tris_[t], pi));
    legalize(t1, index_in(tris_[t1], pi));
    legalize(u, index_in(tris_[u], pi));
    legalize(t3, index_in(tris_[t3], pi));
  }

  int opposite_index(const Tri& u, int b, int c) const {
    for (int k = 0; k < 3; ++k)
      if (u.v[k] != b && u.v[k] != c) return k;
    throw GeometryError("inconsistent triangulation adjacency");
  }

  // d strictly inside the circumcircle of ccw (a, b, c), with a margin so
  // cocircular configurations never flip.
  bool in_circle(PlanarPoint a, PlanarPoint b, PlanarPoint c, PlanarPoint d) const {
    const double adx = a.x - d.x, ady = a.y - d.y;
    const double bdx = b.x - d.x, bdy = b.y - d.y;
    const double cdx = c.x - d.x, cdy = c.y - d.y;
    const double ad2 = adx * adx + ady * ady;
    const double bd2 = bdx * bdx + bdy * bdy;
    const double cd2 = cdx * cdx + cdy * cdy;
    const double det = adx * (bdy * cd2 - cdy * bd2) - ady * (bdx * cd2 - cdx * bd2) +
                       ad2 * (bdx * cdy - cdx * bdy);
    const double scale = std::max({std::abs(adx), std::abs(ady), std::abs(bdx), std::abs(bdy),
                                   std::abs(cdx), std::abs(cdy)});
    return det > 1e-10 * scale * scale * scale * scale;
  }

  void legalize(int t, int i) {
    const int u = tris_[t].nbr[i];
    if (u < 0) return;
    const Tri& tt = tris_[t];
    const Tri& uu = tris_[u];
    const int a = tt.v[i];
    const int b = tt.v[(i + 1) % 3];
    const int c = tt.v[(i + 2) % 3];
    const int j = opposite_index(uu, b, c);
    const int d = uu.v[j];
    if (!in_circle(pts_[a], pts_[b], pts_[c], pts_[d])) return;

    const int nb = tt.nbr[(i + 1) % 3];      // across (c, a)
    const int nc = tt.nbr[(i + 2) % 3];      // across (a, b)
    const int uc = uu.nbr[index_in(uu, c)];  // across (b, d)
    const int ub = uu.nbr[index_in(uu, b)];  // across (d, c)

    tris_[t] = Tri{{a, b, d}, {uc, u, nc}, true};
    tris_[u] = Tri{{a, d, c}, {ub, nb, t}, true};
    repoint(uc, u, t);
    repoint(nb, t, u);

    legalize(t, 0);  // edge (b, d)
    legalize(u, 0);  // edge (d, c)
  }
};

double tri_min_angle(PlanarPoint a, PlanarPoint b, PlanarPoint c) {
  const double la = distance(b, c), lb = distance(c, a), lc = distance(a, b);
  auto angle = [](double opp, double s1, double s2) {
    const double cosv = std::clamp((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2), -1.0, 1.0);
    return std::acos(cosv);
  };
  return std::min({angle(la, lb, lc), angle(lb, lc, la), angle(lc, la, lb)});
}

double tri_max_edge(PlanarPoint a, PlanarPoint b, PlanarPoint c) {
  return std::max({distance(b, c), distance(c, a), distance(a, b)});
}

PlanarPoint circumcenter(PlanarPoint a, PlanarPoint b, PlanarPoint c) {
  const double d = 2.0 * orient2d(a, b, c);
  const double a2 = a.x * a.x + a.y * a.y;
  const double b2 = b.x * b.x + b.y * b.y;
  const double c2 = c.x * c.x + c.y * c.y;
  return {(a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d,
          (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d};
}

struct Segment {
  int a, b;
};

double point_segment_distance(PlanarPoint p, PlanarPoint a, PlanarPoint b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double l2 = vx * vx + vy * vy;
  double t = l2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / l2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

}  // namespace

TriangularMesh triangulate_polygon(std::span<const PlanarPoint> polygon_in, double target_h,
                                   const MeshOptions& options) {
  if (polygon_in.size() < 3) throw GeometryError("polygon needs at least three vertices");
  if (!(target_h > 0.0)) throw ConfigError("target_h must be positive");
  std::vector<PlanarPoint> polygon(polygon_in.begin(), polygon_in.end());
  if (polygon_area(polygon) < 0.0) std::reverse(polygon.begin(), polygon.end());
  if (!polygon_is_simple(polygon)) throw GeometryError("polygon self-intersects");

  const double area = polygon_area(polygon);
  const double perimeter = polygon_perimeter(polygon);
  const double est = perimeter / target_h + area / (0.866 * target_h * target_h);
  if (est > options.max_vertices)
    throw ResourceError("target_h would exceed the mesh vertex cap");

  double xmin = polygon[0].x, xmax = xmin, ymin = polygon[0].y, ymax = ymin;
  for (const PlanarPoint& p : polygon) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }

  Delaunay dt(0.5 * (xmin + xmax), 0.5 * (ymin + ymax),
              std::max({xmax - xmin, ymax - ymin, target_h}));

  // Boundary: subdivide each polygon edge into pieces of length <= target_h,
  // keeping the original vertices.
  std::vector<PlanarPoint> bpoints;
  std::vector<int> bindex;  // vertex indices of the boundary chain, in order
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const PlanarPoint a = polygon[i];
    const PlanarPoint b = polygon[(i + 1) % polygon.size()];
    const int pieces = std::max(1, static_cast<int>(std::ceil(distance(a, b) / target_h)));
    for (int k = 0; k < pieces; ++k) {
      const double t = static_cast<double>(k) / pieces;
      bpoints.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
  }
  std::vector<bool> is_boundary;
  is_boundary.assign(Delaunay::kSuperVertices, false);
  for (const PlanarPoint& p : bpoints) {
    const int idx = dt.insert(p);
    if (idx >= static_cast<int>(is_boundary.size())) is_boundary.resize(idx + 1, false);
    is_boundary[idx] = true;
    bindex.push_back(idx);
  }

  // Interior: hexagonal lattice with clearance from the boundary.
  const double clearance = 0.45 * target_h;
  const double dy = target_h * std::sqrt(3.0) / 2.0;
  int row = 0;
  for (double y = ymin + 0.5 * dy; y < ymax; y += dy, ++row) {
    const double x0 = xmin + ((row % 2) ? 0.5 * target_h : 0.0);
    for (double x = x0; x < xmax; x += target_h) {
      const PlanarPoint p{x, y};
      if (!point_in_polygon(p, polygon)) continue;
      double dist = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < bpoints.size(); ++i) {
        dist = std::min(dist, point_segment_distance(p, bpoints[i],
                                                     bpoints[(i + 1) % bpoints.size()]));
        if (dist < clearance) break;
      }
      if (dist < clearance) continue;
      const int idx = dt.insert(p);
      if (idx >= static_cast<int>(is_boundary.size())) is_boundary.resize(idx + 1, false);
    }
  }

  // Subsegments of the boundary chain; enforce their presence by midpoint
  // splitting, then refine for quality.
  std::vector<Segment> segs;
  for (std::size_t i = 0; i < bindex.size(); ++i) {
    const int a = bindex[i];
    const int b = bindex[(i + 1) % bindex.size()];
    if (a != b) segs.push_back({a, b});
  }

  auto split_segment = [&](std::size_t si) {
    const Segment s = segs[si];
    const PlanarPoint a = dt.points()[s.a];
    const PlanarPoint b = dt.points()[s.b];
    const PlanarPoint mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
    const int idx = dt.insert(mid);
    if (idx >= static_cast<int>(is_boundary.size())) is_boundary.resize(idx + 1, false);
    is_boundary[idx] = true;
    segs[si] = {s.a, idx};
    segs.push_back({idx, s.b});
  };

  for (int round = 0; round < 24; ++round) {
    const auto edges = dt.edge_set();
    bool all_present = true;
    const std::size_t count = segs.size();
    for (std::size_t si = 0; si < count; ++si) {
      if (!edges.contains(Delaunay::edge_key(segs[si].a, segs[si].b))) {
        all_present = false;
        split_segment(si);
      }
    }
    if (all_present) break;
    if (round == 23) throw GeometryError("could not recover the polygon boundary in the mesh");
  }

  auto centroid_inside = [&](const Tri& t) {
    for (int k = 0; k < 3; ++k)
      if (t.v[k] < Delaunay::kSuperVertices) return false;
    const PlanarPoint a = dt.points()[t.v[0]];
    const PlanarPoint b = dt.points()[t.v[1]];
    const PlanarPoint c = dt.points()[t.v[2]];
    return point_in_polygon({(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0}, polygon);
  };

  // Ruppert-style quality pass on the kept triangles: insert circumcenters of
  // bad triangles, splitting any boundary subsegment a circumcenter encroaches.
  const double min_angle = options.min_angle_deg * M_PI / 180.0;
  const double max_edge = options.max_edge_factor * target_h;
  const double min_seg_len = 0.2 * target_h;
  const int insert_cap = options.max_vertices;
  for (int round = 0; round < 40; ++round) {
    bool changed = false;
    const std::size_t tri_count = dt.triangles().size();
    for (std::size_t ti = 0; ti < tri_count; ++ti) {
      const Tri t = dt.triangles()[ti];
      if (!t.alive || !centroid_inside(t)) continue;
      const PlanarPoint a = dt.points()[t.v[0]];
      const PlanarPoint b = dt.points()[t.v[1]];
      const PlanarPoint c = dt.points()[t.v[2]];
      if (tri_min_angle(a, b, c) >= min_angle && tri_max_edge(a, b, c) <= max_edge) continue;
      if (static_cast<int>(dt.points().size()) > insert_cap)
        throw ResourceError("mesh refinement exceeded the vertex cap");

      const PlanarPoint cc = circumcenter(a, b, c);
      // Split an encroached subsegment instead of inserting a center near it.
      std::size_t encroached = segs.size();
      for (std::size_t si = 0; si < segs.size(); ++si) {
        const PlanarPoint sa = dt.points()[segs[si].a];
        const PlanarPoint sb = dt.points()[segs[si].b];
        if (distance(sa, sb) < min_seg_len) continue;
        const PlanarPoint mid{0.5 * (sa.x + sb.x), 0.5 * (sa.y + sb.y)};
        if (distance(cc, mid) < 0.5 * distance(sa, sb) * (1.0 - 1e-12)) {
          encroached = si;
          break;
        }
      }
      if (encroached < segs.size()) {
        split_segment(encroached);
        changed = true;
      } else if (point_in_polygon(cc, polygon)) {
        dt.insert(cc);
        if (dt.points().size() > is_boundary.size()) is_boundary.resize(dt.points().size(), false);
        changed = true;
      }
      // Otherwise the triangle is left as-is; the final quality is reported
      // by mesh_min_angle_deg and checked by the callers' tests.
    }
    if (!changed) break;
  }

  // Compact the kept triangles into the result mesh.
  TriangularMesh mesh;
  std::vector<int> remap(dt.points().size(), -1);
  for (const Tri& t : dt.triangles()) {
    if (!t.alive || !centroid_inside(t)) continue;
    std::array<int, 3> tri;
    for (int k = 0; k < 3; ++k) {
      int& m = remap[t.v[k]];
      if (m < 0) {
        m = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(dt.points()[t.v[k]]);
        mesh.boundary_vertex.push_back(t.v[k] < static_cast<int>(is_boundary.size()) &&
                                       is_boundary[t.v[k]]);
      }
      tri[k] = m;
    }
    if (orient2d(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]) <= 0.0)
      std::swap(tri[1], tri[2]);
    mesh.triangles.push_back(tri);
  }
  if (mesh.triangles.empty()) throw GeometryError("triangulation produced no triangles");
  return mesh;
}

double triangle_area(const TriangularMesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  return 0.5 * orient2d(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
}

double mesh_area(const TriangularMesh& mesh) {
  double a = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
    a += triangle_area(mesh, static_cast<int>(t));
  return a;
}

double mesh_min_angle_deg(const TriangularMesh& mesh) {
  double m = 180.0;
  for (const auto& tri : mesh.triangles) {
    m = std::min(m, tri_min_angle(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                  mesh.vertices[tri[2]]) *
                        180.0 / M_PI);
  }
  return m;
}

double mesh_max_edge(const TriangularMesh& mesh) {
  double m = 0.0;
  for (const auto& tri : mesh.triangles) {
    m = std::max(m, tri_max_edge(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                 mesh.vertices[tri[2]]));
  }
  return m;
}

void write_mesh(const std::filesystem::path& path, const TriangularMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open mesh file for writing: " + path.string());
  out.precision(17);
  out << mesh.vertices.size() << '\n';
  for (const PlanarPoint& p : mesh.vertices) out << p.x << ' ' << p.y << '\n';
  out << mesh.triangles.size() << '\n';
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

TriangularMesh read_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mesh file: " + path.string());
  std::size_t nv = 0, nt = 0;
  TriangularMesh mesh;
  if (!(in >> nv)) throw Error("malformed mesh file: " + path.string());
  mesh.vertices.resize(nv);
  for (auto& p : mesh.vertices) in >> p.x >> p.y;
  if (!(in >> nt)) throw Error("malformed mesh file: " + path.string());
  mesh.triangles.resize(nt);
  for (auto& t : mesh.triangles) in >> t[0] >> t[1] >> t[2];
  if (!in) throw Error("malformed mesh file: " + path.string());
  mesh.boundary_vertex.assign(nv, false);
  return mesh;
}

}  // namespace qmem
