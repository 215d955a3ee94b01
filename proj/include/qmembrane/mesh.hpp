#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "qmembrane/geometry2d.hpp"

namespace qmem {

struct TriangularMesh {
  std::vector<PlanarPoint> vertices;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<bool> boundary_vertex;
};

struct MeshOptions {
  double min_angle_deg = 20.0;   // quality refinement target
  double max_edge_factor = 1.5;  // max edge length as a multiple of target_h
  int max_vertices = 2'000'000;  // memory cap
};

/// Conforming triangulation of a simple polygon: boundary resampled at
/// ~target_h, hexagonal interior lattice, incremental Delaunay, then
/// Ruppert-style refinement (circumcenter insertion / boundary splitting)
/// until every triangle meets the angle and edge bounds.
TriangularMesh triangulate_polygon(std::span<const PlanarPoint> polygon, double target_h,
                                   const MeshOptions& options = {});

double mesh_area(const TriangularMesh& mesh);
double triangle_area(const TriangularMesh& mesh, int t);
double mesh_min_angle_deg(const TriangularMesh& mesh);
double mesh_max_edge(const TriangularMesh& mesh);

/// ASCII dump: vertex count, "x y" lines, triangle count, "i j k" lines.
void write_mesh(const std::filesystem::path& path, const TriangularMesh& mesh);
TriangularMesh read_mesh(const std::filesystem::path& path);

}  // namespace qmem
