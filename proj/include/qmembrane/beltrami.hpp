#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "qmembrane/field.hpp"
#include "qmembrane/grid.hpp"

namespace qmem {

enum class MapDirection { forward, inverse };

/// Sampled planar map phi(z) = z + conj_coeff * conj(z) + periodic part.
///
/// The periodic displacement is stored row-major (index = iy * n + ix, node
/// z = (-L + ix h, -L + iy h)) and interpolated bilinearly with periodic
/// wrap; the conjugate-affine part is evaluated analytically so the total
/// displacement is exact up to interpolation everywhere in the window.
class PlanarMap {
public:
  PlanarMap(ComputationalGrid grid, std::vector<Complex> periodic_displacement,
            Complex conj_coeff, MapDirection direction = MapDirection::forward);

  static PlanarMap identity(ComputationalGrid grid);

  const ComputationalGrid& grid() const { return grid_; }
  MapDirection direction() const { return direction_; }
  Complex conj_coeff() const { return conj_coeff_; }
  std::span<const Complex> periodic_displacement() const { return periodic_; }

  /// Total displacement phi(z) - z at a grid node.
  Complex displacement_at(int ix, int iy) const;

  /// Bilinear interpolation of the displacement at an arbitrary window point.
  Complex displacement(PlanarPoint p) const;

  double residual_l2() const { return residual_l2_; }
  int iterations() const { return static_cast<int>(update_history_.size()); }
  const std::vector<double>& update_history() const { return update_history_; }

  // Solver bookkeeping (set by solve_beltrami).
  void set_diagnostics(std::vector<double> updates, double residual);

private:
  ComputationalGrid grid_;
  std::vector<Complex> periodic_;
  Complex conj_coeff_;
  MapDirection direction_;
  double residual_l2_ = 0.0;
  std::vector<double> update_history_;
};

struct SolveOptions {
  double tol = 1e-8;
  int max_iter = 200;
  /// Debug fault injection: scales the Beurling multiplier. Leave at 1.
  double multiplier_scale = 1.0;
};

/// Principal-solution approximation of phi_zbar = mu * phi_z on the periodic
/// grid. Fixed point g <- mu * (1 + S g) with S the Beurling transform
/// (Fourier multiplier conj(k)/k, zero at k = 0); the mean of the iterate is
/// carried as the conjugate-affine coefficient so the discrete equation holds
/// across the identity tail. Converges geometrically with ratio sup|mu|.
PlanarMap solve_beltrami(const DilatationField& mu, const ComputationalGrid& grid,
                         const SolveOptions& options = {});

/// phi(p); p must satisfy max(|x|, |y|) <= L.
PlanarPoint evaluate_map(const PlanarMap& map, PlanarPoint p);

/// Newton inversion with finite-difference Jacobian, initial guess z0 = w.
std::vector<PlanarPoint> invert_map(const PlanarMap& map, std::span<const PlanarPoint> targets,
                                    double tol = 1e-10);

/// Relative L2 residual of phi_zbar - mu phi_z over the window |z| <= L/2,
/// derivatives by centered finite differences (independent of the spectral
/// solve), normalized by the L2 norm of phi_z.
double map_residual(const PlanarMap& map, const DilatationField& mu);

/// Versioned binary dump: magic, version, n, L, conj coefficient, then
/// row-major total displacement samples (see README for the exact layout).
void write_map(const std::filesystem::path& path, const PlanarMap& map);
PlanarMap read_map(const std::filesystem::path& path);

}  // namespace qmem
