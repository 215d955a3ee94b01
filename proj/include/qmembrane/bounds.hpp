#pragma once

#include <cstdint>
#include <string>

#include "qmembrane/bessel.hpp"
#include "qmembrane/fem.hpp"
#include "qmembrane/quasidisc.hpp"

namespace qmem {

// ---------------------------------------------------------------------------
// Closed-form lower bounds for the first non-trivial Neumann eigenvalue of
// -div(A grad u) on an area-pi quasidisc. j' denotes the first positive zero
// of the derivative of the Bessel function J1.
// ---------------------------------------------------------------------------

/// (1/(4K)) (j'/R)^2 with R the anchored enclosing radius.
double bound_from_enclosing_radius(double K, double R);

/// 64 j'^2 / (K e^{2 pi K}); the fully geometry-free exponential bound.
double bound_exponential(double K);

/// (64 j'^2 / K) exp(-2 pi (1+mu_sup)/(1-mu_sup)); coincides with
/// bound_exponential(K) when (1+mu_sup)/(1-mu_sup) = K.
double bound_mu_norm(double K, double mu_sup);

/// mu1_outer / extension_norm^2, for an outer domain with the same operator.
double bound_from_outer_domain(double mu1_outer, double extension_norm);

/// mu1_laplace_outer / (K extension_norm^2), outer eigenvalue of the Laplacian.
double bound_from_outer_laplacian(double mu1_laplace_outer, double K, double extension_norm);

/// Norms of the reflection extension construction; the defaults are the
/// half-plane symmetry value 2 and the induced whole-plane operator norm 2.
struct ExtensionNormModel {
  double omega_norm = 2.0;
  double extension_norm = 2.0;
};

/// Scalar field on the whole window produced by reflecting through the map.
struct ExtendedField {
  std::function<double(PlanarPoint)> value;
};

/// Extension by quasiconformal reflection: inside the quasidisc (|phi(z)| < 1)
/// the value is u(z); outside it is u(phi^{-1}(phi(z)/|phi(z)|^2)), the
/// unit-circle inversion conjugated through the map.
ExtendedField reflect_extend(std::function<double(PlanarPoint)> u, const PlanarMap& map,
                             double invert_tol = 1e-10);

/// Quadrature ratio (A-weighted energy of the extension over the window) /
/// (A-weighted energy of u over the quasidisc). Cells straddling the
/// boundary kink are skipped in the numerator.
double extension_energy_ratio(const ScalarField2D& u, const PlanarMap& map,
                              const SymmetricMatrixField& a, int window_samples = 192,
                              double quadrature_h = 0.05, double invert_tol = 1e-10,
                              int n_boundary = 512);

// ---------------------------------------------------------------------------
// Full pipeline report.
// ---------------------------------------------------------------------------

enum class Flag { PASS, WARN, FAIL, SKIP };
std::string to_string(Flag f);

struct BoundFlags {
  Flag bound_a = Flag::SKIP;
  Flag bound_b = Flag::SKIP;
  Flag bound_b_ka = Flag::SKIP;
  Flag bound_c = Flag::SKIP;
  Flag bound_d = Flag::SKIP;
  Flag distortion = Flag::SKIP;

  bool any_fail() const;
};

struct PipelineConfig {
  PresetSpec preset;
  int grid_n = 1024;
  double grid_l = 4.0;
  int n_boundary = 1024;
  double mesh_h = 0.025;
  double beltrami_tol = 1e-8;
  int beltrami_max_iter = 200;
  double eigen_tol = 1e-9;
  double invert_tol = 1e-10;
  std::uint64_t seed = 42;
  int scan_n = kDefaultScanResolution;
  ExtensionNormModel extension;
  bool measure_extension_ratio = true;
  int extension_window_samples = 192;
  double quadrature_h = 0.05;
  bool run_fem = true;
  double multiplier_scale = 1.0;  // debug fault injection

  void validate() const;  // throws ConfigError naming the offending field
};

struct BoundReport {
  // Constants of the coefficient field.
  double k = 1.0;
  double k_a = 1.0;
  double mu_sup = 0.0;
  // Geometry of the normalized quasidisc.
  double r_centered = 0.0;
  double r_sec = 0.0;
  double r_inradius = 0.0;
  double distortion_bound = 0.0;
  // Bounds.
  double j_prime = 0.0;
  double bound_a = 0.0;
  double bound_b = 0.0;
  double bound_b_ka = 0.0;
  double bound_c = 0.0;
  double bound_d = 0.0;
  // Finite-element oracle.
  double fem_mu1 = 0.0;
  BoundFlags flags;

  // Diagnostics.
  double beltrami_residual = 0.0;
  int beltrami_iterations = 0;
  double fem_residual = 0.0;
  int fem_iterations = 0;
  int fem_dimension = 0;
  double mu1_outer_disc = 0.0;
  double extension_ratio = 0.0;
  double poincare = 0.0;
  double raw_area = 0.0;
  double scale_applied = 1.0;
  EnclosingCircle sec;

  PipelineConfig config;
};

/// Runs the full pipeline: preset -> matrix field -> Beltrami solve ->
/// quasidisc -> radii -> FEM oracle (on the normalized polygon with the
/// pulled-back coefficient) -> all bounds and flags. Errors from the stages
/// propagate with a "stage <name>:" prefix.
BoundReport build_report(const PipelineConfig& config);

/// Fixed-key JSON document; the timestamp field is emitted only on request so
/// determinism checks can compare byte-identical output.
std::string report_to_json(const BoundReport& report, bool include_timestamp = true);

std::string report_csv_header();
std::string report_to_csv_row(const BoundReport& report);

}  // namespace qmem
