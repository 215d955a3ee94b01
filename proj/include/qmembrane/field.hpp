#pragma once

#include <functional>
#include <map>
#include <string>

#include "qmembrane/geometry2d.hpp"

namespace qmem {

/// Entries of a symmetric 2x2 coefficient matrix at one point.
struct MatrixEntries {
  double a11 = 1.0;
  double a12 = 0.0;
  double a22 = 1.0;

  double det() const { return a11 * a22 - a12 * a12; }
  /// Larger eigenvalue; for det = 1 fields the smaller one is its reciprocal.
  double max_eigenvalue() const {
    const double tr = a11 + a22;
    const double d = std::sqrt((a11 - a22) * (a11 - a22) + 4.0 * a12 * a12);
    return 0.5 * (tr + d);
  }
};

/// Pointwise conversion A(z) -> mu(z). Throws InvalidFieldError when det(I + A) <= 0.
Complex dilatation_entries(const MatrixEntries& a);

/// Pointwise conversion mu(z) -> A(z). Throws InvalidDilatationError when |mu| >= 1.
MatrixEntries matrix_entries(Complex mu);

inline constexpr int kDefaultScanResolution = 2048;

/// Complex dilatation field mu(z), compactly supported: mu = 0 for |z| > support_radius.
class DilatationField {
public:
  /// Wraps an evaluator; scans a scan_n x scan_n grid over the support window to
  /// determine the sup norm and validate |mu| < 1 everywhere.
  DilatationField(std::function<Complex(PlanarPoint)> mu, double support_radius,
                  int scan_n = kDefaultScanResolution);

  Complex operator()(PlanarPoint p) const;

  double support_radius() const { return support_radius_; }
  double sup_norm() const { return sup_norm_; }

private:
  std::function<Complex(PlanarPoint)> mu_;
  double support_radius_;
  double sup_norm_;
};

/// Symmetric det-1 coefficient matrix field; identity outside support_radius.
class SymmetricMatrixField {
public:
  /// Validates positivity and |det - 1| <= det_tol on a scan grid over the support window.
  SymmetricMatrixField(std::function<MatrixEntries(PlanarPoint)> entries, double support_radius,
                       int scan_n = kDefaultScanResolution, double det_tol = 1e-12);

  MatrixEntries operator()(PlanarPoint p) const;

  double support_radius() const { return support_radius_; }
  /// Smallest K >= 1 with (1/K)|xi|^2 <= <A xi, xi> <= K|xi|^2 over the scan grid.
  double ellipticity_constant() const { return ellipticity_; }

private:
  std::function<MatrixEntries(PlanarPoint)> entries_;
  double support_radius_;
  double ellipticity_;
};

struct EllipticityConstants {
  double K = 1.0;       // ellipticity constant
  double mu_sup = 0.0;  // sup |mu|
  double K_A = 1.0;     // (1 + mu_sup) / (1 - mu_sup)
};

DilatationField dilatation_from_matrix(const SymmetricMatrixField& a,
                                       int scan_n = kDefaultScanResolution);

SymmetricMatrixField matrix_from_dilatation(const DilatationField& mu,
                                            int scan_n = kDefaultScanResolution);

inline double ellipticity_constant(const SymmetricMatrixField& a) {
  return a.ellipticity_constant();
}

EllipticityConstants quasiconformality_coefficient(const DilatationField& mu);

// ---------------------------------------------------------------------------
// Dilatation presets. Each is C-infinity and vanishes identically outside its
// support radius; truncation uses an exp-based smooth step so the spectral
// solver sees no jump at the support boundary.
//
//   zero()
//   constant(re=0.3, im=0.0, support=2.0, plateau=0.8)
//       mu = (re + i*im) for |z| <= plateau*support, smooth decay to 0 at support.
//   radial_bump(amplitude=0.4, radius=1.5, sharpness=4.0)
//       mu = amplitude * exp(-sharpness * t^2 / (1 - t^2)), t = |z|/radius.
//   gaussian_bump(amplitude=0.45, sigma=0.8, support=2.0, core=0.5)
//       gaussian profile times a smooth cutoff starting at core*support.
//   checker(amplitude=0.35, period=1.0, phase=0.6, support=2.0, core=0.6)
//       mu = amplitude * e^{i phase} * sin(pi x/period) sin(pi y/period) * cutoff.
//   radial_stretch(k=2.0, radius=2.0, core=0.75)
//       mu = ((k-1)/(k+1)) * z/conj(z) * cutoff; the smooth truncation of the
//       map z |z|^{k-1}.
// ---------------------------------------------------------------------------

struct PresetSpec {
  std::string name = "zero";
  std::map<std::string, double> params;
};

/// Parses "name" or "name(key=value, key=value, ...)".
PresetSpec parse_preset(const std::string& text);

/// Renders the spec with all defaults filled in, e.g. "constant(im=0,re=0.3,...)".
std::string preset_to_string(const PresetSpec& spec);

/// Builds the dilatation field for a preset. Throws ConfigError on unknown
/// names or parameters.
DilatationField make_preset(const PresetSpec& spec, int scan_n = kDefaultScanResolution);

/// Smooth step: 1 for r <= r0, 0 for r >= r1, C-infinity in between.
double smooth_cutoff(double r, double r0, double r1);

}  // namespace qmem
