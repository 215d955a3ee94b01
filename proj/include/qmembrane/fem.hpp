#pragma once

#include <Eigen/Sparse>
#include <cstdint>
#include <functional>

#include "qmembrane/beltrami.hpp"
#include "qmembrane/field.hpp"
#include "qmembrane/mesh.hpp"

namespace qmem {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Coefficient evaluator for assembly; adapts SymmetricMatrixField or any
/// pulled-back / translated variant of one.
using CoefficientFn = std::function<MatrixEntries(PlanarPoint)>;

inline CoefficientFn identity_coefficient() {
  return [](PlanarPoint) { return MatrixEntries{}; };
}

inline CoefficientFn coefficient_of(const SymmetricMatrixField& a) {
  return [a](PlanarPoint p) { return a(p); };
}

/// P1 stiffness with the coefficient frozen at each triangle centroid.
/// Throws InvalidFieldError on a non-elliptic centroid sample.
SparseMatrix assemble_stiffness(const TriangularMesh& mesh, const CoefficientFn& coeff);

/// Consistent P1 mass matrix.
SparseMatrix assemble_mass(const TriangularMesh& mesh);

struct FemSystem {
  SparseMatrix stiffness;
  SparseMatrix mass;
  int dimension = 0;
};

FemSystem assemble_system(const TriangularMesh& mesh, const CoefficientFn& coeff);

struct EigenOptions {
  double tol = 1e-9;        // generalized residual ||Kv - mu Mv|| / ||Mv||
  int max_iter = 300;
  std::uint64_t seed = 42;  // starting block
  int block_size = 8;
};

struct EigenResult {
  double mu1 = 0.0;
  Eigen::VectorXd eigenvector;
  int iterations = 0;
  double residual_norm = 0.0;
};

/// Smallest eigenvalue of K v = mu M v on the M-orthogonal complement of the
/// constants: shift-inverted block inverse iteration with Rayleigh-Ritz
/// extraction and explicit deflation of the constant vector each step.
/// Deterministic given the seed.
EigenResult first_nontrivial_neumann(const FemSystem& system, const EigenOptions& options = {});

/// Best constant in the mean-zero Poincare inequality: mu1^{-1/2}.
double poincare_constant(const EigenResult& result);

/// Differentiable test function on (a neighborhood of) the closed unit disc.
struct ScalarField2D {
  std::function<double(PlanarPoint)> value;
  std::function<PlanarPoint(PlanarPoint)> gradient;
};

ScalarField2D test_function_re_w();   // Re w
ScalarField2D test_function_re_w2();  // Re w^2
ScalarField2D test_function_im_w();   // Im w

/// Relative discrepancy |E_A - E_I| / E_I between the A-weighted energy of
/// u∘phi over the (unnormalized) quasidisc and the Dirichlet energy of u over
/// the unit disc, both by centroid quadrature at resolution quadrature_h; the
/// composite gradient goes through finite-difference map derivatives.
double composition_isometry_check(const ScalarField2D& u, const PlanarMap& map,
                                  const SymmetricMatrixField& a, double quadrature_h,
                                  int n_boundary = 512);

}  // namespace qmem
