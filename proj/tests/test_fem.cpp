#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "qmembrane/bessel.hpp"
#include "qmembrane/errors.hpp"
#include "qmembrane/fem.hpp"

using namespace qmem;

namespace {

TriangularMesh reference_triangle() {
  TriangularMesh mesh;
  mesh.vertices = {{0, 0}, {1, 0}, {0, 1}};
  mesh.triangles = {{0, 1, 2}};
  mesh.boundary_vertex = {true, true, true};
  return mesh;
}

std::vector<PlanarPoint> unit_square() { return {{0, 0}, {1, 0}, {1, 1}, {0, 1}}; }

std::vector<PlanarPoint> disc_polygon(int n = 256) {
  const double r = std::sqrt(2.0 * M_PI / (n * std::sin(2.0 * M_PI / n)));
  std::vector<PlanarPoint> poly;
  for (int i = 0; i < n; ++i) {
    const double th = 2.0 * M_PI * i / n;
    poly.push_back({r * std::cos(th), r * std::sin(th)});
  }
  return poly;
}

}  // namespace

TEST_CASE("element matrices on the reference triangle") {
  const TriangularMesh mesh = reference_triangle();
  const Eigen::MatrixXd k = Eigen::MatrixXd(assemble_stiffness(mesh, identity_coefficient()));
  Eigen::Matrix3d expected;
  expected << 1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5;
  CHECK((k - expected).cwiseAbs().maxCoeff() < 1e-14);

  const Eigen::MatrixXd m = Eigen::MatrixXd(assemble_mass(mesh));
  Eigen::Matrix3d me;
  me << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  me *= 0.5 / 12.0;  // area / 12
  CHECK((m - me).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("assembled matrices satisfy the structural invariants") {
  const TriangularMesh mesh = triangulate_polygon(unit_square(), 0.1);
  const SparseMatrix k = assemble_stiffness(mesh, identity_coefficient());
  const SparseMatrix m = assemble_mass(mesh);

  CHECK((Eigen::MatrixXd(k) - Eigen::MatrixXd(k).transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((Eigen::MatrixXd(m) - Eigen::MatrixXd(m).transpose()).cwiseAbs().maxCoeff() < 1e-12);

  // Constants in the stiffness kernel; mass entries sum to the area.
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.vertices.size());
  CHECK((k * ones).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(ones.dot(m * ones) == doctest::Approx(1.0).epsilon(1e-10));

  // Positive definiteness of the mass via random quadratic forms.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd v(mesh.vertices.size());
    for (int i = 0; i < v.size(); ++i) v[i] = unif(rng);
    CHECK(v.dot(m * v) > 0.0);
  }
}

TEST_CASE("assembly is linear in the coefficient") {
  const TriangularMesh mesh = triangulate_polygon(unit_square(), 0.15);
  const auto diag = [](double a, double b) {
    return CoefficientFn([a, b](PlanarPoint) { return MatrixEntries{a, 0.0, b}; });
  };
  const Eigen::MatrixXd k_aniso = Eigen::MatrixXd(assemble_stiffness(mesh, diag(0.5, 2.0)));
  const Eigen::MatrixXd k_swap = Eigen::MatrixXd(assemble_stiffness(mesh, diag(2.0, 0.5)));
  const Eigen::MatrixXd k_id = Eigen::MatrixXd(assemble_stiffness(mesh, identity_coefficient()));
  CHECK((k_aniso + k_swap - 2.5 * k_id).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("non-elliptic coefficient samples are rejected") {
  const TriangularMesh mesh = triangulate_polygon(unit_square(), 0.3);
  CHECK_THROWS_AS(
      assemble_stiffness(mesh, [](PlanarPoint) { return MatrixEntries{-1.0, 0.0, 1.0}; }),
      InvalidFieldError);
}

TEST_CASE("Neumann eigenvalue of the unit square") {
  const TriangularMesh mesh = triangulate_polygon(unit_square(), 0.05);
  const FemSystem sys = assemble_system(mesh, identity_coefficient());
  const EigenResult res = first_nontrivial_neumann(sys);
  const double pi2 = M_PI * M_PI;
  CHECK(std::abs(res.mu1 - pi2) / pi2 < 0.01);
  CHECK(res.residual_norm < 1e-9);

  // Eigenvector is mass-orthogonal to the constants.
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(sys.dimension);
  CHECK(std::abs(res.eigenvector.dot(sys.mass * ones)) < 1e-10);

  CHECK(poincare_constant(res) == doctest::Approx(1.0 / M_PI).epsilon(0.01));

  // Determinism: same seed, same bits.
  const EigenResult again = first_nontrivial_neumann(sys);
  CHECK(again.mu1 == res.mu1);
}

TEST_CASE("Neumann eigenvalue of the anisotropic square") {
  const TriangularMesh mesh = triangulate_polygon(unit_square(), 0.05);
  const FemSystem sys =
      assemble_system(mesh, [](PlanarPoint) { return MatrixEntries{0.5, 0.0, 2.0}; });
  const EigenResult res = first_nontrivial_neumann(sys);
  const double expected = M_PI * M_PI / 2.0;
  CHECK(std::abs(res.mu1 - expected) / expected < 0.01);
}

TEST_CASE("Neumann eigenvalue of the area-pi disc") {
  const TriangularMesh mesh = triangulate_polygon(disc_polygon(), 0.05);
  const FemSystem sys = assemble_system(mesh, identity_coefficient());
  const EigenResult res = first_nontrivial_neumann(sys);
  const double jp = bessel_first_derivative_zero();
  CHECK(std::abs(res.mu1 - jp * jp) / (jp * jp) < 0.015);
}

TEST_CASE("poincare constant") {
  EigenResult r;
  r.mu1 = 4.0;
  CHECK(poincare_constant(r) == doctest::Approx(0.5).epsilon(1e-15));
  r.mu1 = bessel_first_derivative_zero() * bessel_first_derivative_zero();
  CHECK(poincare_constant(r) == doctest::Approx(0.5431285558749782).epsilon(1e-10));
  r.mu1 = -1.0;
  CHECK_THROWS_AS(poincare_constant(r), DomainError);
}

TEST_CASE("ellipticity sandwich at the quadratic-form and eigenvalue level") {
  const DilatationField mu = make_preset(parse_preset("constant(re=0.3333333333333333)"), 128);
  const SymmetricMatrixField a = matrix_from_dilatation(mu, 128);
  const double K = a.ellipticity_constant();

  const TriangularMesh mesh = triangulate_polygon(disc_polygon(128), 0.08);
  const SparseMatrix k_a = assemble_stiffness(mesh, coefficient_of(a));
  const SparseMatrix k_i = assemble_stiffness(mesh, identity_coefficient());
  const SparseMatrix m = assemble_mass(mesh);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd v(mesh.vertices.size());
    for (int i = 0; i < v.size(); ++i) v[i] = unif(rng);
    const double qa = v.dot(k_a * v);
    const double qi = v.dot(k_i * v);
    CHECK(qa >= qi / K - 1e-10);
    CHECK(qa <= K * qi + 1e-10);
  }

  const double mu_a = first_nontrivial_neumann({k_a, m, (int)mesh.vertices.size()}).mu1;
  const double mu_i = first_nontrivial_neumann({k_i, m, (int)mesh.vertices.size()}).mu1;
  CHECK(mu_a >= mu_i / K - 1e-9);
  CHECK(mu_a <= K * mu_i + 1e-9);
}

TEST_CASE("eigensolver error paths") {
  const TriangularMesh mesh = triangulate_polygon(unit_square(), 0.4);
  const FemSystem sys = assemble_system(mesh, identity_coefficient());
  EigenOptions strict;
  strict.tol = 1e-16;
  strict.max_iter = 1;
  CHECK_THROWS_AS(first_nontrivial_neumann(sys, strict), NonConvergenceError);
}

TEST_CASE("composition isometry for the identity map") {
  const PlanarMap map = PlanarMap::identity(ComputationalGrid(128, 4.0));
  const SymmetricMatrixField id([](PlanarPoint) { return MatrixEntries{}; }, 2.0, 32);
  const double disc = composition_isometry_check(test_function_re_w(), map, id, 0.1);
  CHECK(disc < 1e-6);
}

TEST_CASE("composition isometry for the constant dilatation") {
  const DilatationField mu = make_preset(parse_preset("constant(re=0.3333333333333333)"), 256);
  const SymmetricMatrixField a = matrix_from_dilatation(mu, 256);
  const PlanarMap coarse = solve_beltrami(mu, ComputationalGrid(256, 4.0));
  const PlanarMap fine = solve_beltrami(mu, ComputationalGrid(512, 4.0));

  const double d_rew = composition_isometry_check(test_function_re_w(), fine, a, 0.05);
  const double d_rew2 = composition_isometry_check(test_function_re_w2(), fine, a, 0.05);
  CHECK(d_rew < 0.02);
  CHECK(d_rew2 < 0.02);

  // One refinement step (halving both resolutions) shrinks the discrepancy.
  const double d_coarse = composition_isometry_check(test_function_re_w2(), coarse, a, 0.1);
  const double d_fine = composition_isometry_check(test_function_re_w2(), fine, a, 0.05);
  CHECK(d_fine < d_coarse);
}
