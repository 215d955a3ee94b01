#include "qmembrane/fem.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <random>

#include "qmembrane/errors.hpp"
#include "qmembrane/quasidisc.hpp"

namespace qmem {

namespace {

struct P1Gradients {
  // Row i is the constant gradient of the i-th barycentric basis function.
  double g[3][2];
  double area;
};

P1Gradients p1_gradients(PlanarPoint a, PlanarPoint b, PlanarPoint c) {
  const double twice = orient2d(a, b, c);
  if (!(twice > 0.0)) throw GeometryError("triangle with non-positive area in assembly");
  P1Gradients out;
  out.area = 0.5 * twice;
  out.g[0][0] = (b.y - c.y) / twice;
  out.g[0][1] = (c.x - b.x) / twice;
  out.g[1][0] = (c.y - a.y) / twice;
  out.g[1][1] = (a.x - c.x) / twice;
  out.g[2][0] = (a.y - b.y) / twice;
  out.g[2][1] = (b.x - a.x) / twice;
  return out;
}

}  // namespace

SparseMatrix assemble_stiffness(const TriangularMesh& mesh, const CoefficientFn& coeff) {
  const int n = static_cast<int>(mesh.vertices.size());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(mesh.triangles.size() * 9);
  for (const auto& tri : mesh.triangles) {
    const PlanarPoint a = mesh.vertices[tri[0]];
    const PlanarPoint b = mesh.vertices[tri[1]];
    const PlanarPoint c = mesh.vertices[tri[2]];
    const P1Gradients p1 = p1_gradients(a, b, c);
    const PlanarPoint centroid{(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
    const MatrixEntries m = coeff(centroid);
    if (!(m.a11 > 0.0) || !(m.det() > 0.0))
      throw InvalidFieldError("non-elliptic coefficient sample at a triangle centroid");
    for (int i = 0; i < 3; ++i) {
      const double agx = m.a11 * p1.g[i][0] + m.a12 * p1.g[i][1];
      const double agy = m.a12 * p1.g[i][0] + m.a22 * p1.g[i][1];
      for (int j = 0; j < 3; ++j) {
        const double v = p1.area * (agx * p1.g[j][0] + agy * p1.g[j][1]);
        trips.emplace_back(tri[i], tri[j], v);
      }
    }
  }
  SparseMatrix k(n, n);
  k.setFromTriplets(trips.begin(), trips.end());
  return k;
}

SparseMatrix assemble_mass(const TriangularMesh& mesh) {
  const int n = static_cast<int>(mesh.vertices.size());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(mesh.triangles.size() * 9);
  for (const auto& tri : mesh.triangles) {
    const PlanarPoint a = mesh.vertices[tri[0]];
    const PlanarPoint b = mesh.vertices[tri[1]];
    const PlanarPoint c = mesh.vertices[tri[2]];
    const double area = 0.5 * orient2d(a, b, c);
    if (!(area > 0.0)) throw GeometryError("triangle with non-positive area in assembly");
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trips.emplace_back(tri[i], tri[j], area / 12.0 * (i == j ? 2.0 : 1.0));
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

FemSystem assemble_system(const TriangularMesh& mesh, const CoefficientFn& coeff) {
  FemSystem sys;
  sys.stiffness = assemble_stiffness(mesh, coeff);
  sys.mass = assemble_mass(mesh);
  sys.dimension = static_cast<int>(mesh.vertices.size());
  return sys;
}

EigenResult first_nontrivial_neumann(const FemSystem& system, const EigenOptions& options) {
  const int n = system.dimension;
  if (n < 3) throw SolverError("eigenproblem dimension too small");
  const SparseMatrix& K = system.stiffness;
  const SparseMatrix& M = system.mass;

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd m_ones = M * ones;
  const double ones_m_ones = ones.dot(m_ones);
  auto deflate = [&](Eigen::VectorXd& v) { v -= (m_ones.dot(v) / ones_m_ones) * ones; };

  // Shift from the Rayleigh quotient of a mean-zero coordinate probe; any
  // positive value works for shift-inversion toward the smallest eigenvalue.
  Eigen::VectorXd probe(n);
  for (int i = 0; i < n; ++i) probe[i] = static_cast<double>(i % 17) - 8.0;
  deflate(probe);
  const double probe_q = probe.dot(K * probe) / probe.dot(M * probe);
  const double sigma = std::max(0.05 * probe_q, 1e-12);

  SparseMatrix shifted = K + sigma * M;
  Eigen::SimplicialLDLT<SparseMatrix> solver;
  solver.compute(shifted);
  if (solver.info() != Eigen::Success)
    throw SolverError("sparse factorization of the shifted stiffness failed");

  const int block = std::min(options.block_size, n - 1);
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::MatrixXd X(n, block);
  for (int j = 0; j < block; ++j)
    for (int i = 0; i < n; ++i) X(i, j) = unif(rng);

  double mu = 0.0;
  Eigen::VectorXd v;
  double residual = 0.0;
  int iter = 0;
  for (iter = 1; iter <= options.max_iter; ++iter) {
    // One block step of shift-inverted iteration with Ritz extraction.
    Eigen::MatrixXd Y(n, block);
    for (int j = 0; j < block; ++j) {
      Eigen::VectorXd col = X.col(j);
      deflate(col);
      Eigen::VectorXd rhs = M * col;
      Eigen::VectorXd y = solver.solve(rhs);
      if (solver.info() != Eigen::Success) throw SolverError("shift-invert solve failed");
      deflate(y);
      Y.col(j) = y;
    }
    const Eigen::MatrixXd ky = Y.transpose() * (K * Y).eval();
    const Eigen::MatrixXd my = Y.transpose() * (M * Y).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ritz(ky, my);
    if (ritz.info() != Eigen::Success) throw SolverError("Ritz projection failed");
    X = Y * ritz.eigenvectors();

    mu = ritz.eigenvalues()(0);
    v = X.col(0);
    const Eigen::VectorXd mv = M * v;
    residual = (K * v - mu * mv).norm() / mv.norm();
    if (residual < options.tol) break;
  }
  if (residual >= options.tol)
    throw NonConvergenceError("eigensolver did not reach tolerance", residual);

  // Normalize to unit M-norm with a deterministic sign.
  v /= std::sqrt(v.dot(M * v));
  int imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v[imax] < 0.0) v = -v;

  EigenResult result;
  result.mu1 = mu;
  result.eigenvector = v;
  result.iterations = iter;
  result.residual_norm = residual;
  return result;
}

double poincare_constant(const EigenResult& result) {
  if (!(result.mu1 > 0.0)) throw DomainError("eigenvalue must be positive");
  return 1.0 / std::sqrt(result.mu1);
}

ScalarField2D test_function_re_w() {
  return {[](PlanarPoint p) { return p.x; }, [](PlanarPoint) { return PlanarPoint{1.0, 0.0}; }};
}

ScalarField2D test_function_re_w2() {
  return {[](PlanarPoint p) { return p.x * p.x - p.y * p.y; },
          [](PlanarPoint p) { return PlanarPoint{2.0 * p.x, -2.0 * p.y}; }};
}

ScalarField2D test_function_im_w() {
  return {[](PlanarPoint p) { return p.y; }, [](PlanarPoint) { return PlanarPoint{0.0, 1.0}; }};
}

namespace {

// Jacobian of the map at p: finite differences of the periodic part on the
// grid, interpolated bilinearly, plus the exact affine parts.
struct MapJacobianField {
  const PlanarMap& map;
  std::vector<Complex> dx, dy;  // grid samples of d(periodic)/dx, d(periodic)/dy

  explicit MapJacobianField(const PlanarMap& m) : map(m) {
    const int n = map.grid().n;
    const double h = map.grid().spacing();
    const std::span<const Complex> per = map.periodic_displacement();
    dx.resize(per.size());
    dy.resize(per.size());
    auto at = [&](int ix, int iy) {
      return per[static_cast<std::size_t>(((iy % n) + n) % n) * n + (((ix % n) + n) % n)];
    };
    for (int iy = 0; iy < n; ++iy) {
      for (int ix = 0; ix < n; ++ix) {
        const std::size_t idx = static_cast<std::size_t>(iy) * n + ix;
        dx[idx] = (at(ix + 1, iy) - at(ix - 1, iy)) / (2.0 * h);
        dy[idx] = (at(ix, iy + 1) - at(ix, iy - 1)) / (2.0 * h);
      }
    }
  }

  // Returns [d phi1/dx, d phi1/dy; d phi2/dx, d phi2/dy].
  std::array<double, 4> operator()(PlanarPoint p) const {
    const int n = map.grid().n;
    const double h = map.grid().spacing();
    const double fx = (p.x + map.grid().half_width) / h;
    const double fy = (p.y + map.grid().half_width) / h;
    const int ix = static_cast<int>(std::floor(fx));
    const int iy = static_cast<int>(std::floor(fy));
    const double tx = fx - ix;
    const double ty = fy - iy;
    auto wrap = [n](int i) { return ((i % n) + n) % n; };
    auto lerp = [&](const std::vector<Complex>& f) {
      const int x0 = wrap(ix), x1 = wrap(ix + 1), y0 = wrap(iy), y1 = wrap(iy + 1);
      return f[static_cast<std::size_t>(y0) * n + x0] * ((1 - tx) * (1 - ty)) +
             f[static_cast<std::size_t>(y0) * n + x1] * (tx * (1 - ty)) +
             f[static_cast<std::size_t>(y1) * n + x0] * ((1 - tx) * ty) +
             f[static_cast<std::size_t>(y1) * n + x1] * (tx * ty);
    };
    const Complex b = map.conj_coeff();
    const Complex px = Complex(1.0, 0.0) + b + lerp(dx);            // d phi / dx
    const Complex py = Complex(0.0, 1.0) - b * Complex(0, 1) + lerp(dy);  // d phi / dy
    return {px.real(), py.real(), px.imag(), py.imag()};
  }
};

}  // namespace

double composition_isometry_check(const ScalarField2D& u, const PlanarMap& map,
                                  const SymmetricMatrixField& a, double quadrature_h,
                                  int n_boundary) {
  if (map.residual_l2() > 1e-2)
    throw Error("map residual too large for a reliable isometry check");

  // Unnormalized quasidisc polygon and a matching unit-disc polygon.
  std::vector<PlanarPoint> circle;
  circle.reserve(n_boundary);
  for (int i = 0; i < n_boundary; ++i) {
    const double th = 2.0 * M_PI * i / n_boundary;
    circle.push_back({std::cos(th), std::sin(th)});
  }
  std::vector<PlanarPoint> preimage = invert_map(map, circle, 1e-10);
  if (polygon_area(preimage) < 0.0) std::reverse(preimage.begin(), preimage.end());

  const MapJacobianField jac(map);

  const TriangularMesh mesh_a = triangulate_polygon(preimage, quadrature_h);
  double energy_a = 0.0;
  for (std::size_t t = 0; t < mesh_a.triangles.size(); ++t) {
    const auto& tri = mesh_a.triangles[t];
    const PlanarPoint pa = mesh_a.vertices[tri[0]];
    const PlanarPoint pb = mesh_a.vertices[tri[1]];
    const PlanarPoint pc = mesh_a.vertices[tri[2]];
    const PlanarPoint c{(pa.x + pb.x + pc.x) / 3.0, (pa.y + pb.y + pc.y) / 3.0};
    const double area = 0.5 * orient2d(pa, pb, pc);
    const auto J = jac(c);
    const PlanarPoint w = evaluate_map(map, c);
    const PlanarPoint gu = u.gradient(w);
    // Chain rule: grad (u o phi) = J^T grad u.
    const double gx = J[0] * gu.x + J[2] * gu.y;
    const double gy = J[1] * gu.x + J[3] * gu.y;
    const MatrixEntries m = a(c);
    energy_a += area * (m.a11 * gx * gx + 2.0 * m.a12 * gx * gy + m.a22 * gy * gy);
  }

  const TriangularMesh mesh_i = triangulate_polygon(circle, quadrature_h);
  double energy_i = 0.0;
  for (std::size_t t = 0; t < mesh_i.triangles.size(); ++t) {
    const auto& tri = mesh_i.triangles[t];
    const PlanarPoint pa = mesh_i.vertices[tri[0]];
    const PlanarPoint pb = mesh_i.vertices[tri[1]];
    const PlanarPoint pc = mesh_i.vertices[tri[2]];
    const PlanarPoint c{(pa.x + pb.x + pc.x) / 3.0, (pa.y + pb.y + pc.y) / 3.0};
    const double area = 0.5 * orient2d(pa, pb, pc);
    const PlanarPoint gu = u.gradient(c);
    energy_i += area * (gu.x * gu.x + gu.y * gu.y);
  }

  if (!(energy_i > 0.0)) throw DomainError("test function has zero Dirichlet energy");
  return std::abs(energy_a - energy_i) / energy_i;
}

}  // namespace qmem
