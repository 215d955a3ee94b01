#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <complex>
#include <random>

#include "qmembrane/beltrami.hpp"
#include "qmembrane/errors.hpp"

using namespace qmem;

namespace {

DilatationField preset(const char* text, int scan = 128) {
  return make_preset(parse_preset(text), scan);
}

// Least-squares fit of phi ~ a z + b conj(z) + c over grid points with
// |z| <= radius; returns (a, b, rms misfit).
struct AffineFit {
  Complex a, b;
  double rms;
};

AffineFit fit_affine(const PlanarMap& map, double radius) {
  // Normal equations in the monomial basis {z, conj z, 1}.
  Eigen::Matrix3cd gram = Eigen::Matrix3cd::Zero();
  Eigen::Vector3cd rhs = Eigen::Vector3cd::Zero();
  const ComputationalGrid& g = map.grid();
  std::vector<std::pair<Complex, Complex>> samples;
  for (int iy = 0; iy < g.n; iy += 4) {
    for (int ix = 0; ix < g.n; ix += 4) {
      const Complex z{g.coord(ix), g.coord(iy)};
      if (std::abs(z) > radius) continue;
      const Complex phi = z + map.displacement_at(ix, iy);
      samples.push_back({z, phi});
      const Eigen::Vector3cd row(z, std::conj(z), Complex(1.0, 0.0));
      gram += row * row.adjoint();
      rhs += row * std::conj(phi);
    }
  }
  const Eigen::Vector3cd coef = gram.ldlt().solve(rhs).conjugate();
  double err2 = 0.0;
  for (const auto& [z, phi] : samples)
    err2 += std::norm(phi - (coef(0) * z + coef(1) * std::conj(z) + coef(2)));
  return {coef(0), coef(1), std::sqrt(err2 / samples.size())};
}

}  // namespace

TEST_CASE("zero dilatation gives the identity map") {
  const PlanarMap map = solve_beltrami(preset("zero"), ComputationalGrid(256, 4.0));
  CHECK(map.residual_l2() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(std::abs(map.conj_coeff()) < 1e-15);
  for (int iy = 0; iy < 256; iy += 37)
    for (int ix = 0; ix < 256; ix += 41) CHECK(std::abs(map.displacement_at(ix, iy)) < 1e-14);
  const PlanarPoint p = evaluate_map(map, {0.3, 0.4});
  CHECK(p.x == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(p.y == doctest::Approx(0.4).epsilon(1e-14));
}

TEST_CASE("bilinear interpolation is exact at nodes and averages at cell centers") {
  const ComputationalGrid grid(64, 2.0);
  // Periodic sawtooth-free displacement: sample a smooth periodic field.
  std::vector<Complex> per(64 * 64);
  for (int iy = 0; iy < 64; ++iy)
    for (int ix = 0; ix < 64; ++ix)
      per[iy * 64 + ix] = Complex(std::sin(M_PI * grid.coord(ix) / 2.0),
                                  std::cos(M_PI * grid.coord(iy) / 2.0));
  const PlanarMap map(grid, per, {0.0, 0.0});

  const Complex node = map.displacement({grid.coord(10), grid.coord(20)});
  CHECK(std::abs(node - per[20 * 64 + 10]) < 1e-15);

  const double h = grid.spacing();
  const Complex mid = map.displacement({grid.coord(10) + 0.5 * h, grid.coord(20) + 0.5 * h});
  const Complex mean = 0.25 * (per[20 * 64 + 10] + per[20 * 64 + 11] + per[21 * 64 + 10] +
                               per[21 * 64 + 11]);
  CHECK(std::abs(mid - mean) < 1e-15);
}

TEST_CASE("residual of the identity map against a constant dilatation is |mu|") {
  // Plateau of the constant preset covers the residual window |z| <= L/2.
  const DilatationField mu = preset("constant(re=0.3, support=2.0, plateau=0.8)");
  const PlanarMap map = PlanarMap::identity(ComputationalGrid(128, 2.0));
  CHECK(map_residual(map, mu) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("constant dilatation solves to the affine map") {
  const DilatationField mu = preset("constant(re=0.3333333333333333)");
  const PlanarMap map = solve_beltrami(mu, ComputationalGrid(512, 4.0));
  CHECK(map_residual(map, mu) < 1e-3);

  const AffineFit fit = fit_affine(map, 0.8 * 1.6);
  CHECK(std::abs(fit.b / fit.a - Complex(1.0 / 3.0, 0.0)) < 1e-4);
  CHECK(std::abs(fit.a - Complex(1.0, 0.0)) < 0.02);  // far-field conformal factor
  CHECK(fit.rms < 5e-4);
}

TEST_CASE("radial stretch residual") {
  const DilatationField mu = preset("radial_stretch(k=2.0, radius=2.0)");
  const PlanarMap map = solve_beltrami(mu, ComputationalGrid(512, 4.0));
  CHECK(map_residual(map, mu) < 1e-3);
  CHECK(std::abs(map.conj_coeff()) < 1e-6);  // radially symmetric forcing
}

TEST_CASE("gaussian bump residual and refinement") {
  const DilatationField mu = preset("gaussian_bump");
  const PlanarMap coarse = solve_beltrami(mu, ComputationalGrid(256, 4.0));
  const PlanarMap fine = solve_beltrami(mu, ComputationalGrid(512, 4.0));
  CHECK(fine.residual_l2() < 1e-4);
  CHECK(fine.residual_l2() < coarse.residual_l2());
}

TEST_CASE("geometric convergence of the fixed point") {
  for (const char* text : {"constant(re=0.3333333333333333)", "gaussian_bump", "checker"}) {
    CAPTURE(text);
    const DilatationField mu = preset(text);
    const PlanarMap map = solve_beltrami(mu, ComputationalGrid(256, 4.0));
    const std::vector<double>& u = map.update_history();
    REQUIRE(u.size() >= 5);
    for (std::size_t i = 3; i + 1 < u.size(); ++i) {
      CHECK(u[i + 1] / u[i] <= mu.sup_norm() + 0.05);
    }
  }
}

TEST_CASE("solved maps preserve orientation") {
  const DilatationField mu = preset("gaussian_bump");
  const PlanarMap map = solve_beltrami(mu, ComputationalGrid(256, 4.0));
  const ComputationalGrid& g = map.grid();
  const double h = g.spacing();
  int checked = 0;
  for (int iy = 1; iy < g.n - 1; ++iy) {
    const double y = g.coord(iy);
    for (int ix = 1; ix < g.n - 1; ++ix) {
      const double x = g.coord(ix);
      if (x * x + y * y > 4.0) continue;
      const Complex fx =
          (map.displacement_at(ix + 1, iy) - map.displacement_at(ix - 1, iy)) / (2.0 * h) + 1.0;
      const Complex fy = (map.displacement_at(ix, iy + 1) - map.displacement_at(ix, iy - 1)) /
                             (2.0 * h) +
                         Complex(0.0, 1.0);
      const double jac = fx.real() * fy.imag() - fx.imag() * fy.real();
      CHECK(jac > 0.0);
      ++checked;
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("forward and inverse round trips") {
  const DilatationField mu = preset("constant(re=0.3)");
  const PlanarMap map = solve_beltrami(mu, ComputationalGrid(256, 4.0));

  const PlanarPoint image = evaluate_map(map, {0.5, 0.0});
  const std::vector<PlanarPoint> back = invert_map(map, std::vector<PlanarPoint>{image}, 1e-10);
  CHECK(back[0].x == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(back[0].y == doctest::Approx(0.0));

  std::vector<PlanarPoint> circle;
  for (int i = 0; i < 256; ++i) {
    const double th = 2.0 * M_PI * i / 256;
    circle.push_back({std::cos(th), std::sin(th)});
  }
  const std::vector<PlanarPoint> pre = invert_map(map, circle, 1e-10);
  for (int i = 0; i < 256; ++i) {
    const PlanarPoint w = evaluate_map(map, pre[i]);
    CHECK(std::hypot(w.x - circle[i].x, w.y - circle[i].y) < 1e-10 * 1.0001 + 1e-12);
  }
}

TEST_CASE("solver error paths") {
  CHECK_THROWS_AS(
      DilatationField([](PlanarPoint) { return Complex{1.1, 0.0}; }, 1.0, 16),
      InvalidDilatationError);

  const DilatationField mu = preset("constant(re=0.5)");
  // Window too small for the identity tail.
  CHECK_THROWS_AS(solve_beltrami(mu, ComputationalGrid(128, 3.0)), ConfigError);

  SolveOptions strict;
  strict.tol = 1e-10;
  strict.max_iter = 2;
  try {
    solve_beltrami(mu, ComputationalGrid(128, 4.0), strict);
    FAIL("expected NonConvergenceError");
  } catch (const NonConvergenceError& e) {
    CHECK(e.last_update() > 1e-10);
  }

  const PlanarMap id = PlanarMap::identity(ComputationalGrid(64, 2.0));
  CHECK_THROWS_AS(evaluate_map(id, {2.5, 0.0}), OutOfWindowError);
}

TEST_CASE("map dump round trip") {
  const DilatationField mu = preset("gaussian_bump");
  const PlanarMap map = solve_beltrami(mu, ComputationalGrid(128, 4.0));
  const auto dir = std::filesystem::temp_directory_path() / "qmem_map_test";
  std::filesystem::create_directories(dir);
  write_map(dir / "m.qmap", map);
  const PlanarMap back = read_map(dir / "m.qmap");
  CHECK(back.grid().n == map.grid().n);
  CHECK(back.grid().half_width == map.grid().half_width);
  CHECK(back.conj_coeff() == map.conj_coeff());
  for (int iy = 0; iy < 128; iy += 13)
    for (int ix = 0; ix < 128; ix += 17)
      CHECK(std::abs(back.displacement_at(ix, iy) - map.displacement_at(ix, iy)) < 1e-16);
  std::filesystem::remove_all(dir);
}
