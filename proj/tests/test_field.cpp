#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "qmembrane/errors.hpp"
#include "qmembrane/field.hpp"

using namespace qmem;

namespace {
constexpr int kScan = 128;  // fast scan resolution for unit tests
}

TEST_CASE("pointwise dilatation from matrix entries") {
  CHECK(std::abs(dilatation_entries({1.0, 0.0, 1.0})) == doctest::Approx(0.0));
  const Complex mu_half = dilatation_entries({0.5, 0.0, 2.0});
  CHECK(mu_half.real() == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(mu_half.imag() == doctest::Approx(0.0));
  for (double k : {2.0, 3.0, 7.5}) {
    const Complex mu = dilatation_entries({1.0 / k, 0.0, k});
    CHECK(mu.real() == doctest::Approx((k - 1.0) / (k + 1.0)).epsilon(1e-14));
    CHECK(mu.imag() == doctest::Approx(0.0));
  }
}

TEST_CASE("pointwise matrix from dilatation") {
  const MatrixEntries id = matrix_entries({0.0, 0.0});
  CHECK(id.a11 == doctest::Approx(1.0));
  CHECK(id.a12 == doctest::Approx(0.0));
  CHECK(id.a22 == doctest::Approx(1.0));
  const MatrixEntries m = matrix_entries({1.0 / 3.0, 0.0});
  CHECK(m.a11 == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(m.a22 == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(m.a12 == doctest::Approx(0.0));
  CHECK_THROWS_AS(matrix_entries({1.0, 0.0}), InvalidDilatationError);
  CHECK_THROWS_AS(matrix_entries({0.8, 0.7}), InvalidDilatationError);
}

TEST_CASE("pointwise round trips on random elliptic samples") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  int tested = 0;
  while (tested < 1000) {
    const Complex mu{0.9 * unif(rng), 0.9 * unif(rng)};
    if (std::abs(mu) > 0.9) continue;
    ++tested;
    const MatrixEntries a = matrix_entries(mu);
    CHECK(std::abs(a.det() - 1.0) < 1e-12);
    const Complex back = dilatation_entries(a);
    CHECK(std::abs(back - mu) < 1e-12);

    // and the other direction, starting from a random det-1 matrix
    const double a11 = 0.3 + 2.0 * std::abs(unif(rng));
    const double a12 = unif(rng);
    const MatrixEntries m{a11, a12, (1.0 + a12 * a12) / a11};
    const Complex d = dilatation_entries(m);
    const MatrixEntries m2 = matrix_entries(d);
    CHECK(std::abs(m2.a11 - m.a11) < 1e-12);
    CHECK(std::abs(m2.a12 - m.a12) < 1e-12);
    CHECK(std::abs(m2.a22 - m.a22) < 1e-12);

    // ellipticity controls the dilatation modulus
    const double K = m.max_eigenvalue();
    CHECK(std::abs(d) <= (K - 1.0) / (K + 1.0) + 1e-9);
  }
}

TEST_CASE("field-level conversions and constants") {
  const SymmetricMatrixField aniso(
      [](PlanarPoint) { return MatrixEntries{0.5, 0.0, 2.0}; }, 2.0, kScan);
  CHECK(aniso.ellipticity_constant() == doctest::Approx(2.0).epsilon(1e-12));

  const DilatationField mu = dilatation_from_matrix(aniso, kScan);
  CHECK(std::abs(mu({0.1, 0.2}) - Complex(1.0 / 3.0, 0.0)) < 1e-14);
  CHECK(mu({3.0, 0.0}) == Complex(0.0, 0.0));  // identity tail
  CHECK(mu.sup_norm() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  const SymmetricMatrixField back = matrix_from_dilatation(mu, kScan);
  const MatrixEntries b = back({0.3, -0.4});
  CHECK(b.a11 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(b.a22 == doctest::Approx(2.0).epsilon(1e-12));

  const EllipticityConstants qc = quasiconformality_coefficient(mu);
  CHECK(qc.mu_sup == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(qc.K_A == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(qc.K_A <= aniso.ellipticity_constant() + 1e-9);
}

TEST_CASE("rotated anisotropy keeps its ellipticity constant") {
  const double theta = 0.7;
  const double c = std::cos(theta), s = std::sin(theta);
  // R diag(1/3, 3) R^T
  const SymmetricMatrixField rotated(
      [c, s](PlanarPoint) {
        const double l1 = 1.0 / 3.0, l2 = 3.0;
        return MatrixEntries{l1 * c * c + l2 * s * s, (l1 - l2) * c * s,
                             l1 * s * s + l2 * c * c};
      },
      1.5, kScan);
  CHECK(rotated.ellipticity_constant() == doctest::Approx(3.0).epsilon(1e-12));
  const DilatationField mu = dilatation_from_matrix(rotated, kScan);
  CHECK(mu.sup_norm() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(quasiconformality_coefficient(mu).K_A == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("invalid fields are rejected") {
  CHECK_THROWS_AS(SymmetricMatrixField([](PlanarPoint) { return MatrixEntries{-1.0, 0.0, -1.0}; },
                                       1.0, 32),
                  InvalidFieldError);
  CHECK_THROWS_AS(
      SymmetricMatrixField([](PlanarPoint) { return MatrixEntries{2.0, 0.0, 2.0}; }, 1.0, 32),
      InvalidFieldError);  // det = 4
  CHECK_THROWS_AS(
      DilatationField([](PlanarPoint) { return Complex{1.2, 0.0}; }, 1.0, 32),
      InvalidDilatationError);
  CHECK_THROWS_AS(dilatation_entries({-2.0, 0.0, -0.5}), InvalidFieldError);
}

TEST_CASE("preset grammar") {
  const PresetSpec spec = parse_preset("constant(re=0.25, im=-0.1)");
  CHECK(spec.name == "constant");
  CHECK(spec.params.at("re") == doctest::Approx(0.25));
  CHECK(spec.params.at("im") == doctest::Approx(-0.1));

  CHECK(parse_preset("zero").name == "zero");
  CHECK_THROWS_AS(make_preset(parse_preset("vortex"), 32), ConfigError);
  CHECK_THROWS_AS(make_preset(parse_preset("constant(foo=1)"), 32), ConfigError);
  CHECK_THROWS_AS(parse_preset("constant(re=abc)"), ConfigError);
  CHECK_THROWS_AS(parse_preset("constant(re)"), ConfigError);

  // Defaults are echoed so a run is replayable without the original input.
  const std::string echoed = preset_to_string(parse_preset("gaussian_bump"));
  CHECK(echoed.find("amplitude=0.45") != std::string::npos);
  CHECK(echoed.find("sigma=0.8") != std::string::npos);
}

TEST_CASE("presets satisfy the dilatation invariants") {
  for (const char* text :
       {"zero", "constant(re=0.3333333333333333)", "radial_bump", "gaussian_bump", "checker",
        "radial_stretch"}) {
    CAPTURE(text);
    const DilatationField mu = make_preset(parse_preset(text), kScan);
    CHECK(mu.sup_norm() < 1.0);
    CHECK(std::abs(mu({mu.support_radius() + 0.5, 0.0})) == 0.0);
    // sample a few interior points
    CHECK(std::abs(mu({0.37, -0.22})) <= mu.sup_norm() + 1e-9);
  }
  const DilatationField g = make_preset(parse_preset("gaussian_bump"), 512);
  CHECK(g.sup_norm() == doctest::Approx(0.45).epsilon(1e-6));
  const DilatationField c = make_preset(parse_preset("constant(re=0.3333333333333333)"), 256);
  CHECK(c.sup_norm() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("smooth cutoff shape") {
  CHECK(smooth_cutoff(0.5, 1.0, 2.0) == 1.0);
  CHECK(smooth_cutoff(1.0, 1.0, 2.0) == 1.0);
  CHECK(smooth_cutoff(2.0, 1.0, 2.0) == 0.0);
  CHECK(smooth_cutoff(2.5, 1.0, 2.0) == 0.0);
  CHECK(smooth_cutoff(1.5, 1.0, 2.0) == doctest::Approx(0.5));
  double prev = 1.0;
  for (double r = 1.0; r <= 2.0; r += 0.01) {
    const double v = smooth_cutoff(r, 1.0, 2.0);
    CHECK(v <= prev + 1e-15);
    prev = v;
  }
}
