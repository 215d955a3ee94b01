#include "qmembrane/bessel.hpp"

#include <cmath>

#include "qmembrane/errors.hpp"

namespace qmem {

namespace {

// J_nu(x) = sum_m (-1)^m (x/2)^{2m+nu} / (m! (m+nu)!), summed until the term
// drops below 1e-17.
double bessel_series(int nu, double x) {
  const double q = 0.5 * x;
  double term = 1.0;
  for (int k = 1; k <= nu; ++k) term *= q / k;  // m = 0 term
  double sum = term;
  const double q2 = q * q;
  for (int m = 1; m < 200; ++m) {
    term *= -q2 / (static_cast<double>(m) * (m + nu));
    sum += term;
    if (std::abs(term) < 1e-17) break;
  }
  return sum;
}

}  // namespace

double bessel_j0(double x) { return bessel_series(0, x); }
double bessel_j1(double x) { return bessel_series(1, x); }
double bessel_j2(double x) { return bessel_series(2, x); }

double bessel_j1_prime(double x) {
  if (x == 0.0) return 0.5;  // series limit of J0 - J1/x at 0
  return bessel_j0(x) - bessel_j1(x) / x;
}

double bessel_first_derivative_zero() {
  double x = 1.8;
  for (int it = 0; it < 50; ++it) {
    const double f = bessel_j1_prime(x);
    // J1'' from the Bessel equation: x^2 J1'' + x J1' + (x^2 - 1) J1 = 0.
    const double fp = -f / x - (1.0 - 1.0 / (x * x)) * bessel_j1(x);
    const double step = f / fp;
    x -= step;
    if (std::abs(step) < 1e-14 && std::abs(bessel_j1_prime(x)) < 1e-12) return x;
  }
  throw SolverError("Newton iteration for the Bessel derivative zero did not converge");
}

}  // namespace qmem
