#pragma once

namespace qmem {

// Power-series evaluation, accurate for |x| <= 8 (terms summed until below
// 1e-17); sufficient for root finding near 1.84.
double bessel_j0(double x);
double bessel_j1(double x);
double bessel_j2(double x);

/// J1'(x) = J0(x) - J1(x)/x.
double bessel_j1_prime(double x);

/// First positive zero of J1' (about 1.84118), by Newton iteration from 1.8.
double bessel_first_derivative_zero();

}  // namespace qmem
