#pragma once

#include "qmembrane/errors.hpp"

namespace qmem {

/// Uniform periodic grid over the square window [-L, L)^2, n samples per axis.
struct ComputationalGrid {
  int n = 1024;
  double half_width = 4.0;

  ComputationalGrid() = default;
  ComputationalGrid(int n_, double half_width_) : n(n_), half_width(half_width_) { validate(); }

  double spacing() const { return 2.0 * half_width / n; }
  double coord(int i) const { return -half_width + spacing() * i; }

  void validate() const {
    if (n < 64 || (n & (n - 1)) != 0)
      throw ConfigError("grid n must be a power of two and at least 64");
    if (!(half_width > 0.0)) throw ConfigError("grid half width must be positive");
  }
};

}  // namespace qmem
