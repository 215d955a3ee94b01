#include "qmembrane/beltrami.hpp"

#include <fftw3.h>

#include <cstring>
#include <fstream>

#include "qmembrane/version.hpp"

namespace qmem {

namespace {

// RAII wrapper around an fftw complex buffer plus in-place forward/backward
// plans. Single-threaded, FFTW_ESTIMATE: planning is deterministic.
class FftWorkspace {
public:
  explicit FftWorkspace(int n) : n_(n) {
    data_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n * n));
    if (!data_) throw ResourceError("fftw allocation failed");
    forward_ = fftw_plan_dft_2d(n, n, data_, data_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_2d(n, n, data_, data_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftWorkspace() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(data_);
  }
  FftWorkspace(const FftWorkspace&) = delete;
  FftWorkspace& operator=(const FftWorkspace&) = delete;

  Complex* data() { return reinterpret_cast<Complex*>(data_); }
  void forward() { fftw_execute(forward_); }
  void backward() { fftw_execute(backward_); }  // unnormalized; divide by n^2
  int n() const { return n_; }

private:
  int n_;
  fftw_complex* data_;
  fftw_plan forward_, backward_;
};

// Integer frequency index m in {-n/2, ..., n/2 - 1} for sample index i.
inline int freq_index(int i, int n) { return (i < n / 2) ? i : i - n; }

}  // namespace

PlanarMap::PlanarMap(ComputationalGrid grid, std::vector<Complex> periodic_displacement,
                     Complex conj_coeff, MapDirection direction)
    : grid_(grid),
      periodic_(std::move(periodic_displacement)),
      conj_coeff_(conj_coeff),
      direction_(direction) {
  grid_.validate();
  if (periodic_.size() != static_cast<std::size_t>(grid_.n) * grid_.n)
    throw ConfigError("displacement sample count does not match the grid");
}

PlanarMap PlanarMap::identity(ComputationalGrid grid) {
  grid.validate();
  return PlanarMap(grid, std::vector<Complex>(static_cast<std::size_t>(grid.n) * grid.n),
                   {0.0, 0.0});
}

Complex PlanarMap::displacement_at(int ix, int iy) const {
  const int n = grid_.n;
  const Complex z{grid_.coord(ix), grid_.coord(iy)};
  return conj_coeff_ * std::conj(z) + periodic_[static_cast<std::size_t>(iy) * n + ix];
}

Complex PlanarMap::displacement(PlanarPoint p) const {
  const int n = grid_.n;
  const double h = grid_.spacing();
  const double fx = (p.x + grid_.half_width) / h;
  const double fy = (p.y + grid_.half_width) / h;
  int ix = static_cast<int>(std::floor(fx));
  int iy = static_cast<int>(std::floor(fy));
  const double tx = fx - ix;
  const double ty = fy - iy;
  auto wrap = [n](int i) { return ((i % n) + n) % n; };
  const int x0 = wrap(ix), x1 = wrap(ix + 1);
  const int y0 = wrap(iy), y1 = wrap(iy + 1);
  const Complex per = periodic_[static_cast<std::size_t>(y0) * n + x0] * ((1 - tx) * (1 - ty)) +
                      periodic_[static_cast<std::size_t>(y0) * n + x1] * (tx * (1 - ty)) +
                      periodic_[static_cast<std::size_t>(y1) * n + x0] * ((1 - tx) * ty) +
                      periodic_[static_cast<std::size_t>(y1) * n + x1] * (tx * ty);
  return conj_coeff_ * Complex(p.x, -p.y) + per;
}

void PlanarMap::set_diagnostics(std::vector<double> updates, double residual) {
  update_history_ = std::move(updates);
  residual_l2_ = residual;
}

PlanarMap solve_beltrami(const DilatationField& mu, const ComputationalGrid& grid,
                         const SolveOptions& options) {
  grid.validate();
  if (!(mu.sup_norm() < 1.0))
    throw InvalidDilatationError("sup |mu| >= 1: Beltrami equation is degenerate");
  if (grid.half_width < 2.0 * mu.support_radius())
    throw ConfigError("grid half width must be at least twice the dilatation support radius");

  const int n = grid.n;
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  const double inv_nn = 1.0 / static_cast<double>(nn);

  // Dilatation samples.
  std::vector<Complex> mu_grid(nn);
  for (int iy = 0; iy < n; ++iy) {
    const double y = grid.coord(iy);
    for (int ix = 0; ix < n; ++ix) mu_grid[static_cast<std::size_t>(iy) * n + ix] = mu({grid.coord(ix), y});
  }

  // Fourier multipliers: Beurling symbol conj(k)/k and the inverse of
  // d/dzbar = (i/2) k, both zero at k = 0.
  const double base = M_PI / grid.half_width;
  std::vector<Complex> beurling(nn), inv_dzbar(nn);
  for (int iy = 0; iy < n; ++iy) {
    const double ky = base * freq_index(iy, n);
    for (int ix = 0; ix < n; ++ix) {
      const double kx = base * freq_index(ix, n);
      const std::size_t idx = static_cast<std::size_t>(iy) * n + ix;
      if (kx == 0.0 && ky == 0.0) {
        beurling[idx] = inv_dzbar[idx] = 0.0;
      } else {
        const Complex k{kx, ky};
        beurling[idx] = options.multiplier_scale * std::conj(k) / k;
        inv_dzbar[idx] = 1.0 / (Complex(0.0, 0.5) * k);
      }
    }
  }

  FftWorkspace fft(n);
  Complex* work = fft.data();

  // Fixed point on t = mu (1 + S g), where g is t with its mean removed; the
  // mean rides along as the conjugate-affine coefficient of the map.
  std::vector<Complex> t(nn, Complex{0.0, 0.0});
  std::vector<Complex> g(nn, Complex{0.0, 0.0});
  std::vector<double> updates;
  updates.reserve(options.max_iter);
  bool converged = false;
  Complex mean{0.0, 0.0};
  for (int iter = 0; iter < options.max_iter; ++iter) {
    std::memcpy(work, g.data(), nn * sizeof(Complex));
    fft.forward();
    for (std::size_t i = 0; i < nn; ++i) work[i] *= beurling[i];
    fft.backward();

    double diff2 = 0.0, norm2 = 0.0;
    Complex sum{0.0, 0.0};
    for (std::size_t i = 0; i < nn; ++i) {
      const Complex tn = mu_grid[i] * (1.0 + work[i] * inv_nn);
      const Complex d = tn - t[i];
      diff2 += std::norm(d);
      norm2 += std::norm(tn);
      sum += tn;
      t[i] = tn;
    }
    mean = sum * inv_nn;
    for (std::size_t i = 0; i < nn; ++i) g[i] = t[i] - mean;

    const double update = std::sqrt(diff2) / std::max(std::sqrt(norm2), 1e-300);
    updates.push_back(update);
    if (update < options.tol) {
      converged = true;
      break;
    }
  }
  if (!converged && mu.sup_norm() > 0.0)
    throw NonConvergenceError("Beltrami fixed point did not reach tolerance", updates.back());

  // Recover the periodic displacement from g = h_zbar.
  std::memcpy(work, g.data(), nn * sizeof(Complex));
  fft.forward();
  for (std::size_t i = 0; i < nn; ++i) work[i] *= inv_dzbar[i] * inv_nn;
  fft.backward();
  std::vector<Complex> displacement(work, work + nn);

  PlanarMap map(grid, std::move(displacement), mean);
  const double residual = map_residual(map, mu);
  map.set_diagnostics(std::move(updates), residual);
  return map;
}

PlanarPoint evaluate_map(const PlanarMap& map, PlanarPoint p) {
  const double L = map.grid().half_width;
  if (std::abs(p.x) > L || std::abs(p.y) > L)
    throw OutOfWindowError("point outside the computational window");
  return to_point(to_complex(p) + map.displacement(p));
}

std::vector<PlanarPoint> invert_map(const PlanarMap& map, std::span<const PlanarPoint> targets,
                                    double tol) {
  const double h = map.grid().spacing();
  const double step = 0.5 * h;
  std::vector<PlanarPoint> result;
  result.reserve(targets.size());
  for (const PlanarPoint& target : targets) {
    Complex w = to_complex(target);
    Complex z = w;  // phi is a bounded perturbation of the identity
    bool done = false;
    double res = 0.0;
    for (int it = 0; it < 100; ++it) {
      const Complex f = to_complex(evaluate_map(map, to_point(z))) - w;
      res = std::abs(f);
      if (res < tol) {
        done = true;
        break;
      }
      const Complex fxp = to_complex(evaluate_map(map, {z.real() + step, z.imag()}));
      const Complex fxm = to_complex(evaluate_map(map, {z.real() - step, z.imag()}));
      const Complex fyp = to_complex(evaluate_map(map, {z.real(), z.imag() + step}));
      const Complex fym = to_complex(evaluate_map(map, {z.real(), z.imag() - step}));
      const double a11 = (fxp.real() - fxm.real()) / (2.0 * step);
      const double a21 = (fxp.imag() - fxm.imag()) / (2.0 * step);
      const double a12 = (fyp.real() - fym.real()) / (2.0 * step);
      const double a22 = (fyp.imag() - fym.imag()) / (2.0 * step);
      const double det = a11 * a22 - a12 * a21;
      if (std::abs(det) < 1e-14)
        throw InversionError("degenerate finite-difference Jacobian cell", res);
      const double dx = (a22 * f.real() - a12 * f.imag()) / det;
      const double dy = (-a21 * f.real() + a11 * f.imag()) / det;
      z -= Complex(dx, dy);
    }
    if (!done)
      throw InversionError("map inversion did not reach tolerance in 100 Newton steps", res);
    result.push_back(to_point(z));
  }
  return result;
}

double map_residual(const PlanarMap& map, const DilatationField& mu) {
  const ComputationalGrid& grid = map.grid();
  const int n = grid.n;
  const double h = grid.spacing();
  const double window = 0.5 * grid.half_width;
  const std::span<const Complex> per = map.periodic_displacement();
  const Complex b = map.conj_coeff();

  auto at = [&](int ix, int iy) {
    return per[static_cast<std::size_t>(((iy % n) + n) % n) * n + (((ix % n) + n) % n)];
  };

  double num2 = 0.0, den2 = 0.0;
  for (int iy = 0; iy < n; ++iy) {
    const double y = grid.coord(iy);
    for (int ix = 0; ix < n; ++ix) {
      const double x = grid.coord(ix);
      if (x * x + y * y > window * window) continue;
      // Centered differences of the periodic part; the conjugate-affine part
      // differentiates exactly: d(b conj z)/dz = 0, d(b conj z)/dzbar = b.
      const Complex px = (at(ix + 1, iy) - at(ix - 1, iy)) / (2.0 * h);
      const Complex py = (at(ix, iy + 1) - at(ix, iy - 1)) / (2.0 * h);
      const Complex phi_z = 1.0 + 0.5 * (px - Complex(0.0, 1.0) * py);
      const Complex phi_zbar = b + 0.5 * (px + Complex(0.0, 1.0) * py);
      num2 += std::norm(phi_zbar - mu({x, y}) * phi_z);
      den2 += std::norm(phi_z);
    }
  }
  if (den2 == 0.0) return 0.0;
  return std::sqrt(num2 / den2);
}

// ---------------------------------------------------------------------------
// Map file io. Layout (little-endian):
//   8 bytes  magic "QMEMMAP\0"
//   int32    file version
//   int32    n
//   float64  half width L
//   float64  conj coefficient (re, im)
//   n*n * 2 float64  row-major total displacement samples at the grid nodes
// ---------------------------------------------------------------------------

namespace {
constexpr char kMapMagic[8] = {'Q', 'M', 'E', 'M', 'M', 'A', 'P', '\0'};
}

void write_map(const std::filesystem::path& path, const PlanarMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open map file for writing: " + path.string());
  out.write(kMapMagic, sizeof(kMapMagic));
  const std::int32_t version = kMapFileVersion;
  const std::int32_t n = map.grid().n;
  const double L = map.grid().half_width;
  const Complex b = map.conj_coeff();
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(&L), sizeof(L));
  const double bre = b.real(), bim = b.imag();
  out.write(reinterpret_cast<const char*>(&bre), sizeof(bre));
  out.write(reinterpret_cast<const char*>(&bim), sizeof(bim));
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const Complex d = map.displacement_at(ix, iy);
      const double re = d.real(), im = d.imag();
      out.write(reinterpret_cast<const char*>(&re), sizeof(re));
      out.write(reinterpret_cast<const char*>(&im), sizeof(im));
    }
  }
  if (!out) throw Error("failed writing map file: " + path.string());
}

PlanarMap read_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open map file: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMapMagic, sizeof(magic)) != 0)
    throw Error("not a qmembrane map file: " + path.string());
  std::int32_t version = 0, n = 0;
  double L = 0.0, bre = 0.0, bim = 0.0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  in.read(reinterpret_cast<char*>(&L), sizeof(L));
  in.read(reinterpret_cast<char*>(&bre), sizeof(bre));
  in.read(reinterpret_cast<char*>(&bim), sizeof(bim));
  if (!in || version != kMapFileVersion) throw Error("unsupported map file version");
  ComputationalGrid grid(n, L);
  const Complex b{bre, bim};
  std::vector<Complex> periodic(static_cast<std::size_t>(n) * n);
  for (int iy = 0; iy < n; ++iy) {
    const double y = grid.coord(iy);
    for (int ix = 0; ix < n; ++ix) {
      double re = 0.0, im = 0.0;
      in.read(reinterpret_cast<char*>(&re), sizeof(re));
      in.read(reinterpret_cast<char*>(&im), sizeof(im));
      // Stored samples are total displacement; strip the affine part again.
      periodic[static_cast<std::size_t>(iy) * n + ix] =
          Complex(re, im) - b * std::conj(Complex(grid.coord(ix), y));
    }
  }
  if (!in) throw Error("truncated map file: " + path.string());
  return PlanarMap(grid, std::move(periodic), b);
}

}  // namespace qmem
