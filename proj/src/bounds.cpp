#include "qmembrane/bounds.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <sstream>

#include "json.hpp"
#include "qmembrane/version.hpp"

namespace qmem {

namespace {

double j_prime_cached() {
  static const double value = bessel_first_derivative_zero();
  return value;
}

}  // namespace

double bound_from_enclosing_radius(double K, double R) {
  if (!(K >= 1.0)) throw DomainError("ellipticity constant must be at least 1");
  if (!(R > 0.0)) throw DomainError("enclosing radius must be positive");
  const double q = j_prime_cached() / R;
  return q * q / (4.0 * K);
}

double bound_exponential(double K) {
  if (!(K >= 1.0)) throw DomainError("ellipticity constant must be at least 1");
  const double jp = j_prime_cached();
  return 64.0 * jp * jp / (K * std::exp(2.0 * M_PI * K));
}

double bound_mu_norm(double K, double mu_sup) {
  if (!(K >= 1.0)) throw DomainError("ellipticity constant must be at least 1");
  if (!(mu_sup >= 0.0 && mu_sup < 1.0)) throw DomainError("sup |mu| must lie in [0, 1)");
  const double jp = j_prime_cached();
  const double exponent = 2.0 * M_PI * (1.0 + mu_sup) / (1.0 - mu_sup);
  return 64.0 * jp * jp / K * std::exp(-exponent);
}

double bound_from_outer_domain(double mu1_outer, double extension_norm) {
  if (!(mu1_outer > 0.0)) throw DomainError("outer eigenvalue must be positive");
  if (!(extension_norm >= 1.0)) throw DomainError("extension norm must be at least 1");
  return mu1_outer / (extension_norm * extension_norm);
}

double bound_from_outer_laplacian(double mu1_laplace_outer, double K, double extension_norm) {
  if (!(mu1_laplace_outer > 0.0)) throw DomainError("outer eigenvalue must be positive");
  if (!(K >= 1.0)) throw DomainError("ellipticity constant must be at least 1");
  if (!(extension_norm >= 1.0)) throw DomainError("extension norm must be at least 1");
  return mu1_laplace_outer / (K * extension_norm * extension_norm);
}

ExtendedField reflect_extend(std::function<double(PlanarPoint)> u, const PlanarMap& map,
                             double invert_tol) {
  auto value = [u = std::move(u), &map, invert_tol](PlanarPoint p) {
    const Complex w = to_complex(evaluate_map(map, p));
    if (std::norm(w) < 1.0) return u(p);
    const Complex reflected = w / std::norm(w);  // unit-circle inversion of phi(p)
    const std::array<PlanarPoint, 1> target{to_point(reflected)};
    const std::vector<PlanarPoint> pre = invert_map(map, target, invert_tol);
    return u(pre[0]);
  };
  return {value};
}

double extension_energy_ratio(const ScalarField2D& u, const PlanarMap& map,
                              const SymmetricMatrixField& a, int window_samples,
                              double quadrature_h, double invert_tol, int n_boundary) {
  // Denominator: A-weighted energy of u over the unnormalized quasidisc.
  std::vector<PlanarPoint> circle;
  circle.reserve(n_boundary);
  for (int i = 0; i < n_boundary; ++i) {
    const double th = 2.0 * M_PI * i / n_boundary;
    circle.push_back({std::cos(th), std::sin(th)});
  }
  std::vector<PlanarPoint> preimage = invert_map(map, circle, invert_tol);
  if (polygon_area(preimage) < 0.0) std::reverse(preimage.begin(), preimage.end());
  const TriangularMesh mesh = triangulate_polygon(preimage, quadrature_h);
  double inner = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const PlanarPoint pa = mesh.vertices[tri[0]];
    const PlanarPoint pb = mesh.vertices[tri[1]];
    const PlanarPoint pc = mesh.vertices[tri[2]];
    const PlanarPoint c{(pa.x + pb.x + pc.x) / 3.0, (pa.y + pb.y + pc.y) / 3.0};
    const double area = 0.5 * orient2d(pa, pb, pc);
    const PlanarPoint g = u.gradient(c);
    const MatrixEntries m = a(c);
    inner += area * (m.a11 * g.x * g.x + 2.0 * m.a12 * g.x * g.y + m.a22 * g.y * g.y);
  }
  if (!(inner > 0.0)) throw DomainError("test function has zero energy on the quasidisc");

  // Numerator: A-weighted energy of the extension over the window, by cell
  // quadrature of sampled values. Cells that straddle the boundary kink are
  // skipped.
  const ExtendedField ext = reflect_extend(u.value, map, invert_tol);
  const int m_samples = window_samples;
  const double L = map.grid().half_width;
  const double h = 2.0 * L / m_samples;
  std::vector<double> values(static_cast<std::size_t>(m_samples + 1) * (m_samples + 1));
  std::vector<bool> inside(values.size());
  for (int iy = 0; iy <= m_samples; ++iy) {
    const double y = -L + h * iy;
    for (int ix = 0; ix <= m_samples; ++ix) {
      const double x = -L + h * ix;
      const std::size_t idx = static_cast<std::size_t>(iy) * (m_samples + 1) + ix;
      const PlanarPoint p{x, y};
      values[idx] = ext.value(p);
      inside[idx] = std::norm(to_complex(evaluate_map(map, p))) < 1.0;
    }
  }
  double outer = 0.0;
  for (int iy = 0; iy < m_samples; ++iy) {
    for (int ix = 0; ix < m_samples; ++ix) {
      const std::size_t i00 = static_cast<std::size_t>(iy) * (m_samples + 1) + ix;
      const std::size_t i10 = i00 + 1;
      const std::size_t i01 = i00 + (m_samples + 1);
      const std::size_t i11 = i01 + 1;
      const int inside_count = inside[i00] + inside[i10] + inside[i01] + inside[i11];
      if (inside_count != 0 && inside_count != 4) continue;  // straddles the boundary
      const double gx = ((values[i10] + values[i11]) - (values[i00] + values[i01])) / (2.0 * h);
      const double gy = ((values[i01] + values[i11]) - (values[i00] + values[i10])) / (2.0 * h);
      const MatrixEntries me = a({-L + h * (ix + 0.5), -L + h * (iy + 0.5)});
      outer += h * h * (me.a11 * gx * gx + 2.0 * me.a12 * gx * gy + me.a22 * gy * gy);
    }
  }
  return outer / inner;
}

// ---------------------------------------------------------------------------
// Pipeline.
// ---------------------------------------------------------------------------

std::string to_string(Flag f) {
  switch (f) {
    case Flag::PASS:
      return "PASS";
    case Flag::WARN:
      return "WARN";
    case Flag::FAIL:
      return "FAIL";
    default:
      return "SKIP";
  }
}

bool BoundFlags::any_fail() const {
  for (Flag f : {bound_a, bound_b, bound_b_ka, bound_c, bound_d, distortion})
    if (f == Flag::FAIL) return true;
  return false;
}

void PipelineConfig::validate() const {
  ComputationalGrid(grid_n, grid_l);  // throws on bad n / L
  if (n_boundary < 64) throw ConfigError("n_boundary must be at least 64");
  if (!(mesh_h > 0.0)) throw ConfigError("mesh_h must be positive");
  if (!(beltrami_tol > 0.0)) throw ConfigError("beltrami_tol must be positive");
  if (beltrami_max_iter < 1) throw ConfigError("beltrami_max_iter must be positive");
  if (!(eigen_tol > 0.0)) throw ConfigError("eigen_tol must be positive");
  if (!(invert_tol > 0.0)) throw ConfigError("invert_tol must be positive");
  if (!(quadrature_h > 0.0)) throw ConfigError("quadrature_h must be positive");
  if (scan_n < 16) throw ConfigError("scan_n must be at least 16");
  if (extension_window_samples < 16) throw ConfigError("extension_window_samples too small");
  if (!(extension.extension_norm >= 1.0)) throw ConfigError("extension_norm must be >= 1");
  if (!(extension.omega_norm >= 1.0)) throw ConfigError("omega_norm must be >= 1");
  preset_to_string(preset);  // throws on unknown preset or parameter
}

namespace {

// Prefixes any stage failure with the stage name.
template <typename Fn>
auto labeled(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw Error(std::string("stage ") + name + ": " + e.what());
  }
}

}  // namespace

BoundReport build_report(const PipelineConfig& config) {
  config.validate();
  BoundReport rep;
  rep.config = config;
  rep.j_prime = j_prime_cached();

  const DilatationField mu =
      labeled("preset", [&] { return make_preset(config.preset, config.scan_n); });
  const SymmetricMatrixField a =
      labeled("matrix", [&] { return matrix_from_dilatation(mu, config.scan_n); });
  const EllipticityConstants qc = quasiconformality_coefficient(mu);
  rep.k = a.ellipticity_constant();
  rep.k_a = qc.K_A;
  rep.mu_sup = qc.mu_sup;

  const ComputationalGrid grid(config.grid_n, config.grid_l);
  SolveOptions solve_opts;
  solve_opts.tol = config.beltrami_tol;
  solve_opts.max_iter = config.beltrami_max_iter;
  solve_opts.multiplier_scale = config.multiplier_scale;
  const PlanarMap map = labeled("solve", [&] { return solve_beltrami(mu, grid, solve_opts); });
  rep.beltrami_residual = map.residual_l2();
  rep.beltrami_iterations = map.iterations();

  const QuasidiscShape shape = labeled(
      "quasidisc", [&] { return quasidisc_from_map(map, config.n_boundary, config.invert_tol); });
  rep.r_centered = centered_radius(shape);
  rep.r_inradius = centered_inradius(shape);
  rep.sec = labeled("sec", [&] { return smallest_enclosing_circle(shape.boundary, config.seed); });
  rep.r_sec = rep.sec.radius;
  rep.scale_applied = shape.scale_applied;
  rep.raw_area = M_PI / (shape.scale_applied * shape.scale_applied);
  rep.distortion_bound = distortion_radius_bound(rep.k_a);

  rep.bound_a = bound_from_enclosing_radius(rep.k, rep.r_centered);
  rep.bound_b = bound_exponential(rep.k);
  rep.bound_b_ka = bound_mu_norm(rep.k, rep.mu_sup);
  const double disc_jp = rep.j_prime / rep.r_centered;
  rep.bound_d =
      bound_from_outer_laplacian(disc_jp * disc_jp, rep.k, config.extension.extension_norm);

  if (config.run_fem) {
    // The normalized quasidisc is the quasidisc of the pulled-back coefficient:
    // evaluate the matrix at the preimage of the normalization rescale.
    const PlanarPoint anchor = shape.anchor;
    const double inv_scale = 1.0 / shape.scale_applied;
    const CoefficientFn pulled = [a, anchor, inv_scale](PlanarPoint p) {
      return a(anchor + inv_scale * (p - anchor));
    };

    EigenOptions eig_opts;
    eig_opts.tol = config.eigen_tol;
    eig_opts.seed = config.seed;

    const EigenResult eig = labeled("fem", [&] {
      const TriangularMesh mesh = triangulate_polygon(shape.boundary, config.mesh_h);
      const FemSystem sys = assemble_system(mesh, pulled);
      rep.fem_dimension = sys.dimension;
      return first_nontrivial_neumann(sys, eig_opts);
    });
    rep.fem_mu1 = eig.mu1;
    rep.fem_residual = eig.residual_norm;
    rep.fem_iterations = eig.iterations;
    rep.poincare = poincare_constant(eig);

    // Outer domain for the extension-operator bound: the anchored enclosing
    // disc, same (pulled-back) operator.
    rep.mu1_outer_disc = labeled("outer-disc", [&] {
      std::vector<PlanarPoint> disc;
      const int nd = 512;
      disc.reserve(nd);
      for (int i = 0; i < nd; ++i) {
        const double th = 2.0 * M_PI * i / nd;
        disc.push_back({anchor.x + rep.r_centered * std::cos(th),
                        anchor.y + rep.r_centered * std::sin(th)});
      }
      const TriangularMesh mesh = triangulate_polygon(disc, config.mesh_h);
      const FemSystem sys = assemble_system(mesh, pulled);
      return first_nontrivial_neumann(sys, eig_opts).mu1;
    });
    rep.bound_c = bound_from_outer_domain(rep.mu1_outer_disc, config.extension.extension_norm);
  }

  if (config.measure_extension_ratio) {
    rep.extension_ratio = labeled("extension", [&] {
      return extension_energy_ratio(test_function_re_w(), map, a, config.extension_window_samples,
                                    config.quadrature_h, config.invert_tol);
    });
  }

  constexpr double kSlack = 1e-9;
  auto check = [&](double bound) {
    if (!config.run_fem) return Flag::SKIP;
    return rep.fem_mu1 >= bound - kSlack ? Flag::PASS : Flag::FAIL;
  };
  rep.flags.bound_a = check(rep.bound_a);
  rep.flags.bound_b = check(rep.bound_b);
  rep.flags.bound_b_ka = check(rep.bound_b_ka);
  rep.flags.bound_c = config.run_fem ? check(rep.bound_c) : Flag::SKIP;
  rep.flags.bound_d = check(rep.bound_d);
  rep.flags.distortion =
      rep.r_centered <= rep.distortion_bound + kSlack ? Flag::PASS : Flag::WARN;
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization.
// ---------------------------------------------------------------------------

namespace {

nlohmann::ordered_json config_to_json(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  j["preset"] = preset_to_string(c.preset);
  j["grid_n"] = c.grid_n;
  j["grid_l"] = c.grid_l;
  j["n_boundary"] = c.n_boundary;
  j["mesh_h"] = c.mesh_h;
  j["beltrami_tol"] = c.beltrami_tol;
  j["beltrami_max_iter"] = c.beltrami_max_iter;
  j["eigen_tol"] = c.eigen_tol;
  j["invert_tol"] = c.invert_tol;
  j["seed"] = c.seed;
  j["scan_n"] = c.scan_n;
  j["extension_norm"] = c.extension.extension_norm;
  j["omega_norm"] = c.extension.omega_norm;
  j["measure_extension_ratio"] = c.measure_extension_ratio;
  j["extension_window_samples"] = c.extension_window_samples;
  j["quadrature_h"] = c.quadrature_h;
  j["run_fem"] = c.run_fem;
  j["multiplier_scale"] = c.multiplier_scale;
  return j;
}

nlohmann::ordered_json flags_to_json(const BoundFlags& f) {
  nlohmann::ordered_json j;
  j["bound_a"] = to_string(f.bound_a);
  j["bound_b"] = to_string(f.bound_b);
  j["bound_b_ka"] = to_string(f.bound_b_ka);
  j["bound_c"] = to_string(f.bound_c);
  j["bound_d"] = to_string(f.bound_d);
  j["distortion"] = to_string(f.distortion);
  return j;
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace

std::string report_to_json(const BoundReport& r, bool include_timestamp) {
  nlohmann::ordered_json j;
  j["k"] = r.k;
  j["k_a"] = r.k_a;
  j["mu_sup"] = r.mu_sup;
  j["r_centered"] = r.r_centered;
  j["r_sec"] = r.r_sec;
  j["r_inradius"] = r.r_inradius;
  j["distortion_bound"] = r.distortion_bound;
  j["j_prime"] = r.j_prime;
  j["bound_a"] = r.bound_a;
  j["bound_b"] = r.bound_b;
  j["bound_b_ka"] = r.bound_b_ka;
  j["bound_c"] = r.bound_c;
  j["bound_d"] = r.bound_d;
  j["fem_mu1"] = r.fem_mu1;
  j["flags"] = flags_to_json(r.flags);
  j["diagnostics"] = {{"beltrami_residual", r.beltrami_residual},
                      {"beltrami_iterations", r.beltrami_iterations},
                      {"fem_residual", r.fem_residual},
                      {"fem_iterations", r.fem_iterations},
                      {"fem_dimension", r.fem_dimension},
                      {"mu1_outer_disc", r.mu1_outer_disc},
                      {"extension_ratio", r.extension_ratio},
                      {"poincare", r.poincare},
                      {"raw_area", r.raw_area},
                      {"scale_applied", r.scale_applied},
                      {"sec_center", {r.sec.center.x, r.sec.center.y}}};
  j["config_echo"] = config_to_json(r.config);
  j["versions"] = {{"qmembrane", kVersion}, {"report_schema", kReportSchemaVersion}};
  if (include_timestamp) j["timestamp"] = iso_timestamp();
  return j.dump(2) + "\n";
}

std::string report_csv_header() {
  return "k,k_a,mu_sup,r_centered,r_sec,r_inradius,distortion_bound,j_prime,"
         "bound_a,bound_b,bound_b_ka,bound_c,bound_d,fem_mu1,flags,config_echo,versions";
}

std::string report_to_csv_row(const BoundReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << r.k << ',' << r.k_a << ',' << r.mu_sup << ',' << r.r_centered << ',' << r.r_sec << ','
      << r.r_inradius << ',' << r.distortion_bound << ',' << r.j_prime << ',' << r.bound_a << ','
      << r.bound_b << ',' << r.bound_b_ka << ',' << r.bound_c << ',' << r.bound_d << ','
      << r.fem_mu1 << ',';
  out << "bound_a=" << to_string(r.flags.bound_a) << ";bound_b=" << to_string(r.flags.bound_b)
      << ";bound_b_ka=" << to_string(r.flags.bound_b_ka)
      << ";bound_c=" << to_string(r.flags.bound_c) << ";bound_d=" << to_string(r.flags.bound_d)
      << ";distortion=" << to_string(r.flags.distortion) << ',';
  out << '"' << preset_to_string(r.config.preset) << ";grid_n=" << r.config.grid_n
      << ";grid_l=" << r.config.grid_l << ";mesh_h=" << r.config.mesh_h
      << ";seed=" << r.config.seed << "\",";
  out << kVersion << ";schema=" << kReportSchemaVersion;
  return out.str();
}

}  // namespace qmem
