#include "qmembrane/field.hpp"

#include <cmath>
#include <sstream>

#include "qmembrane/errors.hpp"

namespace qmem {

Complex dilatation_entries(const MatrixEntries& a) {
  const double det_ipa = (1.0 + a.a11) * (1.0 + a.a22) - a.a12 * a.a12;
  if (!(det_ipa > 0.0))
    throw InvalidFieldError("det(I + A) <= 0: coefficient matrix is not elliptic");
  return Complex(a.a22 - a.a11, -2.0 * a.a12) / det_ipa;
}

MatrixEntries matrix_entries(Complex mu) {
  const double m2 = std::norm(mu);
  if (!(m2 < 1.0)) throw InvalidDilatationError("|mu| >= 1: invalid complex dilatation");
  const double d = 1.0 - m2;
  MatrixEntries a;
  a.a11 = std::norm(1.0 - mu) / d;
  a.a12 = -2.0 * mu.imag() / d;
  a.a22 = std::norm(1.0 + mu) / d;
  return a;
}

DilatationField::DilatationField(std::function<Complex(PlanarPoint)> mu, double support_radius,
                                 int scan_n)
    : mu_(std::move(mu)), support_radius_(support_radius) {
  if (!(support_radius_ > 0.0)) throw ConfigError("dilatation support radius must be positive");
  double sup = 0.0;
  const double h = 2.0 * support_radius_ / scan_n;
  for (int iy = 0; iy <= scan_n; ++iy) {
    const double y = -support_radius_ + h * iy;
    for (int ix = 0; ix <= scan_n; ++ix) {
      const double a = std::abs(mu_({-support_radius_ + h * ix, y}));
      if (a > sup) sup = a;
    }
  }
  if (!(sup < 1.0)) throw InvalidDilatationError("|mu| >= 1 on the scan grid");
  sup_norm_ = sup;
}

Complex DilatationField::operator()(PlanarPoint p) const {
  if (p.x * p.x + p.y * p.y > support_radius_ * support_radius_) return {0.0, 0.0};
  return mu_(p);
}

SymmetricMatrixField::SymmetricMatrixField(std::function<MatrixEntries(PlanarPoint)> entries,
                                           double support_radius, int scan_n, double det_tol)
    : entries_(std::move(entries)), support_radius_(support_radius) {
  if (!(support_radius_ > 0.0)) throw ConfigError("matrix support radius must be positive");
  double k = 1.0;
  const double h = 2.0 * support_radius_ / scan_n;
  for (int iy = 0; iy <= scan_n; ++iy) {
    const double y = -support_radius_ + h * iy;
    for (int ix = 0; ix <= scan_n; ++ix) {
      const MatrixEntries a = entries_({-support_radius_ + h * ix, y});
      if (!(a.a11 > 0.0)) throw InvalidFieldError("a11 <= 0 on the scan grid");
      if (std::abs(a.det() - 1.0) > det_tol)
        throw InvalidFieldError("det A deviates from 1 beyond tolerance on the scan grid");
      const double lam = a.max_eigenvalue();
      if (!std::isfinite(lam)) throw InvalidFieldError("non-finite matrix entries");
      if (lam > k) k = lam;
    }
  }
  ellipticity_ = k;
}

MatrixEntries SymmetricMatrixField::operator()(PlanarPoint p) const {
  if (p.x * p.x + p.y * p.y > support_radius_ * support_radius_) return MatrixEntries{};
  return entries_(p);
}

DilatationField dilatation_from_matrix(const SymmetricMatrixField& a, int scan_n) {
  auto mu = [a](PlanarPoint p) { return dilatation_entries(a(p)); };
  return DilatationField(mu, a.support_radius(), scan_n);
}

SymmetricMatrixField matrix_from_dilatation(const DilatationField& mu, int scan_n) {
  auto entries = [mu](PlanarPoint p) { return matrix_entries(mu(p)); };
  return SymmetricMatrixField(entries, mu.support_radius(), scan_n);
}

EllipticityConstants quasiconformality_coefficient(const DilatationField& mu) {
  EllipticityConstants c;
  c.mu_sup = mu.sup_norm();
  c.K_A = (1.0 + c.mu_sup) / (1.0 - c.mu_sup);
  // For det-1 symmetric fields the pointwise larger eigenvalue of the induced
  // matrix is (1+|mu|)/(1-|mu|), so the ellipticity constant equals K_A.
  c.K = c.K_A;
  return c;
}

double smooth_cutoff(double r, double r0, double r1) {
  if (r <= r0) return 1.0;
  if (r >= r1) return 0.0;
  const double t = (r1 - r) / (r1 - r0);
  const double f = std::exp(-1.0 / t);
  const double g = std::exp(-1.0 / (1.0 - t));
  return f / (f + g);
}

// ---------------------------------------------------------------------------
// Presets.
// ---------------------------------------------------------------------------

namespace {

struct ParamReader {
  const PresetSpec& spec;
  std::map<std::string, double> defaults;

  double get(const std::string& key) const {
    if (auto it = spec.params.find(key); it != spec.params.end()) return it->second;
    return defaults.at(key);
  }

  void check_unknown() const {
    for (const auto& [key, value] : spec.params) {
      (void)value;
      if (!defaults.contains(key))
        throw ConfigError("preset '" + spec.name + "' has no parameter '" + key + "'");
    }
  }
};

}  // namespace

PresetSpec parse_preset(const std::string& text) {
  PresetSpec spec;
  const auto open = text.find('(');
  if (open == std::string::npos) {
    spec.name = text;
  } else {
    spec.name = text.substr(0, open);
    const auto close = text.rfind(')');
    if (close == std::string::npos || close < open)
      throw ConfigError("unbalanced parentheses in preset '" + text + "'");
    std::string body = text.substr(open + 1, close - open - 1);
    std::istringstream in(body);
    std::string item;
    while (std::getline(in, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos)
        throw ConfigError("expected key=value in preset parameter '" + item + "'");
      std::string key = item.substr(0, eq);
      std::string value = item.substr(eq + 1);
      auto strip = [](std::string& s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        s = (b == std::string::npos) ? std::string{} : s.substr(b, e - b + 1);
      };
      strip(key);
      strip(value);
      try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        spec.params[key] = v;
      } catch (const std::exception&) {
        throw ConfigError("preset parameter '" + key + "' has non-numeric value '" + value + "'");
      }
    }
  }
  // Trim whitespace around the name.
  const auto b = spec.name.find_first_not_of(" \t");
  const auto e = spec.name.find_last_not_of(" \t");
  spec.name = (b == std::string::npos) ? std::string{} : spec.name.substr(b, e - b + 1);
  if (spec.name.empty()) throw ConfigError("empty preset name");
  return spec;
}

namespace {

std::map<std::string, double> preset_defaults(const std::string& name) {
  if (name == "zero") return {};
  if (name == "constant")
    return {{"re", 0.3}, {"im", 0.0}, {"support", 2.0}, {"plateau", 0.8}};
  if (name == "radial_bump") return {{"amplitude", 0.4}, {"radius", 1.5}, {"sharpness", 4.0}};
  if (name == "gaussian_bump")
    return {{"amplitude", 0.45}, {"sigma", 0.8}, {"support", 2.0}, {"core", 0.5}};
  if (name == "checker")
    return {{"amplitude", 0.35}, {"period", 1.0}, {"phase", 0.6}, {"support", 2.0}, {"core", 0.6}};
  if (name == "radial_stretch") return {{"k", 2.0}, {"radius", 2.0}, {"core", 0.75}};
  throw ConfigError("unknown preset '" + name + "'");
}

}  // namespace

std::string preset_to_string(const PresetSpec& spec) {
  ParamReader r{spec, preset_defaults(spec.name)};
  r.check_unknown();
  if (r.defaults.empty()) return spec.name;
  std::ostringstream out;
  out.precision(17);
  out << spec.name << '(';
  bool first = true;
  for (const auto& [key, def] : r.defaults) {
    (void)def;
    if (!first) out << ',';
    first = false;
    out << key << '=' << r.get(key);
  }
  out << ')';
  return out.str();
}

DilatationField make_preset(const PresetSpec& spec, int scan_n) {
  ParamReader r{spec, preset_defaults(spec.name)};
  r.check_unknown();

  if (spec.name == "zero") {
    return DilatationField([](PlanarPoint) { return Complex{0.0, 0.0}; }, 1.0, /*scan_n=*/8);
  }
  if (spec.name == "constant") {
    const Complex c{r.get("re"), r.get("im")};
    const double support = r.get("support");
    const double r0 = r.get("plateau") * support;
    return DilatationField(
        [c, r0, support](PlanarPoint p) {
          return c * smooth_cutoff(std::hypot(p.x, p.y), r0, support);
        },
        support, scan_n);
  }
  if (spec.name == "radial_bump") {
    const double a = r.get("amplitude");
    const double radius = r.get("radius");
    const double sharp = r.get("sharpness");
    return DilatationField(
        [a, radius, sharp](PlanarPoint p) -> Complex {
          const double t2 = (p.x * p.x + p.y * p.y) / (radius * radius);
          if (t2 >= 1.0) return {0.0, 0.0};
          return {a * std::exp(-sharp * t2 / (1.0 - t2)), 0.0};
        },
        radius, scan_n);
  }
  if (spec.name == "gaussian_bump") {
    const double a = r.get("amplitude");
    const double sigma = r.get("sigma");
    const double support = r.get("support");
    const double r0 = r.get("core") * support;
    return DilatationField(
        [a, sigma, r0, support](PlanarPoint p) -> Complex {
          const double rr = std::hypot(p.x, p.y);
          return {a * std::exp(-rr * rr / (2.0 * sigma * sigma)) * smooth_cutoff(rr, r0, support),
                  0.0};
        },
        support, scan_n);
  }
  if (spec.name == "checker") {
    const double a = r.get("amplitude");
    const double period = r.get("period");
    const Complex dir = std::polar(1.0, r.get("phase"));
    const double support = r.get("support");
    const double r0 = r.get("core") * support;
    return DilatationField(
        [a, period, dir, r0, support](PlanarPoint p) {
          const double s = std::sin(M_PI * p.x / period) * std::sin(M_PI * p.y / period);
          return a * dir * s * smooth_cutoff(std::hypot(p.x, p.y), r0, support);
        },
        support, scan_n);
  }
  if (spec.name == "radial_stretch") {
    const double k = r.get("k");
    const double radius = r.get("radius");
    const double r0 = r.get("core") * radius;
    const double c = (k - 1.0) / (k + 1.0);
    return DilatationField(
        [c, r0, radius](PlanarPoint p) -> Complex {
          const Complex z = to_complex(p);
          const double rr = std::abs(z);
          if (rr == 0.0) return {0.0, 0.0};
          return c * (z / std::conj(z)) * smooth_cutoff(rr, r0, radius);
        },
        radius, scan_n);
  }
  throw ConfigError("unknown preset '" + spec.name + "'");
}

}  // namespace qmem
