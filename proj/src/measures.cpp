#include "stablelike/measures.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>

#include "stablelike/error.hpp"
#include "stablelike/optimize.hpp"
#include "stablelike/rng.hpp"

namespace stablelike {

SphericalMeasure SphericalMeasure::from_atoms(int dim, std::vector<Atom> atoms) {
  if (dim < 1) throw InvalidInput("spherical measure: dim must be positive");
  double mass = 0.0;
  for (const auto& a : atoms) {
    if (a.direction.size() != dim) throw InvalidInput("spherical measure: atom dimension mismatch");
    if (std::abs(a.direction.norm() - 1.0) > 1e-12)
      throw InvalidInput("spherical measure: atom direction is not a unit vector");
    if (!(a.weight >= 0.0) || !std::isfinite(a.weight))
      throw InvalidInput("spherical measure: negative or non-finite weight");
    mass += a.weight;
  }
  if (!(mass > 0.0)) throw InvalidInput("spherical measure: total mass must be positive");
  SphericalMeasure s;
  s.dim_ = dim;
  s.atoms_ = std::move(atoms);
  return s;
}

SphericalMeasure SphericalMeasure::isotropic(int dim, double total_mass) {
  if (dim < 1) throw InvalidInput("spherical measure: dim must be positive");
  if (!(total_mass > 0.0) || !std::isfinite(total_mass))
    throw InvalidInput("spherical measure: total mass must be positive");
  SphericalMeasure s;
  s.dim_ = dim;
  s.iso_mass_ = total_mass;
  return s;
}

double SphericalMeasure::total_mass() const {
  if (iso_mass_) return *iso_mass_;
  double m = 0.0;
  for (const auto& a : atoms_) m += a.weight;
  return m;
}

SphericalMeasure SphericalMeasure::scaled(double c) const {
  SphericalMeasure s = *this;
  if (s.iso_mass_) *s.iso_mass_ *= c;
  for (auto& a : s.atoms_) a.weight *= c;
  return s;
}

SphericalMeasure SphericalMeasure::rotated(const Mat& q) const {
  SphericalMeasure s = *this;
  for (auto& a : s.atoms_) {
    a.direction = q * a.direction;
    a.direction.normalize();
  }
  return s;
}

bool SphericalMeasure::is_symmetric(double tol) const {
  if (iso_mass_) return true;
  for (const auto& a : atoms_) {
    if (a.weight == 0.0) continue;
    double partner = 0.0, same = 0.0;
    for (const auto& b : atoms_) {
      if ((b.direction + a.direction).norm() <= tol) partner += b.weight;
      if ((b.direction - a.direction).norm() <= tol) same += b.weight;
    }
    if (std::abs(partner - same) > tol * std::max(1.0, same)) return false;
  }
  return true;
}

double SphericalMeasure::abs_power_integral(const Vec& v, double alpha) const {
  if (iso_mass_) return *iso_mass_ * isotropic_abs_moment(dim_, alpha) * std::pow(v.norm(), alpha);
  double s = 0.0;
  for (const auto& a : atoms_) {
    double c = std::abs(v.dot(a.direction));
    if (c > 0.0) s += a.weight * std::pow(c, alpha);
  }
  return s;
}

Vec SphericalMeasure::first_moment() const {
  Vec m = Vec::Zero(dim_);
  for (const auto& a : atoms_) m += a.weight * a.direction;
  return m;
}

StableMeasure::StableMeasure(double alpha, SphericalMeasure spherical)
    : alpha_(alpha), sph_(std::move(spherical)) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw InvalidInput("stable measure: alpha must lie in (0,2)");
  if (alpha == 1.0 && !check_alpha1_symmetry(sph_).symmetric)
    throw InvalidInput("stable measure: alpha = 1 requires a centred spherical measure");
}

double isotropic_abs_moment(int d, double alpha) {
  if (d == 1) return 1.0;
  return std::exp(std::lgamma(0.5 * d) + std::lgamma(0.5 * (alpha + 1.0)) -
                  0.5 * std::log(std::numbers::pi) - std::lgamma(0.5 * (d + alpha)));
}

namespace {

std::vector<Vec> sphere_grid(int d) {
  std::vector<Vec> pts;
  if (d == 2) {
    const int n = 4096;
    for (int k = 0; k < n; ++k) {
      double phi = std::numbers::pi * k / n;
      Vec v(2);
      v << std::cos(phi), std::sin(phi);
      pts.push_back(v);
    }
  } else if (d == 3) {
    const int n = 16384;
    const double ga = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      double z = 1.0 - (2.0 * i + 1.0) / n;
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      Vec v(3);
      v << r * std::cos(ga * i), r * std::sin(ga * i), z;
      pts.push_back(v);
    }
  } else {
    // Kronecker lattice with the generalized golden ratio, pushed through the
    // inverse normal CDF and projected to the sphere.
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (d + 1.0));
    std::vector<double> a(d);
    for (int j = 0; j < d; ++j) a[j] = std::pow(1.0 / phi, j + 1.0);
    const int n = 16384;
    for (int i = 1; i <= n; ++i) {
      Vec v(d);
      for (int j = 0; j < d; ++j) {
        double u = std::fmod(0.5 + i * a[j], 1.0);
        u = std::clamp(u, 1e-12, 1.0 - 1e-12);
        v[j] = std::sqrt(2.0) * boost::math::erf_inv(2.0 * u - 1.0);
      }
      if (v.norm() > 0) pts.push_back(v.normalized());
    }
  }
  return pts;
}

}  // namespace

double nondegeneracy_constant(const SphericalMeasure& s, double alpha, Vec* argmin) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw InvalidInput("nondegeneracy_constant: alpha in (0,2)");
  const int d = s.dim();
  if (s.is_isotropic()) {
    if (argmin) *argmin = Vec::Unit(d, 0);
    return s.isotropic_mass() * isotropic_abs_moment(d, alpha);
  }
  auto f = [&](const Vec& v) { return s.abs_power_integral(v, alpha); };
  if (d == 1) {
    if (argmin) *argmin = Vec::Ones(1);
    return s.total_mass();
  }
  std::vector<Vec> cand = sphere_grid(d);
  // Kinks of the objective sit on directions orthogonal to atoms.
  const auto& at = s.atoms();
  if (d == 2) {
    for (const auto& a : at) {
      Vec v(2);
      v << -a.direction[1], a.direction[0];
      cand.push_back(v);
    }
  } else if (d == 3 && at.size() <= 200) {
    for (std::size_t i = 0; i < at.size(); ++i)
      for (std::size_t j = i + 1; j < at.size(); ++j) {
        const Vec& a = at[i].direction;
        const Vec& b = at[j].direction;
        Vec c(3);
        c << a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0];
        if (c.norm() > 1e-9) cand.push_back(c.normalized());
      }
  }
  std::vector<std::pair<double, std::size_t>> vals(cand.size());
  for (std::size_t i = 0; i < cand.size(); ++i) vals[i] = {f(cand[i]), i};
  std::sort(vals.begin(), vals.end());
  double best = vals[0].first;
  Vec best_dir = cand[vals[0].second];
  const double step = d == 2 ? std::numbers::pi / 4096 : 0.05;
  for (std::size_t k = 0; k < std::min<std::size_t>(4, vals.size()); ++k) {
    std::vector<double> y0(cand[vals[k].second].data(), cand[vals[k].second].data() + d);
    auto obj = [&](const std::vector<double>& y) {
      Vec v = Eigen::Map<const Vec>(y.data(), d);
      double n = v.norm();
      if (n < 1e-12) return double(INFINITY);
      return f(v / n);
    };
    auto r = nelder_mead(obj, y0, step, 1e-15, 4000);
    if (r.value < best) {
      best = r.value;
      best_dir = Eigen::Map<const Vec>(r.x.data(), d).normalized();
    }
  }
  if (argmin) *argmin = best_dir;
  return std::max(0.0, best);
}

SymmetryCheck check_alpha1_symmetry(const SphericalMeasure& s) {
  Vec r = s.first_moment();
  return {r, r.norm() <= 1e-10};
}

double truncated_moment(const StableMeasure& m, double radius, double power) {
  if (power <= m.alpha()) throw DivergentIntegral("truncated_moment: power must exceed alpha");
  if (radius < 0.0) throw InvalidInput("truncated_moment: negative radius");
  if (radius == 0.0) return 0.0;
  return m.spherical().total_mass() * std::pow(radius, power - m.alpha()) / (power - m.alpha());
}

double tail_mass(const StableMeasure& m, double radius) {
  if (!(radius > 0.0)) throw InvalidInput("tail_mass: radius must be positive");
  if (std::isinf(radius)) return 0.0;
  return m.spherical().total_mass() * std::pow(radius, -m.alpha()) / m.alpha();
}

bool dominates(const StableMeasure& nu1, const StableMeasure& nu2) {
  if (nu1.alpha() != nu2.alpha()) throw InvalidInput("dominates: alpha mismatch");
  if (nu1.dim() != nu2.dim()) throw InvalidInput("dominates: dimension mismatch");
  const auto& s1 = nu1.spherical();
  const auto& s2 = nu2.spherical();
  if (s1.is_isotropic() && s2.is_isotropic()) return s1.isotropic_mass() <= s2.isotropic_mass();
  if (s1.is_isotropic() || s2.is_isotropic())
    throw Undecidable("dominates: isotropic versus atomic spherical measures");
  auto weight_at = [](const SphericalMeasure& s, const Vec& dir, bool& found) {
    double w = 0.0;
    found = false;
    for (const auto& a : s.atoms())
      if ((a.direction - dir).norm() <= 1e-12) {
        w += a.weight;
        found = true;
      }
    return w;
  };
  bool result = true;
  for (const auto& a : s1.atoms()) {
    bool f1 = false, f2 = false;
    double w1 = weight_at(s1, a.direction, f1);
    if (w1 == 0.0) continue;
    double w2 = weight_at(s2, a.direction, f2);
    if (!f2) throw Undecidable("dominates: atom of the first measure missing from the second");
    if (w1 > w2) result = false;
  }
  return result;
}

LevyModel LevyModel::constant(const StableMeasure& base, const Mat& sigma, double m,
                              std::optional<Vec> drift) {
  if (!(m > 0.0)) throw InvalidInput("LevyModel: modulation must be positive");
  const int d = base.dim();
  if (sigma.rows() != d || sigma.cols() != d) throw InvalidInput("LevyModel: sigma shape");
  Vec b = drift.value_or(Vec::Zero(d));
  if (b.size() != d) throw InvalidInput("LevyModel: drift shape");
  LevyModel model{base, m, m, [m](double, const Vec&) { return m; },
                  [sigma](double, const Vec&) { return sigma; }, [b](double, const Vec&) { return b; },
                  std::nullopt, true};
  return model;
}

ModelCheck check_model(const LevyModel& model, int probes, double radius, double horizon) {
  const int d = model.dim();
  Stream s(0x5EEDu, 0, 0xC0EFu);
  ModelCheck c{true, INFINITY, -INFINITY, INFINITY, 0.0, 0.0};
  for (int i = 0; i < probes; ++i) {
    double t = horizon * s.uniform();
    Vec x(d);
    for (int j = 0; j < d; ++j) x[j] = radius * (2.0 * s.uniform() - 1.0);
    double m = model.m(t, x);
    c.min_modulation = std::min(c.min_modulation, m);
    c.max_modulation = std::max(c.max_modulation, m);
    Mat sg = model.sigma(t, x);
    c.min_singular = std::min(c.min_singular, min_singular_value(sg));
    c.max_sigma_norm = std::max(c.max_sigma_norm, operator_norm(sg));
    if (model.b) c.max_drift = std::max(c.max_drift, model.b(t, x).norm());
    if (model.lower) {
      c.max_sigma_norm = std::max(c.max_sigma_norm, operator_norm(model.lower->sigma_bar(t, x)));
      if (model.lower->b_bar) c.max_drift = std::max(c.max_drift, model.lower->b_bar(t, x).norm());
    }
  }
  c.bounds_ok = c.min_modulation >= model.m_min - 1e-12 && c.max_modulation <= model.m_max + 1e-12 &&
                c.min_singular > 0.0 && std::isfinite(c.max_sigma_norm) && std::isfinite(c.max_drift);
  return c;
}

nlohmann::json to_json(const StableMeasure& m) {
  nlohmann::json j;
  const auto& s = m.spherical();
  j["dim"] = s.dim();
  j["alpha"] = m.alpha();
  if (s.is_isotropic()) {
    j["isotropic"] = s.isotropic_mass();
  } else {
    auto arr = nlohmann::json::array();
    for (const auto& a : s.atoms()) {
      std::vector<double> dir(a.direction.data(), a.direction.data() + a.direction.size());
      arr.push_back(nlohmann::json::array({dir, a.weight}));
    }
    j["atoms"] = arr;
  }
  return j;
}

StableMeasure stable_measure_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidInput("measure JSON must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "dim" && it.key() != "alpha" && it.key() != "atoms" && it.key() != "isotropic")
      throw InvalidInput("measure JSON: unknown key '" + it.key() + "'");
  if (!j.contains("dim") || !j.contains("alpha")) throw InvalidInput("measure JSON: need dim and alpha");
  if (j.contains("atoms") == j.contains("isotropic"))
    throw InvalidInput("measure JSON: exactly one of atoms or isotropic");
  int d = j.at("dim").get<int>();
  double alpha = j.at("alpha").get<double>();
  if (j.contains("isotropic")) return {alpha, SphericalMeasure::isotropic(d, j.at("isotropic").get<double>())};
  std::vector<Atom> atoms;
  for (const auto& e : j.at("atoms")) {
    if (!e.is_array() || e.size() != 2) throw InvalidInput("measure JSON: atom must be [dir, weight]");
    auto dir = e.at(0).get<std::vector<double>>();
    Vec v = Eigen::Map<Vec>(dir.data(), Eigen::Index(dir.size()));
    atoms.push_back({v, e.at(1).get<double>()});
  }
  return {alpha, SphericalMeasure::from_atoms(d, std::move(atoms))};
}

}  // namespace stablelike
