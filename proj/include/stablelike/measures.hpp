#pragma once
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "json.hpp"
#include "stablelike/linalg.hpp"

namespace stablelike {

struct Atom {
  Vec direction;
  double weight;
};

// Finite measure on the unit sphere: either a list of atoms or the uniform
// measure with a given total mass.
class SphericalMeasure {
 public:
  static SphericalMeasure from_atoms(int dim, std::vector<Atom> atoms);
  static SphericalMeasure isotropic(int dim, double total_mass);

  int dim() const { return dim_; }
  bool is_isotropic() const { return iso_mass_.has_value(); }
  double isotropic_mass() const { return iso_mass_.value_or(0.0); }
  const std::vector<Atom>& atoms() const { return atoms_; }
  double total_mass() const;

  SphericalMeasure scaled(double c) const;
  SphericalMeasure rotated(const Mat& q) const;
  // Every atom has a partner -theta of equal weight (isotropic is symmetric).
  bool is_symmetric(double tol = 1e-12) const;
  // Integral of |v . theta|^alpha over the measure.
  double abs_power_integral(const Vec& v, double alpha) const;
  // Integral of theta over the measure.
  Vec first_moment() const;

 private:
  int dim_ = 0;
  std::vector<Atom> atoms_;
  std::optional<double> iso_mass_;
};

class StableMeasure {
 public:
  StableMeasure(double alpha, SphericalMeasure spherical);
  double alpha() const { return alpha_; }
  const SphericalMeasure& spherical() const { return sph_; }
  int dim() const { return sph_.dim(); }
  StableMeasure scaled(double c) const { return {alpha_, sph_.scaled(c)}; }

 private:
  double alpha_;
  SphericalMeasure sph_;
};

// E|theta_1|^alpha for theta uniform on the unit sphere of R^d.
double isotropic_abs_moment(int dim, double alpha);

// inf over unit theta0 of the integral of |theta0 . theta|^alpha.
double nondegeneracy_constant(const SphericalMeasure& s, double alpha, Vec* argmin = nullptr);

struct SymmetryCheck {
  Vec residual;
  bool symmetric;
};
SymmetryCheck check_alpha1_symmetry(const SphericalMeasure& s);

double truncated_moment(const StableMeasure& m, double radius, double power);
double tail_mass(const StableMeasure& m, double radius);
// Atom-wise comparison; throws Undecidable when supports are incomparable.
bool dominates(const StableMeasure& nu1, const StableMeasure& nu2);

using ScalarField = std::function<double(double, const Vec&)>;
using MatrixField = std::function<Mat(double, const Vec&)>;
using VectorField = std::function<Vec(double, const Vec&)>;

struct LowerOrder {
  StableMeasure nu_bar;
  MatrixField sigma_bar;
  VectorField b_bar;
  double beta() const { return nu_bar.alpha(); }
};

// State-dependent model nu_{t,x} = m(t,x) * base, with sigma and drift fields.
struct LevyModel {
  StableMeasure base;
  double m_min = 1.0;
  double m_max = 1.0;
  ScalarField m;
  MatrixField sigma;
  VectorField b;  // only used when alpha == 1
  std::optional<LowerOrder> lower;
  bool constant_coefficients = false;

  int dim() const { return base.dim(); }
  double alpha() const { return base.alpha(); }
  StableMeasure nu_at(double t, const Vec& x) const { return base.scaled(m(t, x)); }

  static LevyModel constant(const StableMeasure& base, const Mat& sigma, double m = 1.0,
                            std::optional<Vec> drift = std::nullopt);
};

struct ModelCheck {
  bool bounds_ok;
  double min_modulation;
  double max_modulation;
  double min_singular;
  double max_sigma_norm;
  double max_drift;
};
// Probes the declared invariants on a deterministic random point set.
ModelCheck check_model(const LevyModel& model, int probes = 10000, double radius = 10.0,
                       double horizon = 1.0);

nlohmann::json to_json(const StableMeasure& m);
StableMeasure stable_measure_from_json(const nlohmann::json& j);

}  // namespace stablelike
