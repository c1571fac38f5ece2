#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "stablelike/error.hpp"
#include "stablelike/measures.hpp"
#include "stablelike/quadrature.hpp"
#include "stablelike/rng.hpp"

using namespace stablelike;

namespace {
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
SphericalMeasure axes2(double w1 = 1, double w2 = 1) {
  return SphericalMeasure::from_atoms(
      2, {{v2(1, 0), w1}, {v2(-1, 0), w1}, {v2(0, 1), w2}, {v2(0, -1), w2}});
}
}  // namespace

TEST(Spherical, Validation) {
  EXPECT_THROW(SphericalMeasure::from_atoms(2, {{v2(1, 1), 1.0}}), InvalidInput);
  EXPECT_THROW(SphericalMeasure::from_atoms(2, {{v2(1, 0), -1.0}}), InvalidInput);
  EXPECT_THROW(SphericalMeasure::from_atoms(3, {{v2(1, 0), 1.0}}), InvalidInput);
  EXPECT_THROW(SphericalMeasure::isotropic(2, 0.0), InvalidInput);
  EXPECT_THROW(StableMeasure(2.0, axes2()), InvalidInput);
  EXPECT_THROW(StableMeasure(1.0, SphericalMeasure::from_atoms(2, {{v2(1, 0), 1.0}})), InvalidInput);
}

TEST(Nondegeneracy, AxisAtoms) {
  EXPECT_NEAR(nondegeneracy_constant(axes2(), 1.0), 2.0, 1e-12);
}

TEST(Nondegeneracy, DegenerateAxis) {
  auto s = SphericalMeasure::from_atoms(2, {{v2(1, 0), 1.0}, {v2(-1, 0), 1.0}});
  Vec arg;
  EXPECT_NEAR(nondegeneracy_constant(s, 0.7, &arg), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(arg[1]), 1.0, 1e-12);
}

TEST(Nondegeneracy, IsotropicMatchesAngularQuadrature) {
  boost::math::quadrature::tanh_sinh<double> ts;
  double ref = 4.0 * ts.integrate([](double p) { return std::pow(std::cos(p), 0.5); }, 0.0,
                                  std::numbers::pi / 2) / (2.0 * std::numbers::pi);
  EXPECT_NEAR(nondegeneracy_constant(SphericalMeasure::isotropic(2, 1.0), 0.5), ref, 1e-12);
  EXPECT_NEAR(isotropic_abs_moment(3, 1.3), oracle::sphere_abs_moment(3, 1.3), 1e-12);
  EXPECT_NEAR(isotropic_abs_moment(5, 0.4), oracle::sphere_abs_moment(5, 0.4), 1e-12);
}

TEST(Nondegeneracy, ScalingAndRotation) {
  Stream rng(11, 0, 0);
  for (int d : {2, 3}) {
    for (double alpha : {0.6, 1.0, 1.5}) {
      std::vector<Atom> atoms;
      for (int k = 0; k < 5; ++k) {
        Vec v(d);
        for (int j = 0; j < d; ++j) v[j] = rng.normal();
        v.normalize();
        double w = 0.5 + rng.uniform();
        atoms.push_back({v, w});
        atoms.push_back({-v, w});
      }
      auto s = SphericalMeasure::from_atoms(d, atoms);
      double c = nondegeneracy_constant(s, alpha);
      EXPECT_NEAR(nondegeneracy_constant(s.scaled(3.7), alpha), 3.7 * c, 1e-10 * 3.7 * c);
      Mat q = Eigen::HouseholderQR<Mat>(Mat::Random(d, d)).householderQ();
      EXPECT_NEAR(nondegeneracy_constant(s.rotated(q), alpha), c, 1e-6) << d << " " << alpha;
    }
  }
}

TEST(Nondegeneracy, HigherDimensionLattice) {
  auto s = SphericalMeasure::isotropic(4, 1.0);
  std::vector<Atom> atoms;
  for (int j = 0; j < 4; ++j) {
    atoms.push_back({Vec::Unit(4, j), 1.0});
    atoms.push_back({-Vec::Unit(4, j), 1.0});
  }
  // For alpha > 1 the minimum of sum |theta_j|^alpha over the sphere sits at the axes.
  EXPECT_NEAR(nondegeneracy_constant(SphericalMeasure::from_atoms(4, atoms), 1.5), 2.0, 1e-6);
  EXPECT_GT(nondegeneracy_constant(s, 1.0), 0.0);
}

TEST(Symmetry, Alpha1Residual) {
  auto r = check_alpha1_symmetry(SphericalMeasure::from_atoms(2, {{v2(1, 0), 1.0}, {v2(-1, 0), 1.0}}));
  EXPECT_TRUE(r.symmetric);
  EXPECT_EQ(r.residual.norm(), 0.0);
  auto a = check_alpha1_symmetry(SphericalMeasure::from_atoms(2, {{v2(1, 0), 1.0}}));
  EXPECT_FALSE(a.symmetric);
  EXPECT_EQ(a.residual, v2(1, 0));
  EXPECT_TRUE(check_alpha1_symmetry(SphericalMeasure::isotropic(3, 2.0)).symmetric);
}

TEST(Moments, TruncatedAndTail) {
  StableMeasure m1(1.0, SphericalMeasure::isotropic(1, 1.0));
  EXPECT_DOUBLE_EQ(truncated_moment(m1, 1.0, 2.0), 1.0);
  StableMeasure m2(0.5, SphericalMeasure::isotropic(1, 2.0));
  EXPECT_NEAR(truncated_moment(m2, 0.5, 1.0), 2.0 * std::sqrt(2.0), 1e-14);
  EXPECT_EQ(truncated_moment(m2, 0.0, 1.0), 0.0);
  EXPECT_THROW(truncated_moment(m2, 1.0, 0.5), DivergentIntegral);
  EXPECT_DOUBLE_EQ(tail_mass(m1, 1.0), 1.0);
  StableMeasure m3(0.5, SphericalMeasure::isotropic(1, 1.0));
  EXPECT_NEAR(tail_mass(m3, 4.0), 1.0, 1e-15);
  EXPECT_EQ(tail_mass(m3, INFINITY), 0.0);
  EXPECT_THROW(tail_mass(m3, 0.0), InvalidInput);
}

TEST(Moments, ClosedFormAgainstRadialQuadrature) {
  StableMeasure m(1.3, axes2(0.7, 1.1));
  const double p = 2.0, r = 0.8, R = 5.0, mass = m.spherical().total_mass();
  auto inner = integrate([&](double s) { return mass * std::pow(s, p - 1.0 - 1.3); }, 0.0, r,
                         {1e-14, 1e-13, 4000});
  EXPECT_NEAR(truncated_moment(m, r, p), inner.value, 1e-8);
  // Mass of r < |y| <= R split and recombined.
  auto shell = integrate([&](double s) { return mass * std::pow(s, -1.0 - 1.3); }, r, R);
  EXPECT_NEAR(tail_mass(m, r) - tail_mass(m, R), shell.value, 1e-10);
}

TEST(Domination, AtomWeights) {
  StableMeasure a(1.2, axes2(1, 1)), b(1.2, axes2(2, 3)), c(1.2, axes2(1, 0.5));
  EXPECT_TRUE(dominates(a, b));
  EXPECT_FALSE(dominates(a, c));
  StableMeasure e1(1.2, SphericalMeasure::from_atoms(2, {{v2(1, 0), 1.0}}));
  StableMeasure e2(1.2, SphericalMeasure::from_atoms(2, {{v2(0, 1), 1.0}}));
  EXPECT_THROW(dominates(e1, e2), Undecidable);
  EXPECT_THROW(dominates(a, StableMeasure(1.1, axes2())), InvalidInput);
  EXPECT_TRUE(dominates(StableMeasure(1.2, SphericalMeasure::isotropic(2, 1.0)),
                        StableMeasure(1.2, SphericalMeasure::isotropic(2, 2.0))));
  EXPECT_LE(nondegeneracy_constant(a.spherical(), 1.2), nondegeneracy_constant(b.spherical(), 1.2));
}

TEST(Json, RoundTrip) {
  Vec d(2);
  d << std::cos(0.3), std::sin(0.3);
  StableMeasure m(0.8, SphericalMeasure::from_atoms(2, {{d, 0.1}, {-d, 0.1}, {v2(0, 1), 2.5}}));
  auto back = stable_measure_from_json(nlohmann::json::parse(to_json(m).dump()));
  ASSERT_EQ(back.spherical().atoms().size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(back.spherical().atoms()[i].weight, m.spherical().atoms()[i].weight, 1e-15);
    EXPECT_LE((back.spherical().atoms()[i].direction - m.spherical().atoms()[i].direction).norm(), 1e-15);
  }
  auto iso = stable_measure_from_json(nlohmann::json::parse(R"({"dim":3,"alpha":1.5,"isotropic":2.0})"));
  EXPECT_TRUE(iso.spherical().is_isotropic());
  EXPECT_THROW(stable_measure_from_json(nlohmann::json::parse(R"({"dim":3,"alpha":1.5,"iso":2.0})")),
               InvalidInput);
}

TEST(Model, ConstantAndChecks) {
  StableMeasure base(1.5, axes2());
  Mat s = Mat::Identity(2, 2);
  auto m = LevyModel::constant(base, s, 2.0);
  auto c = check_model(m, 200);
  EXPECT_TRUE(c.bounds_ok);
  EXPECT_DOUBLE_EQ(c.min_singular, 1.0);
  LevyModel bad = m;
  bad.m = [](double, const Vec& x) { return 2.0 + std::sin(x[0]); };
  EXPECT_FALSE(check_model(bad, 200).bounds_ok);
}
