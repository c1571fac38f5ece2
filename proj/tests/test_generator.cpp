#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "stablelike/error.hpp"
#include "stablelike/generator.hpp"
#include "stablelike/sampler.hpp"
#include "stablelike/stats.hpp"
#include "stablelike/symbol.hpp"

using namespace stablelike;

namespace {
Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

SphericalMeasure skewed2() {
  return SphericalMeasure::from_atoms(
      2, {{v2(1, 0), 1.0}, {v2(-1, 0), 0.3}, {v2(0.6, 0.8), 0.7}, {v2(0, -1), 0.2}});
}

// Checks A cos and A sin at x against -psi(xi) e^{i xi.x}.
void expect_fourier(const StableMeasure& nu, const Mat& sigma, double convention, const Vec& xi, const Vec& x,
                    std::complex<double> psi, double tol) {
  auto c = nonlocal_operator(nu, 1.0, sigma, convention, plane_wave(xi), x);
  auto s = nonlocal_operator(nu, 1.0, sigma, convention, plane_wave(xi, -std::numbers::pi / 2), x);
  std::complex<double> expect = -psi * std::exp(std::complex<double>(0.0, xi.dot(x)));
  EXPECT_NEAR(c.value, expect.real(), tol);
  EXPECT_NEAR(s.value, expect.imag(), tol);
  EXPECT_LT(c.error, 1e-6);
}
}  // namespace

TEST(TaylorRemainder, CompensationConventions) {
  auto q = quadratic(1);
  EXPECT_NEAR(taylor_remainder(q, v1(1.0), v1(0.1), 0.5), 0.21, 1e-15);
  EXPECT_NEAR(taylor_remainder(q, v1(0.7), v1(0.3), 1.5), 0.09, 1e-15);
  EXPECT_NEAR(taylor_remainder(q, v1(-2.0), v1(5.0), 1.5), 25.0, 1e-12);
  EXPECT_EQ(taylor_remainder(q, v1(0.0), v1(2.0), 1.0), 4.0);
  EXPECT_NEAR(taylor_remainder(q, v1(1.0), v1(0.5), 1.0), 0.25, 1e-15);
}

TEST(TestFunctions, DerivativesConsistent) {
  std::vector<Vec> probes{v2(0.1, -0.3), v2(1.2, 0.4), v2(-0.8, 2.0)};
  EXPECT_LT(derivative_consistency(gaussian_bump(v2(0.2, 0.1), 0.7), probes), 1e-6);
  EXPECT_LT(derivative_consistency(plane_wave(v2(1.3, -0.4), 0.3), probes), 1e-6);
  EXPECT_LT(derivative_consistency(product(gaussian_bump(v2(0, 0), 1.0), plane_wave(v2(2, 1))), probes), 1e-6);
  EXPECT_LT(derivative_consistency(translated(gaussian_bump(v2(0, 0), 0.5), v2(0.3, 0.3)), probes), 1e-6);
}

TEST(Generator, PlaneWaveMatchesSymbolSymmetric1D) {
  for (double a : {0.5, 1.0, 1.5, 1.9}) {
    StableMeasure nu(a, SphericalMeasure::isotropic(1, 2.0));
    Mat s = Mat::Constant(1, 1, 1.3);
    Vec xi = v1(0.8);
    auto psi = stable_symbol(nu, s, xi).value;
    expect_fourier(nu, s, a, xi, v1(0.4), psi, 1e-6);
  }
}

TEST(Generator, PlaneWaveMatchesSymbolAsymmetric2D) {
  Mat s(2, 2);
  s << 1.0, 0.3, -0.2, 0.9;
  Vec xi = v2(0.7, -1.1);
  for (double a : {0.6, 1.4}) {
    StableMeasure nu(a, skewed2());
    auto psi = general_symbol(nu, s, xi, a).value;
    EXPECT_GT(std::abs(psi.imag()), 1e-3);
    expect_fourier(nu, s, a, xi, v2(0.3, -0.5), psi, 1e-6);
  }
}

TEST(Generator, PlaneWaveMatchesSymbolIsotropic) {
  StableMeasure nu2(1.3, SphericalMeasure::isotropic(2, 2.0 * std::numbers::pi));
  Mat s2 = Mat::Identity(2, 2);
  Vec xi2 = v2(0.5, 0.9);
  expect_fourier(nu2, s2, 1.3, xi2, v2(0.1, 0.2), stable_symbol(nu2, s2, xi2).value, 1e-6);
  StableMeasure nu3(0.9, SphericalMeasure::isotropic(3, 1.0));
  Mat s3 = Mat::Identity(3, 3);
  Vec xi3 = v3(0.4, -0.3, 0.6);
  expect_fourier(nu3, s3, 0.9, xi3, v3(0.0, 0.1, 0.2), stable_symbol(nu3, s3, xi3).value, 1e-6);
  EXPECT_THROW(nonlocal_operator(StableMeasure(1.0, SphericalMeasure::isotropic(4, 1.0)), 1.0,
                                 Mat::Identity(4, 4), 1.0, gaussian_bump(Vec::Zero(4), 1.0), Vec::Zero(4)),
               UnsupportedConfiguration);
}

TEST(Generator, ConstantAndDomain) {
  StableMeasure nu(1.5, SphericalMeasure::isotropic(1, 2.0));
  auto model = LevyModel::constant(nu, Mat::Identity(1, 1));
  EXPECT_NEAR(apply_A(model, constant_function(1, 3.0), 0.0, v1(0.2)).value, 0.0, 1e-12);
  EXPECT_THROW(apply_A(model, quadratic(1), 0.0, v1(0.2)), DomainError);
  EXPECT_THROW(apply_A(model, quadratic(1), 0.0, v1(0.2)), AccuracyError);
}

TEST(Generator, UnitIndexDrift) {
  StableMeasure nu(1.0, SphericalMeasure::isotropic(1, 2.0));
  auto with = LevyModel::constant(nu, Mat::Identity(1, 1), 1.0, v1(0.7));
  auto without = LevyModel::constant(nu, Mat::Identity(1, 1));
  auto f = gaussian_bump(v1(0.0), 0.8);
  Vec x = v1(0.35);
  double diff = apply_A(with, f, 0.0, x).value - apply_A(without, f, 0.0, x).value;
  EXPECT_NEAR(diff, 0.7 * f.grad(x)[0], 1e-12);
}

TEST(Generator, Linearity) {
  StableMeasure nu(1.2, skewed2());
  Mat s = Mat::Identity(2, 2);
  auto model = LevyModel::constant(nu, s, 1.4);
  auto f = gaussian_bump(v2(0.2, 0.0), 0.6);
  auto g = plane_wave(v2(1.0, 0.5), 0.2);
  Vec x = v2(0.1, 0.3);
  auto af = apply_A(model, f, 0, x), ag = apply_A(model, g, 0, x);
  auto h = apply_A(model, sum(scaled(f, 2.5), scaled(g, -0.7)), 0, x);
  double tol = 2.5 * af.error + 0.7 * ag.error + h.error + 1e-10;
  EXPECT_NEAR(h.value, 2.5 * af.value - 0.7 * ag.value, tol);
}

TEST(Generator, TranslationCovariance) {
  StableMeasure nu(0.8, skewed2());
  Mat s(2, 2);
  s << 1.1, 0.2, 0.0, 0.8;
  auto model = LevyModel::constant(nu, s);
  auto f = gaussian_bump(v2(0.0, 0.0), 0.5);
  Vec h = v2(0.4, -0.3), x = v2(0.6, 0.1);
  auto lhs = apply_A(model, translated(f, h), 0, x);
  auto rhs = apply_A(model, f, 0, x - h);
  EXPECT_NEAR(lhs.value, rhs.value, lhs.error + rhs.error + 1e-10);
}

TEST(Generator, CarreDuChampIdentity) {
  for (double a : {0.7, 1.0, 1.6}) {
    StableMeasure nu(a, a == 1.0 ? SphericalMeasure::isotropic(2, 3.0) : skewed2());
    Mat s(2, 2);
    s << 0.9, 0.1, 0.2, 1.2;
    auto f = gaussian_bump(v2(0.0, 0.0), 0.7);
    auto g = gaussian_bump(v2(0.5, 0.2), 0.9, 2.0);
    Vec x = v2(0.2, 0.1);
    auto afg = nonlocal_operator(nu, 1.0, s, a, product(f, g), x);
    auto af = nonlocal_operator(nu, 1.0, s, a, f, x);
    auto ag = nonlocal_operator(nu, 1.0, s, a, g, x);
    auto gam = carre_du_champ(nu, 1.0, s, f, g, x);
    double lhs = afg.value - f(x) * ag.value - g(x) * af.value;
    double err = afg.error + std::abs(f(x)) * ag.error + std::abs(g(x)) * af.error + gam.error;
    EXPECT_NEAR(lhs, gam.value, 2.0 * err + 1e-10) << "alpha " << a;
    EXPECT_GT(std::abs(gam.value), 1e-3);
  }
}

TEST(LowerOrder, AbsentDriftOnlyAndSymbol) {
  StableMeasure nu(1.5, SphericalMeasure::isotropic(1, 2.0));
  auto model = LevyModel::constant(nu, Mat::Identity(1, 1));
  auto f = gaussian_bump(v1(0.0), 0.8);
  auto none = apply_B(model, f, 0, v1(0.3));
  EXPECT_EQ(none.value, 0.0);
  EXPECT_EQ(none.regime, "absent");

  // Zero lower-order measure expressed through a vanishing sigma_bar.
  StableMeasure low(0.6, SphericalMeasure::isotropic(1, 1.0));
  model.lower = LowerOrder{low, [](double, const Vec&) { return Mat::Zero(1, 1); },
                           [](double, const Vec&) { return v1(-1.7); }};
  auto b = apply_B(model, f, 0, v1(0.3));
  EXPECT_EQ(b.value, -1.7 * f.grad(v1(0.3))[0]);

  StableMeasure low2(0.6, SphericalMeasure::from_atoms(1, {{v1(1.0), 1.0}, {v1(-1.0), 0.25}}));
  Mat sb = Mat::Constant(1, 1, 0.8);
  model.lower = LowerOrder{low2, [sb](double, const Vec&) { return sb; }, nullptr};
  Vec xi = v1(1.3), x = v1(0.2);
  auto psi = general_symbol(low2, sb, xi, 0.6).value;
  auto bc = apply_B(model, plane_wave(xi), 0, x);
  auto bs = apply_B(model, plane_wave(xi, -std::numbers::pi / 2), 0, x);
  auto expect = -psi * std::exp(std::complex<double>(0.0, 1.3 * 0.2));
  EXPECT_NEAR(bc.value, expect.real(), 1e-6);
  EXPECT_NEAR(bs.value, expect.imag(), 1e-6);
  EXPECT_EQ(bc.regime, "lower index below one");
  EXPECT_DOUBLE_EQ(bc.theta1_lo, 0.6);
  EXPECT_DOUBLE_EQ(bc.theta1_hi, 1.0);
  EXPECT_DOUBLE_EQ(bc.theta2_hi, 0.6);

  model.lower = LowerOrder{StableMeasure(1.2, SphericalMeasure::isotropic(1, 1.0)),
                           [](double, const Vec&) { return Mat::Identity(1, 1); }, nullptr};
  auto b12 = apply_B(model, f, 0, x);
  EXPECT_EQ(b12.regime, "lower index above one");
  EXPECT_DOUBLE_EQ(b12.theta2_lo, 1.0);
  EXPECT_DOUBLE_EQ(b12.theta1_hi, 1.5);
  model.lower = LowerOrder{StableMeasure(1.7, SphericalMeasure::isotropic(1, 1.0)),
                           [](double, const Vec&) { return Mat::Identity(1, 1); }, nullptr};
  EXPECT_THROW(apply_B(model, f, 0, x), InvalidConfiguration);
}

TEST(RemainderRatio, ZeroScalingAndRefinement) {
  std::vector<Vec> pts{v1(-0.5), v1(0.0), v1(0.3), v1(1.1)};
  EXPECT_EQ(remainder_ratio_estimate(constant_function(1, 0.0), pts, 0.5), 0.0);
  auto f = gaussian_bump(v1(0.0), 1.0);
  double r8 = remainder_ratio_estimate(f, pts, 0.5, 8);
  double r16 = remainder_ratio_estimate(f, pts, 0.5, 16);
  EXPECT_TRUE(std::isfinite(r8));
  EXPECT_GT(r8, 0.0);
  EXPECT_NEAR(r16 / r8, 1.0, 0.02);
  EXPECT_EQ(remainder_ratio_estimate(scaled(f, 2.0), pts, 0.5, 8), 2.0 * r8);
}

TEST(GeneratorTable, InterpolatesWithinBound) {
  StableMeasure nu(1.3, SphericalMeasure::isotropic(1, 2.0));
  auto model = LevyModel::constant(nu, Mat::Identity(1, 1));
  auto f = gaussian_bump(v1(0.0), 0.5);
  GeneratorTable table(model, f, 0.0, 0.5, 40.0, 401);
  for (double x : {-3.3, -0.71, 0.05, 0.9, 7.7, 55.0}) {
    double direct = apply_A(model, f, 0, v1(x)).value;
    EXPECT_NEAR(table(x), direct, 4.0 * table.error_bound() + 1e-9) << x;
  }
  EXPECT_LT(table.error_bound(), 1e-4);
}

// (E phi(X_h) - phi(x)) / h extrapolated to h = 0 against the quadrature value.
TEST(Thinning, GeneratorConsistency) {
  StableMeasure nu(1.2, SphericalMeasure::isotropic(1, 2.0));
  LevyModel model{nu, 0.5, 1.5, [](double, const Vec& x) { return 1.0 + 0.5 * std::sin(x[0]); },
                  [](double, const Vec&) { return Mat::Identity(1, 1); }, nullptr, {}, false};
  auto phi = gaussian_bump(v1(0.0), 1.0);
  const Vec x0 = v1(0.4);
  ThinningOptions opt;
  opt.delta = 1e-3;
  opt.x0 = x0;
  std::vector<double> hs{0.02, 0.01, 0.005}, d, w;
  const std::size_t n = 60000;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    auto e = thinning_sample(model, {0.0, hs[i]}, n, 100 + i, opt);
    std::vector<double> q(n);
    for (std::size_t p = 0; p < n; ++p) q[p] = (phi(e.state_vec(p, 1)) - phi(x0)) / hs[i];
    d.push_back(mean(q));
    double se = stderr_of_mean(q);
    w.push_back(1.0 / (se * se));
  }
  // Weighted linear fit d = c0 + c1 h.
  double sw = 0, sh = 0, shh = 0, sd = 0, shd = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    sw += w[i];
    sh += w[i] * hs[i];
    shh += w[i] * hs[i] * hs[i];
    sd += w[i] * d[i];
    shd += w[i] * hs[i] * d[i];
  }
  double det = sw * shh - sh * sh;
  double c0 = (shh * sd - sh * shd) / det;
  double se0 = std::sqrt(shh / det);
  auto a = apply_A(model, phi, 0.0, x0);
  // Small jumps below delta are dropped by the sampler.
  double trunc = 0.5 * phi.hess(x0)(0, 0) * model.m(0, x0) * 2.0 * std::pow(opt.delta, 0.8) / 0.8;
  EXPECT_NEAR(c0, a.value, 3.0 * se0 + std::abs(trunc) + a.error);
}
