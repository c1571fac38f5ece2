#include <gtest/gtest.h>

#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <cmath>
#include <numbers>

#include "stablelike/error.hpp"
#include "stablelike/inequalities.hpp"
#include "stablelike/symbol.hpp"

using namespace stablelike;

namespace {
// Integration by parts: int (1 - cos r) r^{-1-a} dr = (1/a) int sin(r) r^{-a} dr.
double one_minus_cos_moment(double a) {
  boost::math::quadrature::ooura_fourier_sin<double> s;
  return s.integrate([a](double t) { return std::pow(t, -a); }, 1.0).first / a;
}
}  // namespace

TEST(Le5, EqualArgumentsGiveZero) {
  for (double alpha : {0.4, 1.0, 1.7}) {
    auto c = le5_check(0.8, 0.8, alpha);
    EXPECT_EQ(c.lhs, 0.0);
    EXPECT_EQ(c.ratio, 0.0);
  }
}

TEST(Le5, CosinePartMatchesRadialConstant) {
  auto c = le5_check(1.0, 0.0, 0.5);
  EXPECT_NEAR(c.cos_part, radial_constant(0.5), 1e-9);
  EXPECT_NEAR(c.cos_part, one_minus_cos_moment(0.5), 1e-9);
  EXPECT_NEAR(one_minus_cos_moment(0.5), std::sqrt(2.0 * std::numbers::pi), 1e-9);
}

TEST(Le5, CompensatedPartAboveOneHasClosedForm) {
  // With b = 0 both integrands are sign-definite trigonometric expressions:
  // int (1 - cos r) r^{-1-a} = K_a and int (r - sin r) r^{-1-a} = K_{a-1} / a.
  for (double alpha : {1.3, 1.5, 1.8}) {
    auto c = le5_check(1.0, 0.0, alpha);
    EXPECT_NEAR(c.cos_part, radial_constant(alpha), 1e-9) << alpha;
    EXPECT_NEAR(c.second_part, one_minus_cos_moment(alpha - 1.0) / alpha, 1e-9) << alpha;
  }
}

TEST(Le5, Homogeneity) {
  for (double alpha : {0.5, 1.0, 1.5}) {
    for (auto [a, b] : {std::pair{1.0, 0.3}, {-0.4, 1.1}, {2.0, 1.9}, {1.0, 0.0}}) {
      auto base = le5_check(a, b, alpha, 0.4);
      for (double lam : {2.0, 10.0}) {
        auto s = le5_check(lam * a, lam * b, alpha, 0.4);
        EXPECT_NEAR(s.lhs, std::pow(lam, alpha) * base.lhs, 1e-6 * s.lhs);
        EXPECT_NEAR(s.ratio, base.ratio, 1e-6 * base.ratio);
      }
    }
  }
}

TEST(Le5, SymmetricUnderSwapAndReflection) {
  auto c = le5_check(1.3, -0.2, 1.5);
  EXPECT_NEAR(le5_check(-0.2, 1.3, 1.5).lhs, c.lhs, 1e-12 * c.lhs);
  EXPECT_NEAR(le5_check(-1.3, 0.2, 1.5).lhs, c.lhs, 1e-12 * c.lhs);
}

TEST(Le5, AnalyticTailAgreesWithLongQuadrature) {
  for (double alpha : {0.5, 1.0, 1.5})
    for (auto [a, b] : {std::pair{1.0, 0.0}, {1.0, 0.3}, {1.0, -0.7}, {1.0, 1.5}, {3.0, 2.5}}) {
      auto t = le5_tail_consistency(a, b, alpha);
      EXPECT_LE(std::abs(t.lhs_analytic_tail - t.lhs_quadrature_tail), t.declared_bound) << alpha << " " << b;
      EXPECT_EQ(t.lhs_analytic_tail, le5_check(a, b, alpha).lhs);
    }
}

TEST(Le5, RejectsBadParameters) {
  EXPECT_THROW(le5_check(1.0, 0.0, 2.0), InvalidInput);
  EXPECT_THROW(le5_check(1.0, 0.0, 1.0, 1.0), InvalidInput);
  EXPECT_THROW(le5_check(1.0, 1.0 + 1e-7, 0.5), UnsupportedConfiguration);
}

TEST(Le52, Examples) {
  Vec x = Vec::Constant(1, 1.0), y = Vec::Constant(1, -1.0);
  auto c = le52_check(x, y, 0.5);
  EXPECT_DOUBLE_EQ(c.lhs, 2.0);
  EXPECT_NEAR(c.ratio, std::sqrt(2.0), 1e-15);
  auto z = le52_check(x, x, 0.3);
  EXPECT_EQ(z.lhs, 0.0);
  EXPECT_EQ(z.ratio, 0.0);
  EXPECT_THROW(le52_check(x, y, 1.0), InvalidInput);
}

TEST(Le52, HomogeneityOverRandomPairs) {
  auto sample = le52_sampler(3, 0.6);
  for (std::uint64_t i = 0; i < 2000; ++i) {
    Stream s(5, i, 0);
    auto c = sample(s);
    Vec x = Eigen::Map<const Vec>(c.inputs.data(), 3), y = Eigen::Map<const Vec>(c.inputs.data() + 3, 3);
    for (double lam : {0.01, 3.0, 1e4}) EXPECT_NEAR(le52_check(lam * x, lam * y, 0.6).ratio, c.ratio, 1e-10 * c.ratio);
  }
}

TEST(AbsPower, ExamplesAndSweep) {
  Vec x(2), y(2);
  x << 1.0, -2.0;
  y << 0.5, 3.0;
  auto e = abs_power_check(x, x, 0.4);
  EXPECT_EQ(e.lhs, 0.0);
  EXPECT_EQ(e.margin, 0.0);
  auto t = abs_power_check(x, y, 1.0);
  EXPECT_LE(t.lhs, (x - y).norm());
  EXPECT_FALSE(violates(t));
  // Collinear pairs (x, 0) attain the constant 1.
  auto w = abs_power_check(x, Vec::Zero(2), 0.3);
  EXPECT_NEAR(w.ratio, 1.0, 1e-15);
  auto sweep = abs_power_sweep(90000, 3, 11, 2);
  EXPECT_EQ(sweep.violations, 0u);
  EXPECT_LE(sweep.max_ratio, 1.0 + 1e-12);
}

TEST(SupSearch, Le52OneDimensionalConstant) {
  auto r = sup_ratio_search("le52", le52_sampler(1, 0.5), 4000, 64000, 21, 2);
  EXPECT_TRUE(r.stable);
  EXPECT_GE(r.sup_ratio, std::sqrt(2.0) * (1.0 - 1e-3));
  EXPECT_LE(r.sup_ratio, std::sqrt(2.0) + 1e-12);
  for (std::size_t i = 1; i < r.sup_history.size(); ++i) EXPECT_GE(r.sup_history[i], r.sup_history[i - 1]);
  EXPECT_EQ(r.worst.front().ratio, r.sup_ratio);
  EXPECT_EQ(r.argmax.ratio, r.sup_ratio);
}

TEST(SupSearch, AbsPowerConstantIsOne) {
  auto r = sup_ratio_search("abs_power", abs_power_sampler(2, 0.5), 2000, 16000, 3, 1);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_LE(r.sup_ratio, 1.0 + 1e-12);
  EXPECT_EQ(r.sup_ratio, 1.0);
  EXPECT_EQ(r.argmax.inputs[2] * r.argmax.inputs[2] + r.argmax.inputs[3] * r.argmax.inputs[3], 0.0);
  EXPECT_TRUE(r.stable);
}

TEST(SupSearch, Le5BelowOneStabilizes) {
  auto r = sup_ratio_search("le5-i", le5_sampler(0.5), 64, 512, 8, 2);
  EXPECT_TRUE(r.stable) << r.sup_ratio;
  EXPECT_TRUE(std::isfinite(r.sup_ratio));
  EXPECT_NEAR(r.sup_ratio, 6.05, 0.05);
}

TEST(SupSearch, DeterministicAcrossJobs) {
  auto a = sup_ratio_search("le52", le52_sampler(2, 0.3), 500, 2000, 4, 1);
  auto b = sup_ratio_search("le52", le52_sampler(2, 0.3), 500, 2000, 4, 3);
  EXPECT_EQ(a.sup_history, b.sup_history);
  EXPECT_EQ(a.argmax.inputs, b.argmax.inputs);
}
