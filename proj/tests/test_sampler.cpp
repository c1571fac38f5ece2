#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <numeric>

#include "stablelike/error.hpp"
#include "stablelike/sampler.hpp"
#include "stablelike/stats.hpp"
#include "stablelike/symbol.hpp"

using namespace stablelike;

namespace {
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
Vec v1(double a) { return Vec::Constant(1, a); }
SphericalMeasure axes2() {
  return SphericalMeasure::from_atoms(2, {{v2(1, 0), 1}, {v2(-1, 0), 1}, {v2(0, 1), 0.5}, {v2(0, -1), 0.5}});
}

std::complex<double> empirical_cf(const PathEnsemble& e, std::size_t k, const Vec& xi) {
  std::complex<double> acc = 0.0;
  for (std::size_t p = 0; p < e.n_paths; ++p) {
    double ph = xi.dot(e.state_vec(p, k));
    acc += std::complex<double>(std::cos(ph), std::sin(ph));
  }
  return acc / double(e.n_paths);
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = double(i);
  return r;
}
}  // namespace

TEST(OneDimStable, CharacteristicFunction) {
  for (double a : {0.5, 1.0, 1.5}) {
    Stream s(7, 0, 0);
    const std::size_t n = 100000;
    auto x = sample_1d_symmetric_stable(a, 0.8, 1.3, n, s);
    double cf = 0.0;
    for (double v : x) cf += std::cos(v);
    cf /= double(n);
    EXPECT_NEAR(cf, std::exp(-1.3 * 0.8), 3.0 / std::sqrt(double(n))) << a;
  }
  Stream s(1, 0, 0);
  for (double v : sample_1d_symmetric_stable(1.2, 0.0, 1.0, 100, s)) EXPECT_EQ(v, 0.0);
}

TEST(OneDimStable, SelfSimilarity) {
  const double a = 1.3;
  Stream s1(21, 0, 0), s2(21, 1, 0);
  auto x1 = sample_1d_symmetric_stable(a, 1.0, 1.0, 20000, s1);
  auto x2 = sample_1d_symmetric_stable(a, 1.0, 2.0, 20000, s2);
  for (double& v : x2) v *= std::pow(2.0, -1.0 / a);
  EXPECT_GT(ks_two_sample(x1, x2).p_value, 0.01);
}

TEST(PositiveStable, LaplaceTransform) {
  Stream s(3, 0, 0);
  const int n = 100000;
  for (double a : {0.3, 0.75}) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += std::exp(-2.0 * positive_stable(a, s));
    EXPECT_NEAR(acc / n, std::exp(-std::pow(2.0, a)), 4.0 / std::sqrt(double(n)));
  }
}

TEST(Driver, CylindricalCharacteristicFunction) {
  DriverSpec spec(StableMeasure(1.2, axes2()));
  spec.sigma << 1.0, 0.3, 0.0, 0.8;
  const std::size_t n = 100000;
  auto e = sample_driver(spec, {0.0, 0.7}, n, 99);
  EXPECT_EQ(e.method, "exact");
  for (double a : {-1.0, 0.0, 1.5})
    for (double b : {-0.5, 1.0}) {
      Vec xi = v2(a, b);
      auto psi = stable_symbol(spec.measure, spec.sigma, xi).value;
      auto target = std::exp(-0.7 * psi);
      EXPECT_LT(std::abs(empirical_cf(e, 1, xi) - target), 4.0 / std::sqrt(double(n)));
    }
}

TEST(Driver, IsotropicSubGaussianCharacteristicFunction) {
  DriverSpec spec(StableMeasure(1.4, SphericalMeasure::isotropic(2, 2.0)));
  spec.sigma << 1.2, 0.0, 0.4, 0.9;
  const std::size_t n = 100000;
  auto e = sample_driver(spec, {0.0, 0.5}, n, 5);
  for (const Vec& xi : {v2(1, 0), v2(0.3, -0.7), v2(-1.5, 1.0)}) {
    auto target = std::exp(-0.5 * stable_symbol(spec.measure, spec.sigma, xi).value);
    EXPECT_LT(std::abs(empirical_cf(e, 1, xi) - target), 4.0 / std::sqrt(double(n)));
  }
}

TEST(Driver, TruncatedAsymmetricCharacteristicFunction) {
  DriverSpec spec(StableMeasure(1.5, SphericalMeasure::from_atoms(1, {{v1(1), 1.0}})));
  spec.delta = 0.01;
  const std::size_t n = 20000;
  auto e = sample_driver(spec, {0.0, 0.5, 1.0}, n, 8);
  EXPECT_EQ(e.method, "truncated");
  EXPECT_GT(e.delta, 0.0);
  for (double x : {0.3, 0.5}) {
    auto target = std::exp(-1.0 * stable_symbol(spec.measure, spec.sigma, v1(x)).value);
    EXPECT_LT(std::abs(empirical_cf(e, 2, v1(x)) - target), 4.0 / std::sqrt(double(n))) << x;
  }
  // Compensated: mean zero.
  auto m = e.marginal(2, 0);
  EXPECT_LT(std::abs(mean(m)), 4.0 * stderr_of_mean(m));
  for (std::size_t p = 0; p < 50; ++p)
    for (std::size_t j = e.jump_offsets[p]; j < e.jump_offsets[p + 1]; ++j) {
      EXPECT_GE(std::abs(e.jump_values[j]), e.delta * (1 - 1e-12));
      EXPECT_LE(e.jump_times[j], 1.0);
    }
}

TEST(Driver, ZeroScaleGivesDriftOnly) {
  DriverSpec spec(StableMeasure(1.0, axes2()));
  spec.scale = 0.0;
  spec.drift = v2(0.5, -1.0);
  auto e = sample_driver(spec, uniform_grid(1.0, 4), 10, 1);
  for (std::size_t p = 0; p < 10; ++p) {
    EXPECT_NEAR(e.state(p, 4)[0], 0.5, 1e-15);
    EXPECT_NEAR(e.state(p, 4)[1], -1.0, 1e-15);
  }
  DriverSpec other(StableMeasure(1.5, axes2()));
  other.scale = 0.0;
  other.drift = v2(0.5, -1.0);  // ignored off alpha = 1
  auto f = sample_driver(other, uniform_grid(1.0, 4), 10, 1);
  for (double v : f.states) EXPECT_EQ(v, 0.0);
}

TEST(Driver, TruncationConvergesToExact) {
  const double a = 1.5;
  StableMeasure m(a, SphericalMeasure::isotropic(1, 2.0));
  DriverSpec ex(m);
  auto e = sample_driver(ex, {0.0, 1.0}, 20000, 1);
  std::vector<double> ks;
  for (double delta : {0.1, 0.03, 0.01}) {
    DriverSpec tr(m);
    tr.method = DriverMethod::truncated;
    tr.delta = delta;
    auto t = sample_driver(tr, {0.0, 1.0}, 20000, 2);
    ks.push_back(ks_two_sample(e.marginal(1, 0), t.marginal(1, 0)).statistic);
  }
  EXPECT_GT(ks[0], ks[2]);
  EXPECT_LT(ks[2], 0.03);
}

TEST(Driver, DeterministicAcrossJobs) {
  DriverSpec spec(StableMeasure(0.8, axes2()));
  spec.method = DriverMethod::truncated;
  auto a = sample_driver(spec, uniform_grid(1.0, 16), 300, 17, 1);
  auto b = sample_driver(spec, uniform_grid(1.0, 16), 300, 17, 4);
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.jump_values, b.jump_values);
  auto c = sample_driver(spec, uniform_grid(1.0, 16), 300, 18, 1);
  EXPECT_NE(a.states, c.states);
}

TEST(Driver, IndependentIncrements) {
  DriverSpec spec(StableMeasure(1.3, axes2()));
  auto e = sample_driver(spec, {0.0, 1.0, 2.0}, 400, 23);
  std::vector<double> i1(400), i2(400);
  for (std::size_t p = 0; p < 400; ++p) {
    i1[p] = e.state(p, 1)[0];
    i2[p] = e.state(p, 2)[0] - e.state(p, 1)[0];
  }
  auto r = distance_correlation_test(ranks(i1), ranks(i2), 200, 1);
  EXPECT_GT(r.p_value, 0.01);
}

TEST(Driver, SelfSimilarityOfPaths) {
  const double a = 0.9;
  DriverSpec spec(StableMeasure(a, axes2()));
  auto e = sample_driver(spec, {0.0, 1.0, 3.0}, 20000, 4);
  auto x1 = e.marginal(1, 1);
  auto x3 = e.marginal(2, 1);
  for (double& v : x3) v *= std::pow(3.0, -1.0 / a);
  EXPECT_GT(ks_two_sample(x1, x3).p_value, 0.01);
}

TEST(Driver, DefaultDeltaRespectsJumpBudget) {
  DriverSpec spec(StableMeasure(1.2, axes2()));
  auto dc = default_delta(spec, 2.0);
  EXPECT_LE(dc.expected_jumps, spec.max_jumps_per_path * (1 + 1e-12));
  EXPECT_GT(dc.delta, 0.0);
}

TEST(Thinning, ConstantModulationMatchesDriver) {
  StableMeasure m(1.2, SphericalMeasure::isotropic(1, 2.0));
  auto model = LevyModel::constant(m, Mat::Identity(1, 1), 1.5);
  ThinningOptions opt;
  opt.delta = 0.01;
  auto t = thinning_sample(model, {0.0, 0.5, 1.0}, 20000, 3, opt);
  DriverSpec spec(m);
  spec.scale = 1.5;
  auto d = sample_driver(spec, {0.0, 0.5, 1.0}, 20000, 4);
  EXPECT_GT(ks_two_sample(t.marginal(2, 0), d.marginal(2, 0)).p_value, 0.01);
  EXPECT_EQ(t.proposals, 0u);
  EXPECT_THROW(thinning_sample(LevyModel{m, 0.0, 1.0, model.m, model.sigma, model.b, {}, false},
                               {0.0, 1.0}, 1, 1, opt),
               InvalidInput);
}

TEST(Thinning, AcceptanceTelemetry) {
  StableMeasure m(1.2, SphericalMeasure::isotropic(1, 2.0));
  LevyModel model{m, 0.5, 1.5, [](double, const Vec& x) { return 1.0 + 0.5 * std::sin(x[0]); },
                  [](double, const Vec&) { return Mat::Identity(1, 1); }, nullptr, {}, false};
  ThinningOptions opt;
  opt.delta = 0.05;
  opt.x0 = v1(0.3);
  auto grid = uniform_grid(1.0, 100);
  auto e = thinning_sample(model, grid, 4000, 9, opt);
  // Time-average of (m(X) - m_min)/(m_max - m_min) along paths.
  double avg = 0.0;
  for (std::size_t p = 0; p < e.n_paths; ++p)
    for (std::size_t k = 0; k < 100; ++k) avg += 0.5 * (1.0 + std::sin(e.state(p, k)[0])) / 100.0;
  avg /= double(e.n_paths);
  double rate = double(e.accepted) / double(e.proposals);
  double se = std::sqrt(rate * (1 - rate) / double(e.proposals));
  EXPECT_NEAR(rate, avg, 4.0 * se + 0.01);
}

TEST(Ensemble, BinaryRoundTrip) {
  DriverSpec spec(StableMeasure(0.8, axes2()));
  spec.method = DriverMethod::truncated;
  auto e = sample_driver(spec, uniform_grid(1.0, 5), 7, 11);
  std::string path = ::testing::TempDir() + "/ens.bin";
  write_ensemble(e, path);
  auto r = read_ensemble(path);
  EXPECT_EQ(r.states, e.states);
  EXPECT_EQ(r.cont, e.cont);
  EXPECT_EQ(r.jump_offsets, e.jump_offsets);
  EXPECT_EQ(r.jump_values, e.jump_values);
  EXPECT_EQ(r.grid, e.grid);
  EXPECT_EQ(r.seed, 11u);
  EXPECT_EQ(r.method, "truncated");
  std::remove(path.c_str());
}
