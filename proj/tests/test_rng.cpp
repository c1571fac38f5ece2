#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "stablelike/rng.hpp"

using namespace stablelike;

TEST(Philox, KnownAnswerZero) {
  auto r = philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(r[0], 0x6627e8d5u);
  EXPECT_EQ(r[1], 0xe169c58du);
  EXPECT_EQ(r[2], 0xbc57ac4cu);
  EXPECT_EQ(r[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
  auto r = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(r[0], 0x408f276du);
  EXPECT_EQ(r[1], 0x41c83b0eu);
  EXPECT_EQ(r[2], 0xa20bc7c6u);
  EXPECT_EQ(r[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
  auto r = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(r[0], 0xd16cfe09u);
  EXPECT_EQ(r[1], 0x94fdccebu);
  EXPECT_EQ(r[2], 0x5001e420u);
  EXPECT_EQ(r[3], 0x24126ea1u);
}

TEST(Stream, DeterministicAndKeyed) {
  Stream a(42, 7, 1), b(42, 7, 1), c(42, 8, 1), e(42, 7, 2);
  for (int i = 0; i < 100; ++i) {
    double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_NE(x, c.uniform());
    EXPECT_NE(x, e.uniform());
  }
}

TEST(Stream, UniformMoments) {
  Stream s(1, 0, 0);
  const int n = 200000;
  double m = 0, m2 = 0, lo = 1, hi = 0;
  for (int i = 0; i < n; ++i) {
    double u = s.uniform();
    m += u;
    m2 += u * u;
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  m /= n;
  m2 /= n;
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(m, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(m2, 1.0 / 3, 0.003);
}

TEST(Stream, NormalAndExponentialMoments) {
  Stream s(3, 1, 0);
  const int n = 200000;
  double mn = 0, vn = 0, me = 0;
  for (int i = 0; i < n; ++i) {
    double z = s.normal();
    mn += z;
    vn += z * z;
    me += s.exponential();
  }
  EXPECT_NEAR(mn / n, 0.0, 0.01);
  EXPECT_NEAR(vn / n, 1.0, 0.01);
  EXPECT_NEAR(me / n, 1.0, 0.01);
}
