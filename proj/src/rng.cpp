#include "stablelike/rng.hpp"

#include <cmath>
#include <numbers>

namespace stablelike {

namespace {
constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;
}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                        std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    std::uint64_t p0 = std::uint64_t(kM0) * c[0];
    std::uint64_t p1 = std::uint64_t(kM1) * c[2];
    auto hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
    auto hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kW0;
    k[1] += kW1;
  }
  return c;
}

Stream::Stream(std::uint64_t seed, std::uint64_t path, std::uint32_t channel)
    : seed_(seed), path_(path), channel_(channel) {}

void Stream::refill() {
  buf_ = philox4x32({block_, channel_, std::uint32_t(path_), std::uint32_t(path_ >> 32)},
                    {std::uint32_t(seed_), std::uint32_t(seed_ >> 32)});
  ++block_;
  pos_ = 0;
}

std::uint32_t Stream::next_u32() {
  if (pos_ == 4) refill();
  return buf_[pos_++];
}

std::uint64_t Stream::next_u64() {
  std::uint64_t hi = next_u32();
  return (hi << 32) | next_u32();
}

double Stream::uniform() {
  std::uint64_t k = next_u64() >> 11;
  return (double(k) + 0.5) * 0x1.0p-53;
}

double Stream::normal() {
  if (have_normal_) {
    have_normal_ = false;
    return cached_normal_;
  }
  double u1 = uniform(), u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double th = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(th);
  have_normal_ = true;
  return r * std::cos(th);
}

double Stream::exponential() { return -std::log(uniform()); }

}  // namespace stablelike
