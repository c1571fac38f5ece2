#pragma once
#include <array>
#include <cstdint>

namespace stablelike {

// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

// Counter-based stream keyed by (seed, path, channel). Two streams with the
// same triple produce identical sequences, independent of thread layout.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t path, std::uint32_t channel);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Open interval (0,1), 53-bit resolution.
  double uniform();
  double normal();
  double exponential();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t path() const { return path_; }
  std::uint32_t channel() const { return channel_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t path_;
  std::uint32_t channel_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  bool have_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace stablelike
