#pragma once

// Counter-based Philox4x32-10 generator. A stream is addressed by
// (seed, particle, step), so every draw is reproducible independently of the
// order or partitioning in which particles are simulated.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace agentrisk {

using Philox4x32 = std::array<std::uint32_t, 4>;

inline Philox4x32 philox4x32_10(Philox4x32 ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t particle, std::uint32_t step)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        ctr_{static_cast<std::uint32_t>(particle), static_cast<std::uint32_t>(particle >> 32), step, 0u} {}

  std::uint64_t next_u64() {
    if (pos_ == 4) {
      block_ = philox4x32_10(ctr_, key_);
      ++ctr_[3];
      pos_ = 0;
    }
    const std::uint64_t v = (static_cast<std::uint64_t>(block_[pos_]) << 32) | block_[pos_ + 1];
    pos_ += 2;
    return v;
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal pair by Box-Muller.
  std::pair<double, double> normal_pair() {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double a = 2.0 * std::numbers::pi * uniform();
    return {r * std::cos(a), r * std::sin(a)};
  }

 private:
  std::array<std::uint32_t, 2> key_;
  Philox4x32 ctr_;
  Philox4x32 block_{};
  int pos_ = 4;
};

}  // namespace agentrisk
