#pragma once

#include <array>
#include <cstdint>

namespace slemc {

// Philox-4x32-10 counter-based generator, keyed by (seed, path_id). Streams
// for distinct path ids are independent by construction, and any scheduling
// order reproduces identical per-path sequences.
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t path_id)
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        ctr2_(static_cast<std::uint32_t>(path_id)),
        ctr3_(static_cast<std::uint32_t>(path_id >> 32)) {}

  std::uint32_t next_u32() {
    if (idx_ == 4) {
      block();
      idx_ = 0;
    }
    return out_[idx_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // uniform on (0, 1), never exactly 0 or 1
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  // standard normal via inverse CDF (rational approximation, ~1e-9 relative)
  double next_normal() { return inverse_normal_cdf(next_uniform()); }

  static double inverse_normal_cdf(double p);

 private:
  void block() {
    std::uint32_t c0 = ctr0_, c1 = ctr1_, c2 = ctr2_, c3 = ctr3_;
    std::uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = 0xD2511F53ull * c0;
      const std::uint64_t p1 = 0xCD9E8D57ull * c2;
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n1 = lo1;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      const std::uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    out_ = {c0, c1, c2, c3};
    if (++ctr0_ == 0) ++ctr1_;  // 64-bit draw counter; ctr2/ctr3 hold path_id
  }

  std::uint32_t key0_, key1_;
  std::uint32_t ctr0_ = 0, ctr1_ = 0, ctr2_, ctr3_;
  std::array<std::uint32_t, 4> out_{};
  int idx_ = 4;
};

}  // namespace slemc
