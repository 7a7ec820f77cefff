#pragma once

#include <array>
#include <cstdint>

namespace canaleval {

/// Philox4x32-10 block function (Salmon et al., Random123).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

/// Counter-based stream: key = seed, counter word 2 = stream id, words 0..1
/// = block index. Streams never overlap for fewer than 2^64 blocks.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint32_t stream);

  std::uint32_t next_u32();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal by Box-Muller; the second variate is kept for the next call.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  PhiloxKey key_;
  std::uint32_t stream_;
  std::uint64_t block_ = 0;
  PhiloxCounter buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace canaleval
