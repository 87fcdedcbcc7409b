#pragma once

// Counter-based random streams. Every (seed, stream tag, row, sweep) tuple
// names an independent stream, so the sample path does not depend on how rows
// are scheduled across threads.

#include <array>
#include <cstdint>

namespace ormachine {

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter apply(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Sequential draws from one Philox stream. The counter words are
/// (block index, row, sweep, tag); the key is the 64-bit seed.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint32_t tag, std::uint32_t row, std::uint32_t sweep) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        row_(row), sweep_(sweep), tag_(tag) {}

  std::uint64_t next_u64() noexcept {
    if (used_ == 2) refill();
    const std::uint64_t v = (static_cast<std::uint64_t>(block_[2 * used_]) << 32) | block_[2 * used_ + 1];
    ++used_;
    return v;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Uniform integer in [0, bound), bound > 0, by rejection of the biased low range.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t x = next_u64();
      if (x >= threshold) return x % bound;
    }
  }

 private:
  void refill() noexcept {
    block_ = Philox4x32::apply({block_index_++, row_, sweep_, tag_}, key_);
    used_ = 0;
  }

  Philox4x32::Key key_;
  std::uint32_t row_;
  std::uint32_t sweep_;
  std::uint32_t tag_;
  std::uint32_t block_index_ = 0;
  Philox4x32::Counter block_{};
  unsigned used_ = 2;
};

/// Stream tags: the low bit selects the matrix, the rest carries a caller
/// supplied salt (layer index, generator id, ...).
enum class StreamMatrix : std::uint32_t { latent = 0, code = 1 };

constexpr std::uint32_t stream_tag(std::uint32_t salt, StreamMatrix m) noexcept {
  return (salt << 1) | static_cast<std::uint32_t>(m);
}

/// Sweep index reserved for initialisation draws.
inline constexpr std::uint32_t kInitSweep = 0xFFFFFFFFu;

}  // namespace ormachine
