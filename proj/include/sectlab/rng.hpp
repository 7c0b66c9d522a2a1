#pragma once

// Counter-based random streams.
//
// Every random quantity in the library is drawn from a Philox4x32-10 block
// cipher keyed by the master seed. The 128-bit counter is laid out as
//
//   word 0 : block index inside a substream
//   word 1 : substream index (e.g. sample number inside a Monte Carlo loop)
//   word 2,3 : 64-bit stream index
//
// so any (seed, stream, substream) triple can be materialised independently of
// the order in which other streams are consumed.

#include <array>
#include <cstdint>
#include <limits>

namespace sectlab {

class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t key, std::uint64_t stream, std::uint32_t substream)
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
        counter_{0u, substream, static_cast<std::uint32_t>(stream),
                 static_cast<std::uint32_t>(stream >> 32)} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ >= 4) {
      buffer_ = encrypt(counter_, key_);
      ++counter_[0];
      pos_ = 0;
    }
    const std::uint64_t lo = buffer_[pos_];
    const std::uint64_t hi = buffer_[pos_ + 1];
    pos_ += 2;
    return (hi << 32) | lo;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Raw 10-round Philox4x32 bijection.
  static Block encrypt(Block ctr, Key key) {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kW0;
      key[1] += kW1;
    }
    return ctr;
  }

 private:
  Key key_;
  Block counter_;
  Block buffer_{};
  int pos_ = 4;
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Order-sensitive hash of a tuple of integers.
template <typename... Ts>
constexpr std::uint64_t hash_ints(Ts... values) {
  std::uint64_t h = 0x2545F4914F6CDD1Dull;
  ((h = splitmix64(h ^ splitmix64(static_cast<std::uint64_t>(values)))), ...);
  return h;
}

/// A reproducible random stream identified by (master_seed, stream_index).
struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;

  /// Generator for one substream; identical arguments give identical sequences.
  Philox4x32 engine(std::uint32_t substream = 0) const {
    return Philox4x32(master_seed, stream_index, substream);
  }

  /// Derived stream, independent of this one and of children with other tags.
  RngStream child(std::uint64_t tag) const {
    return RngStream{master_seed, hash_ints(stream_index, tag)};
  }

  friend bool operator==(const RngStream&, const RngStream&) = default;
};

}  // namespace sectlab
