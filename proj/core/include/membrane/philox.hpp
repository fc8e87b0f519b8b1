#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace membrane {

// Philox4x32-10 counter-based generator (Salmon et al.). Each (key, counter)
// pair maps to four independent 32-bit words, so a chain can draw the random
// numbers for (site, sweep) without carrying generator state around.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
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

  static Key key_from_seed(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

// Uniform in [0,1) with 53 random bits from two words.
inline double uniform53(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
  return static_cast<double>(bits & ((std::uint64_t{1} << 53) - 1)) * 0x1.0p-53;
}

// Uniform in (0,1] from one word; safe to take the logarithm of.
inline double uniform32_open0(std::uint32_t w) { return (static_cast<double>(w) + 1.0) * 0x1.0p-32; }

// One standard normal from two words (Box-Muller, cosine branch).
inline double box_muller(std::uint32_t a, std::uint32_t b) {
  const double u1 = uniform32_open0(a);
  const double u2 = static_cast<double>(b) * 0x1.0p-32;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Sequential stream on top of Philox: a fixed key and a 64-bit stream id, the
// remaining 64 counter bits advance. Satisfies UniformRandomBitGenerator.
class PhiloxStream {
 public:
  using result_type = std::uint32_t;
  PhiloxStream(std::uint64_t seed, std::uint64_t stream)
      : key_(Philox4x32::key_from_seed(seed)), stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xFFFFFFFFu; }

  result_type operator()() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }
  double uniform() {
    const auto a = (*this)(), b = (*this)();
    return uniform53(a, b);
  }
  double normal() {
    const auto a = (*this)(), b = (*this)();
    return box_muller(a, b);
  }

 private:
  void refill() {
    buf_ = Philox4x32::generate({static_cast<std::uint32_t>(n_), static_cast<std::uint32_t>(n_ >> 32),
                                 static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                                key_);
    ++n_;
    pos_ = 0;
  }
  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint64_t n_ = 0;
  Philox4x32::Counter buf_{};
  int pos_ = 4;
};

}  // namespace membrane
