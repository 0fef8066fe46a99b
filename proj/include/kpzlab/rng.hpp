#ifndef KPZLAB_RNG_HPP
#define KPZLAB_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace kpzlab {

/// 64-bit finalizer from SplitMix64. Used to derive stream keys.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream identifier for replica `replica` of grid point `grid_point`.
constexpr std::uint64_t derive_stream(std::uint64_t grid_point, std::uint64_t replica) {
  return splitmix64(splitmix64(grid_point) ^ (replica * 0xd1b54a32d192ed03ULL));
}

/// Philox4x32-10 counter-based generator.
///
/// The key is the master seed; the high half of the 128-bit counter is the
/// stream id and the low half counts blocks. Two generators with the same
/// (seed, stream) produce identical sequences; different streams never
/// overlap.
class Philox {
 public:
  using result_type = std::uint64_t;

  Philox(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ >= 2) refill();
    const std::uint64_t lo = buf_[2 * pos_];
    const std::uint64_t hi = buf_[2 * pos_ + 1];
    ++pos_;
    return (hi << 32) | lo;
  }

  /// Uniform double in the open interval (0, 1).
  double uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard Gaussian via Box-Muller (pairs cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * M_PI * u2;
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  std::uint64_t stream() const { return stream_; }
  std::uint64_t blocks_used() const { return counter_; }

 private:
  void refill() {
    std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(counter_),
                                     static_cast<std::uint32_t>(counter_ >> 32),
                                     static_cast<std::uint32_t>(stream_),
                                     static_cast<std::uint32_t>(stream_ >> 32)};
    std::array<std::uint32_t, 2> k = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k[1], static_cast<std::uint32_t>(p0)};
      k[0] += 0x9E3779B9u;
      k[1] += 0xBB67AE85u;
    }
    buf_ = ctr;
    ++counter_;
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 2;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace kpzlab

#endif  // KPZLAB_RNG_HPP
