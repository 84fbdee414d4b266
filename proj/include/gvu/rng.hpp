#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace gvu {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer; bijective on u64.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Sub-run seed derivation used by sweeps: splitmix-style hash of seed xor
// mixed index. Distinct indices give distinct seeds (mix64 is a bijection
// and the xor of a fixed seed with distinct values stays distinct).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed ^ mix64(index + kGolden));
}

// Counter-based stream (philox2x64-10). A stream is (key, counter); output
// block i depends only on (key, i), so replicas can jump to disjoint streams
// without sequential generation and results do not depend on thread count.
//
// Hierarchy: a run root is Stream(seed); child(i) derives an independent
// stream keyed by a splitmix-style hash of (key, i), collision-free across i
// for a fixed parent; fork() consumes one output and keys a child with it,
// so successive forks of the same parent differ.
class Stream {
 public:
  explicit Stream(std::uint64_t key) : key_(key) {}

  Stream child(std::uint64_t index) const {
    return Stream(mix64(key_ ^ mix64(index + kGolden)));
  }

  Stream fork() { return Stream(next_u64()); }

  std::uint64_t next_u64() {
    if (have_ == 0) {
      block(counter_, buf_[0], buf_[1]);
      ++counter_;
      have_ = 2;
    }
    return buf_[2 - have_--];
  }

  // Uniform on [0, 1), 53-bit mantissa.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; consumes exactly two outputs per draw.
  double next_normal() {
    double u = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    double v = next_unit();
    return std::sqrt(-2.0 * std::log(u)) *
           std::cos(2.0 * 3.14159265358979323846 * v);
  }

  // Draw an index from a categorical law given inclusive prefix sums.
  int next_categorical(std::span<const double> cum) {
    double u = next_unit() * cum.back();
    int lo = 0, hi = static_cast<int>(cum.size()) - 1;
    while (lo < hi) {
      int mid = (lo + hi) / 2;
      if (u < cum[mid])
        hi = mid;
      else
        lo = mid + 1;
    }
    return lo;
  }

 private:
  static void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                      std::uint64_t& lo) {
    unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
  }

  void block(std::uint64_t ctr, std::uint64_t& o0, std::uint64_t& o1) const {
    std::uint64_t c0 = ctr, c1 = 0xDA3E39CB94B95BDBull;
    std::uint64_t k = key_;
    for (int round = 0; round < 10; ++round) {
      std::uint64_t hi, lo;
      mulhilo(0xD2B74407B1CE6E93ull, c0, hi, lo);
      c0 = hi ^ k ^ c1;
      c1 = lo;
      k += kGolden;
    }
    o0 = c0;
    o1 = c1;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::uint64_t buf_[2] = {0, 0};
  int have_ = 0;
};

// Fixed child indices for the top-level split of a run seed.
inline constexpr std::uint64_t kStreamTheta0 = 0;
inline constexpr std::uint64_t kStreamMain = 1;

}  // namespace gvu
