#pragma once

#include <cstdint>
#include <vector>

namespace cosrec {

/// splitmix64 step; used for seed derivation and generator bootstrap.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Purpose tags for stream derivation. Streams for different purposes are
/// decoupled even when replication and user coincide.
namespace stream_purpose {
inline constexpr std::uint64_t reveal_schedule = 1;
inline constexpr std::uint64_t user_draw = 2;
inline constexpr std::uint64_t responders = 3;
inline constexpr std::uint64_t query_mask = 4;
inline constexpr std::uint64_t query_draw = 5;
inline constexpr std::uint64_t oracle = 6;
}  // namespace stream_purpose

/// Deterministic xoshiro256** generator with hand-rolled distributions.
/// std::random distributions are implementation-defined, so everything here
/// is computed from raw 64-bit words to keep runs bit-identical across
/// platforms and compilers.
///
/// Independent streams are derived from one master seed and a stream id
/// (replication, user, purpose) via a splitmix64 hash chain; see stream().
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  /// Derives the independent stream for (replication, user, purpose) under
  /// `master`. The chain folds each id component into a splitmix64 hash:
  /// h <- splitmix64(h ^ component), starting from h = splitmix64(master).
  static Rng stream(std::uint64_t master, std::uint64_t replication,
                    std::uint64_t user, std::uint64_t purpose) {
    std::uint64_t h = master;
    splitmix64(h);
    for (std::uint64_t part : {replication, user, purpose}) {
      h ^= part;
      splitmix64(h);
    }
    return Rng(h);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + next_unit() * (hi - lo); }

  bool bernoulli(double p) { return next_unit() < p; }

  /// Unbiased uniform integer in [0, n), n >= 1 (Lemire multiply-shift with
  /// rejection).
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Fisher-Yates permutation of {1, ..., count}.
  std::vector<int> permutation(int count) {
    std::vector<int> order(count);
    for (int i = 0; i < count; ++i) order[i] = i + 1;
    for (int i = count - 1; i > 0; --i) {
      const auto j = static_cast<int>(below(static_cast<std::uint64_t>(i) + 1));
      std::swap(order[i], order[j]);
    }
    return order;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

}  // namespace cosrec
