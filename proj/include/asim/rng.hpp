#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace asim {

// SplitMix64 finalizer. Used for every seed derivation in the project.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed of replication `replication` under base seed `seed`.
constexpr std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t replication) noexcept {
  return mix64(seed ^ mix64(replication + 1));
}

/// Seed of the stream labeled (name, agent) inside one replication.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::string_view name,
                                    std::uint64_t agent) noexcept {
  return mix64(mix64(seed ^ fnv1a(name)) ^ mix64(agent));
}

/// Named, seeded random stream. The engine (mt19937_64) is fully specified by
/// the standard; conversions to doubles and ranges are done here rather than
/// through <random> distributions so every platform produces the same values.
class RandomStream {
 public:
  RandomStream() : RandomStream("default", 0) {}
  RandomStream(std::string name, std::uint64_t seed) : name_(std::move(name)), engine_(seed) {}

  const std::string& name() const noexcept { return name_; }
  std::uint64_t draws() const noexcept { return draws_; }

  std::uint64_t next() {
    ++draws_;
    return engine_();
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), unbiased by rejection. n must be > 0.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t x = next();
      if (x >= threshold) return x % n;
    }
  }

  /// One draw; true with probability p (p <= 0 never, p >= 1 always).
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::string name_;
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

}  // namespace asim
