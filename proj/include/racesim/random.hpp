#pragma once

// Seeding and sampling primitives. Everything here is defined bit-for-bit so
// trajectories do not depend on the standard library's distribution
// implementations: the engine is std::mt19937_64 (fully specified by the
// standard) and the two samplers below are written out explicitly.

#include <cstdint>
#include <initializer_list>
#include <random>

namespace racesim {

// splitmix64 finaliser (Steele, Lea, Flood):
//   z += 0x9E3779B97F4A7C15
//   z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z  = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   z ^= z >> 31
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Chained mix: h = splitmix64(master); for each part, h = splitmix64(h ^ part).
constexpr std::uint64_t mix_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t part : parts) h = splitmix64(h ^ part);
  return h;
}

// Domain tags keep network and replicate seed streams apart.
inline constexpr std::uint64_t kNetworkStream = 0x6E6574776F726BULL;    // "network"
inline constexpr std::uint64_t kReplicateStream = 0x7265706C6963ULL;    // "replic"

constexpr std::uint64_t network_seed(std::uint64_t master, std::uint64_t instance) noexcept {
  return mix_seed(master, {kNetworkStream, instance});
}

constexpr std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t instance, std::uint64_t replicate,
                                       std::uint64_t cell) noexcept {
  return mix_seed(master, {kReplicateStream, instance, replicate, cell});
}

class Rng {
public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n) by Lemire's multiply-shift with rejection.
  // Requires n > 0.
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t x = engine_();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = engine_();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Uniform double in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

private:
  engine_type engine_;
};

}  // namespace racesim
