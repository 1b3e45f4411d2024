#pragma once

// Counter-based random numbers.  Every gaussian is a pure function of
// (stream, cell, pair, purpose), so trajectories can be replayed, refined in
// time on the same Brownian path, and distributed over any worker count
// without changing a single draw.

#include <array>
#include <cmath>
#include <cstdint>

namespace srdlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Philox 4x32, 10 rounds.  128-bit counter, 64-bit key, 128-bit output block.
struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::uint64_t key,
                                            std::array<std::uint32_t, 4> c) {
    std::uint32_t k0 = std::uint32_t(key), k1 = std::uint32_t(key >> 32);
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t(kMul0) * c[0];
      const std::uint64_t p1 = std::uint64_t(kMul1) * c[2];
      const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
      const std::uint32_t hi1 = std::uint64_t(p1) >> 32, lo1 = std::uint32_t(p1);
      c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    return c;
  }
};

// Stream ids separate (seed, experiment block, sample); distinct inputs give
// distinct ids because each mixing stage is a bijection.
inline std::uint64_t derive_stream(std::uint64_t base_seed, std::uint64_t block_tag,
                                   std::uint64_t sample) {
  std::uint64_t h = splitmix64(base_seed);
  h = splitmix64(h ^ block_tag);
  return splitmix64(h ^ sample);
}

enum class NoiseUse : std::uint32_t {
  ou_innovation = 0,
  wiener_increment = 1,
  aux = 2,
};

struct GaussPair {
  double z0, z1;
};

// Box-Muller on one Philox block: two independent standard normals.
inline GaussPair normal_pair(std::uint64_t stream, std::uint64_t cell, std::uint32_t pair,
                             NoiseUse purpose) {
  const auto w = Philox4x32::block(
      stream, {std::uint32_t(cell), std::uint32_t(cell >> 32), pair,
               static_cast<std::uint32_t>(purpose)});
  const std::uint64_t a = (std::uint64_t(w[0]) << 32) | w[1];
  const std::uint64_t b = (std::uint64_t(w[2]) << 32) | w[3];
  const double u1 = double((a >> 11) + 1) * 0x1.0p-53;  // in (0, 1], safe for log
  const double u2 = double(b >> 11) * 0x1.0p-53;        // in [0, 1)
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * 3.14159265358979323846 * u2;
  return {r * std::cos(th), r * std::sin(th)};
}

}  // namespace srdlab
