// Seedable, splittable random streams. Every Monte Carlo routine in this
// library derives one independent stream per sample from a single master
// seed, so results do not depend on thread count or scheduling.

#pragma once

#include <cstdint>
#include <random>

namespace wse {

// SplitMix64 step; used only to derive seeds, never as the sampling engine.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Independent engine for stream index `stream` under `master`.
inline std::mt19937_64 make_stream_rng(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t s = master ^ (0xD1B54A32D192ED03ULL * (stream + 1));
  const std::uint64_t w0 = splitmix64(s);
  const std::uint64_t w1 = splitmix64(s);
  const std::uint64_t w2 = splitmix64(s);
  const std::uint64_t w3 = splitmix64(s);
  std::seed_seq seq{static_cast<std::uint32_t>(w0), static_cast<std::uint32_t>(w0 >> 32),
                    static_cast<std::uint32_t>(w1), static_cast<std::uint32_t>(w1 >> 32),
                    static_cast<std::uint32_t>(w2), static_cast<std::uint32_t>(w2 >> 32),
                    static_cast<std::uint32_t>(w3), static_cast<std::uint32_t>(w3 >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace wse
