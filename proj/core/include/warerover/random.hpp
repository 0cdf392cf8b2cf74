#pragma once

#include <cstdint>
#include <random>

namespace warerover {

using Rng = std::mt19937_64;

// Independent stream per purpose so toggling one subsystem never shifts the
// draws of another.
enum class StreamPurpose : std::uint32_t { Orders = 1, Scheduler = 2, Failures = 3 };

inline Rng make_stream(std::uint64_t seed, StreamPurpose purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose), 0x57a2e20bu};
  return Rng(seq);
}

inline std::uint64_t derive_seed(std::uint64_t seed, StreamPurpose purpose) {
  auto rng = make_stream(seed, purpose);
  return rng();
}

}  // namespace warerover
