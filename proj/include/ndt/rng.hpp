#pragma once

#include <cstdint>
#include <random>

namespace ndt {

using Rng = std::mt19937_64;

enum class StreamKind : std::uint32_t { mobility = 1, cell = 2, vehicle = 3, shadowing = 4, training = 5 };

/// Independent stream per (run seed, purpose, entity id) so adding an entity
/// never perturbs the draws of another.
inline Rng make_stream(std::uint64_t seed, StreamKind kind, std::uint64_t id = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(kind), static_cast<std::uint32_t>(id),
                    static_cast<std::uint32_t>(id >> 32)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace ndt
