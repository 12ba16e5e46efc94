#pragma once

#include <cstdint>
#include <random>

namespace glrstop {

using Rng = std::mt19937_64;

/// Independent stream for (seed, replication): std::mt19937_64 seeded through
/// std::seed_seq over the four 32-bit halves of the two indices.
Rng substream(std::uint64_t seed, std::uint64_t replication);

/// Standard normal draw.
double standard_normal(Rng& rng);

}  // namespace glrstop
