#pragma once

#include <cstdint>
#include <random>

namespace sbp {

/// One step of the splitmix64 sequence; a good 64-bit mixer.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Stream purposes. Distinct purposes never share a seed.
enum class Stream : std::uint64_t { Arrivals = 1, Routing, Tokens, Servers, Single, Baseline };

/// Seed for the stream identified by (master, replication, pool, purpose).
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication,
                                                  std::uint64_t pool, Stream purpose) noexcept {
    std::uint64_t s = splitmix64(master);
    s = splitmix64(s ^ replication);
    s = splitmix64(s ^ (pool + 0x100000000ULL));
    return splitmix64(s ^ static_cast<std::uint64_t>(purpose));
}

using Rng = std::mt19937_64;

[[nodiscard]] inline double uniform01(Rng& rng) {
    return std::generate_canonical<double, 53>(rng);
}

/// Exponential variate with the given positive rate.
[[nodiscard]] inline double exponential(Rng& rng, double rate) {
    return std::exponential_distribution<double>(rate)(rng);
}

/// Index drawn from [0, n).
[[nodiscard]] inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace sbp
