#pragma once

#include <array>
#include <cstdint>

namespace histrecon {

/// Portable pseudo-random stream: xoshiro256** whose state is expanded with
/// SplitMix64 from a (seed, stream) pair. All draws are defined here rather
/// than through <random> distributions so sequences are identical on every
/// platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();
    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();
    /// Uniform integer in [0, bound); bound must be positive.
    std::uint64_t below(std::uint64_t bound);
    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    std::array<std::uint64_t, 4> state_{};
    std::uint64_t seed_;
    std::uint64_t stream_;
};

/// Derives a child stream id so that independent subsystems sharing one
/// user seed never collide (e.g. stream_id(kMcmcStream, chain)).
std::uint64_t stream_id(std::uint64_t domain, std::uint64_t index);

namespace streams {
inline constexpr std::uint64_t graph = 1;
inline constexpr std::uint64_t initial = 2;
inline constexpr std::uint64_t simulate = 3;
inline constexpr std::uint64_t model_init = 4;
inline constexpr std::uint64_t training = 5;
inline constexpr std::uint64_t mcmc = 6;
inline constexpr std::uint64_t oracle = 7;
}  // namespace streams

}  // namespace histrecon
