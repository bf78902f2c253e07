#pragma once

#include <cstdint>
#include <random>

namespace lbsq {

/// Purpose tags for substreams. A replication index is folded into the
/// stream id with substream_id() so every (replication, purpose) pair draws
/// from its own sequence.
enum class StreamPurpose : std::uint64_t {
    Arrivals = 0,
    ServiceTimes = 1,
    Success = 2,
    Positions = 3,
    Geometry = 4,
};

std::uint64_t substream_id(std::uint64_t replication, StreamPurpose purpose);

/// Deterministic random stream.
///
/// Engine: std::mt19937_64, whose output sequence is fixed by the standard.
/// The engine seed is splitmix64(seed ^ splitmix64(stream_id)), so nearby
/// seeds and stream ids land far apart in the engine state space. Variates
/// are produced by explicit transforms below rather than std:: distributions,
/// whose algorithms are implementation-defined, which keeps sequences
/// identical across standard libraries.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi);

    /// Exponential variate with mean 1/rate, strictly positive.
    /// Throws NonPositiveRate if rate <= 0 or is not finite.
    double exponential(double rate);

    bool bernoulli(double p);

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace lbsq
