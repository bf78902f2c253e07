#include "lbsq/random.hpp"

#include <cmath>
#include <string>

#include "lbsq/core.hpp"

namespace lbsq {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t substream_id(std::uint64_t replication, StreamPurpose purpose) {
    return replication * 16 + static_cast<std::uint64_t>(purpose);
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(splitmix64(seed ^ splitmix64(stream_id))) {}

double RandomStream::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double RandomStream::exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw Error(ErrorKind::NonPositiveRate, "exponential rate must be positive, got " + std::to_string(rate));
    }
    // u in (0, 1] so the log is finite and the variate is > 0.
    const double u = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    return -std::log(u) / rate;
}

bool RandomStream::bernoulli(double p) {
    return uniform() < p;
}

}  // namespace lbsq
