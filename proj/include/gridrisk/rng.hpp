#pragma once

#include <cstdint>

namespace gridrisk {

// Counter-based random streams: the draw sequence for (seed, counter) is a
// pure function of the pair, so iteration k of a simulation produces the
// same numbers no matter which thread runs it. Built from splitmix64, which
// is also the stream generator: each next() advances an internal counter
// through the same avalanche mix.
//
// std::uniform_real_distribution is deliberately avoided: its output is
// implementation-defined, and reproducibility across standard libraries is
// part of this module's contract.
namespace detail {
inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

class RngStream {
public:
    // Stream for one (master_seed, counter) pair, e.g. one MC iteration.
    RngStream(uint64_t master_seed, uint64_t counter)
        : state_(detail::mix64(detail::mix64(master_seed) ^
                               detail::mix64(counter * 0xd1342543de82ef95ULL + 1))) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1) with 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    uint64_t state_;
};

}  // namespace gridrisk
