#pragma once
#include <cstdint>

namespace tvnet {

/// SplitMix64 stream: the state is a counter advanced by the golden-ratio
/// increment and every output is a pure function of (seed, draw index), so
/// streams are identical on every platform and compiler. Normal deviates use
/// Box-Muller rather than std::normal_distribution, whose algorithm is
/// implementation defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on the open interval (0, 1).
    double uniform_open() {
        double u;
        do {
            u = uniform();
        } while (u == 0.0);
        return u;
    }

    double normal();

    // Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Independent child seed for a named sub-stream.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
        return mix(seed ^ mix(tag + 0x632BE59BD9B4E019ULL));
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace tvnet
