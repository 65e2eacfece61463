#ifndef MEMDP_RNG_HPP
#define MEMDP_RNG_HPP

#include <cstdint>

namespace memdp {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen because the update is a fixed
// 64-bit permutation: trajectories reproduce bit-for-bit across platforms.
// Per-run substreams are derived by mixing (seed, stream index) once.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static SplitMix64 substream(std::uint64_t seed, std::uint64_t index) {
        SplitMix64 base(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
        base.next();
        return base;
    }

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1) with 53 random bits.
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound) by rejection; exact for any bound.
    std::uint64_t next_below(std::uint64_t bound) {
        std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace memdp

#endif
