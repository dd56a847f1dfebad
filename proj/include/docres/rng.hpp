#pragma once

#include <array>
#include <cstdint>

namespace docres {

// xoshiro256** seeded through splitmix64. One integer seed reproduces every
// stochastic result in the project, on any platform.
class Rng {
  public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0,1), 53 mantissa bits.
    double next_f64() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0,n) by rejection, no modulo bias. n >= 1.
    uint64_t next_range(uint64_t n) {
        const uint64_t min = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            const uint64_t r = next_u64();
            if (r >= min) return r % n;
        }
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_f64(); }

    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Stable derived seed for per-sample substreams.
    static uint64_t mix(uint64_t seed, uint64_t a, uint64_t b = 0) {
        uint64_t x = seed;
        uint64_t h = splitmix64(x);
        x = h ^ (a * 0x9e3779b97f4a7c15ULL);
        h = splitmix64(x);
        x = h ^ (b * 0xbf58476d1ce4e5b9ULL);
        return splitmix64(x);
    }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<uint64_t, 4> state_;
};

}  // namespace docres
