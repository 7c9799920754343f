#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sparsenls {

// Seeded RNG with hand-rolled uniform/gauss draws so that generated
// sequences are identical across standard library implementations.
// Streams derived from (master seed, index) are independent; workers in a
// parallel region each own their stream, keeping results independent of
// scheduling.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static Rng stream(std::uint64_t master, std::uint64_t index) {
        return Rng(mix(master ^ mix(index)));
    }

    // uniform on [0,1)
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller, two uniforms consumed per call
    double gauss() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    std::uint64_t integer(std::uint64_t n) {  // [0, n)
        return gen_() % n;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace sparsenls
