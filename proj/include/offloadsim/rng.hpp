#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace offloadsim {

// Deterministic PRNG used everywhere in the project. std:: distributions are
// implementation-defined, so all sampling is done by hand on top of
// splitmix64 to keep runs bit-reproducible across compilers.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n).
    uint64_t next_below(uint64_t n) {
        // Modulo bias is ~2^-53 for the n used here; acceptable.
        return n == 0 ? 0 : next_u64() % n;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Box-Muller, one draw per call (the spare is dropped for simplicity).
    double gaussian(double mean, double stddev) {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * M_PI * u2);
    }

    double exponential(double mean) {
        double u = next_double();
        if (u < 1e-300) u = 1e-300;
        return -mean * std::log(u);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

// FNV-1a over a string, for deriving per-entity RNG streams.
inline uint64_t hash_str(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Mixes a master seed with stream tags so that draws for one entity do not
// depend on how many draws other entities made.
inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    Rng r(master ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xc2b2ae3d27d4eb4fULL) ^
          (c * 0x165667b19e3779f9ULL));
    return r.next_u64();
}

}  // namespace offloadsim
