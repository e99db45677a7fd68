#pragma once

#include <cstdint>
#include <cmath>

namespace corruptlab {

// splitmix64: used for seeding and for hashing index tuples into stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a over raw bytes; stable across platforms, used for config/cell hashing.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64_u64(std::uint64_t v, std::uint64_t h) {
    return fnv1a64(&v, sizeof(v), h);
}

// xoshiro256++ stream. Deterministic, copyable, one instance per logical
// randomness source so corruption streams never perturb environment streams.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0x853c49e6748fea9bULL) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform double in [0, 1), 53-bit resolution.
    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    bool bernoulli(double p) { return u01() < p; }

    // Uniform integer in [0, n) via 128-bit multiply (no modulo bias worth
    // caring about at these ranges, and bit-stable everywhere we build).
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Knuth multiplication method; fine for the small rates used here.
    int poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        if (lambda < 30.0) {
            const double limit = std::exp(-lambda);
            double prod = u01();
            int k = 0;
            while (prod > limit) {
                prod *= u01();
                ++k;
            }
            return k;
        }
        // Split large rates to keep the product away from underflow.
        return poisson(lambda / 2) + poisson(lambda - lambda / 2);
    }

    double gaussian() {
        // Box-Muller, one value per call (the spare is dropped for simplicity).
        double u1 = u01(), u2 = u01();
        while (u1 <= 1e-300) u1 = u01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // Derive an independent child stream; used for per-cell / per-episode
    // seeding so results do not depend on execution order.
    Rng fork(std::uint64_t tag) {
        std::uint64_t h = fnv1a64_u64(next_u64(), 0xcbf29ce484222325ULL);
        h = fnv1a64_u64(tag, h);
        return Rng(h);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

// Stable hash of an index tuple, used to derive sweep cell seeds.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0,
                                 std::uint64_t d = 0) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a64_u64(master, h);
    h = fnv1a64_u64(a, h);
    h = fnv1a64_u64(b, h);
    h = fnv1a64_u64(c, h);
    h = fnv1a64_u64(d, h);
    return h;
}

}  // namespace corruptlab
