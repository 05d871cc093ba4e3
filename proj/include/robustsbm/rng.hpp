#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <string_view>

namespace rsbm {

// splitmix64 finalizer; also the documented stream-derivation mix.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
    // FNV-1a, folded through mix64
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return mix64(h);
}

// Derived RNG stream for (master seed, cell, replicate, stage tag).
// Streams for distinct tuples do not collide in practice; the derivation is
// stable under plans that append cells.
inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t cell,
                                   std::uint64_t replicate, std::string_view stage) {
    std::uint64_t s = mix64(master);
    s = mix64(s ^ mix64(cell + 0x01234567ULL));
    s = mix64(s ^ mix64(replicate + 0x89abcdefULL));
    s = mix64(s ^ hash_tag(stage));
    return s;
}

// Deterministic RNG wrapper. All samplers are hand-rolled on top of
// mt19937_64 so that outputs are bit-identical across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(mix64(seed)) {}

    std::uint64_t next_u64() { return eng_(); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform integer in [lo, hi] inclusive
    int uniform_int(int lo, int hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return lo + static_cast<int>(v % span);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // standard normal, Box-Muller with a cached spare
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * M_PI * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    // derive an independent child stream (for per-trial / per-restart use)
    Rng child(std::uint64_t salt) { return Rng(mix64(next_u64() ^ mix64(salt))); }

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace rsbm
