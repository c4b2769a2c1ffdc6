#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

namespace v2xsim {

// Deterministic RNG with portable output. std::mt19937_64 is portable but the
// standard distributions are not, so we roll our own on top of splitmix64.
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
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller; one draw per call, the pair's second half is discarded to
    // keep the stream position independent of call parity.
    double normal(double mu, double sigma) {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        double r = std::sqrt(-2.0 * std::log(u1));
        return mu + sigma * r * std::cos(6.283185307179586476925286766559 * u2);
    }

    double exponential(double rate) {
        double u = uniform01();
        if (u >= 1.0) u = 1.0 - 0x1.0p-53;
        return -std::log(1.0 - u) / rate;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    uint64_t next_below(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

private:
    uint64_t state_;
};

// FNV-1a, used to fold purpose tags into sub-seeds.
inline uint64_t hash_str(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t mix_u64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stable sub-seed derivation: master seed combined with (stream id, purpose
// tag, frame index). Adding an agent or a purpose never perturbs the draws of
// existing streams.
inline uint64_t derive_seed(uint64_t master, uint64_t stream_id,
                            std::string_view purpose, uint64_t frame) {
    uint64_t h = mix_u64(master ^ 0x6a09e667f3bcc909ULL);
    h = mix_u64(h ^ mix_u64(stream_id));
    h = mix_u64(h ^ hash_str(purpose));
    h = mix_u64(h ^ mix_u64(frame ^ 0x3c6ef372fe94f82bULL));
    return h;
}

} // namespace v2xsim
