#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace wpflow {

/// splitmix64 step; used for seed expansion and stream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Derives an independent stream seed from (master seed, label, index).
/// All randomness in the library flows through this, so results are
/// reproducible for any worker count: the stream belongs to the work item,
/// not to the thread that happens to run it.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                 std::uint64_t index) {
    std::uint64_t s = master ^ 0x6a09e667f3bcc908ULL;
    splitmix64(s);
    s ^= fnv1a64(label);
    splitmix64(s);
    s ^= index * 0xd6e8feb86659fd93ULL;
    return splitmix64(s);
}

/// xoshiro256++ generator. Deterministic across platforms; one instance per
/// work item.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : state_) w = splitmix64(sm);
    }

    static Rng derive(std::uint64_t master, std::string_view label,
                      std::uint64_t index) {
        return Rng(derive_seed(master, label, index));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Standard normal via Box-Muller (one spare cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double two_pi = 6.283185307179586476925286766559;
        spare_ = mag * std::sin(two_pi * u2);
        has_spare_ = true;
        return mag * std::cos(two_pi * u2);
    }

    /// Uniform direction on the Euclidean unit 3-sphere in R^4.
    std::array<double, 4> sphere3() {
        std::array<double, 4> u;
        double n2 = 0.0;
        do {
            for (auto& c : u) c = normal();
            n2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2] + u[3] * u[3];
        } while (n2 == 0.0);
        const double inv = 1.0 / std::sqrt(n2);
        for (auto& c : u) c *= inv;
        return u;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace wpflow
