#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace cps {

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed-splitting rule: one 64-bit master seed per run; the stream for
// (episode, purpose) is mix64(mix64(master ^ mix64(episode)) ^ mix64(purpose)).
// Purposes: 0 = posterior draw, 1 = trajectory, 2 = baseline policy.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t episode,
                                 std::uint64_t purpose) {
    return mix64(mix64(master ^ mix64(episode)) ^ mix64(purpose + 0x517cc1b727220a95ULL));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // uniform double in [0, 1), 53 bits, independent of libstdc++ distribution details
    double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // index into a probability vector by inverse CDF; assumes weights sum to ~1
    int categorical(const std::vector<double>& probs) {
        double u = next_unit();
        double acc = 0.0;
        int last = static_cast<int>(probs.size()) - 1;
        for (int i = 0; i <= last; ++i) {
            acc += probs[static_cast<std::size_t>(i)];
            if (u < acc) return i;
        }
        return last;
    }

    int uniform_int(int n) { return static_cast<int>(next_unit() * n) % n; }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace cps
