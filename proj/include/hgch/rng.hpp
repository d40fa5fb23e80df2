#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace hgch {

// Deterministic RNG. mt19937_64 output is fully specified by the standard;
// the draw helpers below avoid std::*_distribution, whose results are
// implementation-defined, so streams are reproducible across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // [0, n), unbiased via rejection
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do { x = gen_(); } while (x >= limit);
        return x % n;
    }

    // [0, 1) with 53 random bits
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[below(i)]);
    }

    // independent child stream, e.g. one per user or per epoch
    Rng fork() { return Rng(gen_() ^ 0x9e3779b97f4a7c15ull); }

private:
    std::mt19937_64 gen_;
};

}  // namespace hgch
