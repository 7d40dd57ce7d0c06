#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace cfn {

/* Deterministic xoshiro256** generator.  All randomized code in the library
 * draws from this type so that a (seed, stream) pair fully determines the
 * result on every platform; std::uniform_*_distribution is avoided because
 * its output is implementation-defined. */
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        // splitmix64 expansion of the seed into the four-word state
        std::uint64_t x = seed;
        for (auto& w : s_) {
            x += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            w = z ^ (z >> 31);
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0,1), 53 significant bits
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n), n > 0; rejection keeps it unbiased
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t(0) - ~std::uint64_t(0) % n;
        std::uint64_t v;
        do { v = next_u64(); } while (v >= limit);
        return v % n;
    }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + int(below(std::uint64_t(hi - lo + 1)));
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = std::size_t(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /* k distinct elements of {0..n-1} \ {excluded}, ascending.
     * Partial Fisher-Yates over the candidate list. */
    std::vector<int> subset_excluding(int n, int k, int excluded);

    /* Derive an independent stream from this seed and a tag path, without
     * consuming state.  Used to give every (epoch, sample) visit its own
     * reproducible stream regardless of evaluation order. */
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

inline std::vector<int> Rng::subset_excluding(int n, int k, int excluded) {
    std::vector<int> pool;
    pool.reserve(std::size_t(n) - 1);
    for (int v = 0; v < n; ++v)
        if (v != excluded) pool.push_back(v);
    if (k > int(pool.size())) k = int(pool.size());
    for (int i = 0; i < k; ++i) {
        int j = i + int(below(std::uint64_t(pool.size() - std::size_t(i))));
        std::swap(pool[std::size_t(i)], pool[std::size_t(j)]);
    }
    pool.resize(std::size_t(k));
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace cfn
