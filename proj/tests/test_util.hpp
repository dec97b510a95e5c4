#ifndef MWF_TEST_UTIL_HPP
#define MWF_TEST_UTIL_HPP

#include <cstdint>

#include "mwf/fp.hpp"

/* Deterministic pseudo-randomness for tests (splitmix64). */
struct Prng {
    uint64_t state;

    explicit Prng(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    uint64_t below(uint64_t n) { return next() % n; }

    /* next prime >= some random value in [lo, hi), by stepping */
    uint64_t random_prime(uint64_t lo, uint64_t hi) {
        for (;;) {
            uint64_t c = lo + below(hi - lo);
            if (c % 2 == 0)
                ++c;
            for (; c < hi; c += 2)
                if (mwf::is_prime_u64(c))
                    return c;
        }
    }
};

#endif
