#ifndef MWF_FP_HPP
#define MWF_FP_HPP

#include <cstdint>
#include <vector>

#include "mwf/errors.hpp"

/* Prime-field arithmetic for moduli below 2^62 (so that products fit into
 * unsigned __int128) and prime enumeration up to 2^32. */

namespace mwf {

inline constexpr uint64_t kModulusBound = uint64_t(1) << 62;
inline constexpr uint64_t kSieveBound = uint64_t(1) << 32;

uint64_t mulmod(uint64_t a, uint64_t b, uint64_t p);
uint64_t powmod(uint64_t a, uint64_t e, uint64_t p);

/* Deterministic Miller-Rabin, valid for the whole 64-bit range. */
bool is_prime_u64(uint64_t n);

struct PrimeModulus {
    uint64_t p;

    /* Validates 2 < p < 2^62 and primality. */
    explicit PrimeModulus(uint64_t p_);

    /* Skips validation; for callers that already know p is prime
     * (sieve output, hot loops). */
    static PrimeModulus trusted(uint64_t p_) {
        PrimeModulus m(Trusted{});
        m.p = p_;
        return m;
    }

    bool operator==(const PrimeModulus&) const = default;

  private:
    struct Trusted {};
    explicit PrimeModulus(Trusted) : p(0) {}
};

struct FpElement {
    uint64_t value; // canonical representative in [0, p)
    PrimeModulus modulus;

    FpElement(uint64_t v, PrimeModulus m) : value(v % m.p), modulus(m) {}

    /* Accepts negative representatives. */
    static FpElement from_int(int64_t v, PrimeModulus m) {
        int64_t r = v % int64_t(m.p);
        if (r < 0)
            r += int64_t(m.p);
        return FpElement(uint64_t(r), m);
    }

    bool operator==(const FpElement&) const = default;
};

FpElement operator+(FpElement a, FpElement b);
FpElement operator-(FpElement a, FpElement b);
FpElement operator*(FpElement a, FpElement b);
FpElement operator-(FpElement a);

/* b with a*b = 1 mod p; ZeroInverse on a = 0. */
FpElement mod_inverse(FpElement a);

/* 0 if a = 0, +1 if a is a nonzero square mod p, -1 otherwise.  p odd. */
int legendre(FpElement a);

/* Both square roots {r, p-r} of a (just {0} for a = 0), ascending.
 * NonResidue if legendre(a) = -1.  Tonelli-Shanks. */
std::vector<FpElement> sqrt_mod(FpElement a);

/* All primes in [lo, hi], ascending; segmented sieve.
 * RangeTooLarge if hi exceeds 2^32. */
std::vector<uint64_t> primes_in_range(uint64_t lo, uint64_t hi);

} // namespace mwf

#endif
