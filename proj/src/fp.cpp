#include "mwf/fp.hpp"

#include <algorithm>
#include <cstring>

namespace mwf {

uint64_t mulmod(uint64_t a, uint64_t b, uint64_t p) {
    return uint64_t((unsigned __int128)a * b % p);
}

uint64_t powmod(uint64_t a, uint64_t e, uint64_t p) {
    uint64_t r = 1 % p;
    a %= p;
    while (e) {
        if (e & 1)
            r = mulmod(r, a, p);
        a = mulmod(a, a, p);
        e >>= 1;
    }
    return r;
}

bool is_prime_u64(uint64_t n) {
    if (n < 2)
        return false;
    for (uint64_t q : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
        if (n % q == 0)
            return n == q;
    }
    uint64_t d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    /* this witness set is deterministic for all n < 3.3 * 10^24 */
    for (uint64_t w : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
        uint64_t x = powmod(w % n, d, n);
        if (x == 1 || x == n - 1)
            continue;
        bool composite = true;
        for (int i = 1; i < s; ++i) {
            x = mulmod(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite)
            return false;
    }
    return true;
}

PrimeModulus::PrimeModulus(uint64_t p_) : p(p_) {
    if (p <= 2 || p >= kModulusBound)
        throw Error("BadModulus", "modulus must satisfy 2 < p < 2^62");
    if (!is_prime_u64(p))
        throw Error("BadModulus", "modulus is not prime");
}

FpElement operator+(FpElement a, FpElement b) {
    uint64_t p = a.modulus.p;
    uint64_t s = a.value + b.value; // no overflow: both < 2^62
    if (s >= p)
        s -= p;
    return FpElement(s, a.modulus);
}

FpElement operator-(FpElement a, FpElement b) {
    uint64_t p = a.modulus.p;
    uint64_t s = a.value >= b.value ? a.value - b.value : a.value + p - b.value;
    return FpElement(s, a.modulus);
}

FpElement operator*(FpElement a, FpElement b) {
    return FpElement(mulmod(a.value, b.value, a.modulus.p), a.modulus);
}

FpElement operator-(FpElement a) {
    return FpElement(a.value == 0 ? 0 : a.modulus.p - a.value, a.modulus);
}

FpElement mod_inverse(FpElement a) {
    if (a.value == 0)
        throw ZeroInverse("inverse of 0 mod " + std::to_string(a.modulus.p));
    /* extended Euclid; faster than a^(p-2) and works without Fermat */
    int64_t t = 0, nt = 1;
    uint64_t r = a.modulus.p, nr = a.value;
    while (nr != 0) {
        uint64_t q = r / nr;
        int64_t tmp_t = t - int64_t(q) * nt;
        t = nt;
        nt = tmp_t;
        uint64_t tmp_r = r - q * nr;
        r = nr;
        nr = tmp_r;
    }
    if (t < 0)
        t += int64_t(a.modulus.p);
    return FpElement(uint64_t(t), a.modulus);
}

int legendre(FpElement a) {
    if (a.value == 0)
        return 0;
    uint64_t e = powmod(a.value, (a.modulus.p - 1) / 2, a.modulus.p);
    return e == 1 ? 1 : -1;
}

std::vector<FpElement> sqrt_mod(FpElement a) {
    uint64_t p = a.modulus.p;
    if (a.value == 0)
        return {a};
    if (legendre(a) == -1)
        throw NonResidue(std::to_string(a.value) + " mod " + std::to_string(p));

    uint64_t r;
    if (p % 4 == 3) {
        r = powmod(a.value, (p + 1) / 4, p);
    } else {
        /* Tonelli-Shanks: write p-1 = q * 2^s with q odd */
        uint64_t q = p - 1;
        int s = 0;
        while ((q & 1) == 0) {
            q >>= 1;
            ++s;
        }
        uint64_t z = 2;
        while (legendre(FpElement(z, a.modulus)) != -1)
            ++z;
        uint64_t c = powmod(z, q, p);
        r = powmod(a.value, (q + 1) / 2, p);
        uint64_t t = powmod(a.value, q, p);
        int m = s;
        while (t != 1) {
            uint64_t t2 = t;
            int i = 0;
            while (t2 != 1) {
                t2 = mulmod(t2, t2, p);
                ++i;
            }
            uint64_t b = c;
            for (int j = 0; j < m - i - 1; ++j)
                b = mulmod(b, b, p);
            r = mulmod(r, b, p);
            c = mulmod(b, b, p);
            t = mulmod(t, c, p);
            m = i;
        }
    }
    uint64_t r2 = p - r;
    if (r > r2)
        std::swap(r, r2);
    return {FpElement(r, a.modulus), FpElement(r2, a.modulus)};
}

std::vector<uint64_t> primes_in_range(uint64_t lo, uint64_t hi) {
    if (hi > kSieveBound)
        throw RangeTooLarge("sieve bound is 2^32, got hi = " + std::to_string(hi));
    std::vector<uint64_t> out;
    if (lo > hi)
        return out;
    lo = std::max<uint64_t>(lo, 2);

    /* base primes up to sqrt(hi) */
    uint64_t root = 1;
    while ((root + 1) * (root + 1) <= hi)
        ++root;
    std::vector<uint8_t> base(root + 1, 1);
    std::vector<uint64_t> base_primes;
    for (uint64_t i = 2; i <= root; ++i) {
        if (!base[i])
            continue;
        base_primes.push_back(i);
        for (uint64_t j = i * i; j <= root; j += i)
            base[j] = 0;
    }

    const uint64_t seg_len = uint64_t(1) << 20;
    std::vector<uint8_t> seg;
    for (uint64_t start = lo; start <= hi; start += seg_len) {
        uint64_t end = std::min(hi, start + seg_len - 1);
        seg.assign(end - start + 1, 1);
        for (uint64_t q : base_primes) {
            uint64_t first = std::max(q * q, (start + q - 1) / q * q);
            for (uint64_t j = first; j <= end; j += q)
                seg[j - start] = 0;
        }
        for (uint64_t v = start; v <= end; ++v) {
            if (seg[v - start] && v >= 2 && (v >= root + 1 || base[v]))
                out.push_back(v);
        }
        if (end == hi)
            break; // avoid wrap when hi is near 2^64 segment boundary
    }
    return out;
}

} // namespace mwf
