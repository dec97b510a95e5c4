#include "mwf/ec_fp.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "mwf/errors.hpp"

namespace mwf {

namespace {

uint64_t isqrt_u64(uint64_t n) {
    uint64_t r = (uint64_t)sqrtl((long double)n);
    while (r > 0 && (unsigned __int128)r * r > n)
        r--;
    while ((unsigned __int128)(r + 1) * (r + 1) <= n)
        r++;
    return r;
}

uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/* Deterministic splitmix64 stream; seeded from curve data so repeated runs
 * (and parallel sweeps) see identical samples. */
struct Rng {
    uint64_t state;
    explicit Rng(uint64_t seed) : state(seed) {}
    uint64_t next() {
        state += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    uint64_t below(uint64_t n) { return next() % n; }
};

uint64_t curve_seed(const CurveFp& E, uint64_t salt) {
    return mix64(E.p.p ^ mix64(E.a.value ^ mix64(E.b.value ^ salt)));
}

/* (x, y) packed for hash sets; infinity uses (p, p), unreachable for affine
 * coordinates. */
using PointKey = std::pair<uint64_t, uint64_t>;

struct PointKeyHash {
    size_t operator()(const PointKey& k) const {
        return (size_t)(mix64(k.first) ^ (mix64(k.second) >> 1));
    }
};

PointKey key_of(const FpPoint& P) {
    if (P.inf)
        return {P.curve->p.p, P.curve->p.p};
    return {P.x.value, P.y.value};
}

uint64_t f_rhs(const CurveFp& E, uint64_t x) {
    uint64_t p = E.p.p;
    uint64_t x2 = mulmod(x, x, p);
    uint64_t v = mulmod(x2, x, p);
    v = (v + mulmod(E.a.value, x, p)) % p;
    return (v + E.b.value) % p;
}

/* First point found scanning x upward from a random start; p > 3 guarantees
 * at least (p+1)/2 - 2 usable x values, so the scan is short. */
FpPoint random_point(const CurveFp& E, Rng& rng) {
    uint64_t p = E.p.p;
    uint64_t x = rng.below(p);
    for (;;) {
        uint64_t v = f_rhs(E, x);
        FpElement fv(v, E.p);
        if (v == 0)
            return FpPoint::affine(E, FpElement(x, E.p), fv);
        if (legendre(fv) == 1) {
            auto roots = sqrt_mod(fv);
            uint64_t y = roots[rng.next() & 1].value;
            return FpPoint::affine(E, FpElement(x, E.p), FpElement(y, E.p));
        }
        x = (x + 1) % p;
    }
}

FpPoint mul_u64(uint64_t n, const FpPoint& P) {
    FpPoint acc = FpPoint::infinity(*P.curve);
    FpPoint base = P;
    while (n) {
        if (n & 1)
            acc = add_points(acc, base);
        n >>= 1;
        if (n)
            base = add_points(base, base);
    }
    return acc;
}

uint64_t lcm_checked(uint64_t a, uint64_t b, uint64_t cap) {
    uint64_t g = std::gcd(a, b);
    unsigned __int128 l = (unsigned __int128)(a / g) * b;
    if (l > cap)
        throw std::logic_error("lcm of point orders exceeds the Hasse interval");
    return (uint64_t)l;
}

int val_at(uint64_t n, uint64_t ell) {
    int v = 0;
    while (n % ell == 0) {
        n /= ell;
        v++;
    }
    return v;
}

/* Exact order of P assuming ord(P) | M, by stripping prime factors of M. */
uint64_t strip_order(const FpPoint& P, uint64_t M) {
    for (auto [q, e] : factorize(M)) {
        (void)e;
        while (M % q == 0 && mul_u64(M / q, P).inf)
            M /= q;
    }
    return M;
}

/* All multiples of ord(P) in [lo, hi] via baby-step giant-step, reduced to
 * ord(P) by gcds (two hits are consecutive multiples) or factor stripping
 * (single hit).  Orders <= the baby-step count are caught while building the
 * table, which also keeps its entries distinct. */
uint64_t order_in_interval(const FpPoint& P, uint64_t lo, uint64_t hi) {
    uint64_t m = isqrt_u64(hi - lo) + 1;

    std::unordered_map<PointKey, uint32_t, PointKeyHash> baby;
    baby.reserve(m);
    FpPoint B = FpPoint::infinity(*P.curve);
    for (uint64_t j = 0; j < m; j++) {
        if (j > 0 && B.inf)
            return j;
        baby.emplace(key_of(B), (uint32_t)j);
        B = add_points(B, P);
    }

    FpPoint giant = mul_u64(m, P);
    FpPoint R = mul_u64(lo, P);
    std::vector<uint64_t> hits;
    for (uint64_t base = lo; base <= hi; base += m) {
        auto it = baby.find(key_of(negate(R)));
        if (it != baby.end()) {
            uint64_t M = base + it->second;
            if (M >= lo && M <= hi && M > 0)
                hits.push_back(M);
        }
        R = add_points(R, giant);
    }

    if (hits.empty())
        throw std::logic_error("no annihilator in the Hasse interval");
    uint64_t g = hits[0];
    for (size_t i = 1; i < hits.size(); i++)
        g = std::gcd(g, hits[i]);
    if (hits.size() > 1)
        return g;
    return strip_order(P, g);
}

std::pair<uint64_t, uint64_t> hasse_interval(uint64_t p) {
    uint64_t w = isqrt_u64(4 * p);
    return {p + 1 - w, p + 1 + w};
}

} // namespace

CurveFp::CurveFp(FpElement a_, FpElement b_) : a(a_), b(b_), p(a_.modulus) {
    if (!(a_.modulus == b_.modulus))
        throw CurveMismatch("curve coefficients over different fields");
    if (p.p <= 3)
        throw BadPrime("curve arithmetic requires p > 3");
    FpElement d = FpElement(4, p) * a * a * a + FpElement(27, p) * b * b;
    if (d.value == 0)
        throw BadPrime("singular curve: 4a^3 + 27b^2 = 0 mod p");
}

CurveFp& CurveFp::operator=(const CurveFp& o) {
    a = o.a;
    b = o.b;
    p = o.p;
    order_cache.store(o.order_cache.load(std::memory_order_relaxed),
                      std::memory_order_relaxed);
    return *this;
}

FpPoint FpPoint::infinity(const CurveFp& E) {
    return FpPoint{&E, true, FpElement(0, E.p), FpElement(0, E.p)};
}

FpPoint FpPoint::affine(const CurveFp& E, FpElement x, FpElement y) {
    FpPoint P{&E, false, x, y};
    FpElement lhs = y * y;
    FpElement rhs = x * x * x + E.a * x + E.b;
    if (!(lhs == rhs))
        throw PointNotOnCurve("y^2 != x^3 + ax + b mod p");
    return P;
}

FpPoint add_points(const FpPoint& P, const FpPoint& Q) {
    if (!P.curve->same_curve(*Q.curve))
        throw CurveMismatch("points on different curves");
    if (P.inf)
        return Q;
    if (Q.inf)
        return P;

    const CurveFp& E = *P.curve;
    if (P.x == Q.x) {
        if ((P.y + Q.y).value == 0)
            return FpPoint::infinity(E);
        /* tangent: lambda = (3x^2 + a) / 2y */
        FpElement lam = (FpElement(3, E.p) * P.x * P.x + E.a)
                        * mod_inverse(P.y + P.y);
        FpElement x3 = lam * lam - P.x - Q.x;
        return FpPoint{&E, false, x3, lam * (P.x - x3) - P.y};
    }
    FpElement lam = (Q.y - P.y) * mod_inverse(Q.x - P.x);
    FpElement x3 = lam * lam - P.x - Q.x;
    return FpPoint{&E, false, x3, lam * (P.x - x3) - P.y};
}

FpPoint negate(const FpPoint& P) {
    if (P.inf)
        return P;
    return FpPoint{P.curve, false, P.x, -P.y};
}

FpPoint scalar_mul(int64_t n, const FpPoint& P) {
    if (n < 0)
        return mul_u64(uint64_t(0) - (uint64_t)n, negate(P));
    return mul_u64((uint64_t)n, P);
}

uint64_t count_points_naive(const CurveFp& E) {
    uint64_t p = E.p.p;
    /* counts[v] = #{y : y^2 = v}; y and p-y pair up, y = 0 contributes once */
    std::vector<uint8_t> counts(p, 0);
    for (uint64_t y = 0; y <= (p - 1) / 2; y++)
        counts[mulmod(y, y, p)] += (y == 0) ? 1 : 2;
    uint64_t total = 1;
    for (uint64_t x = 0; x < p; x++)
        total += counts[f_rhs(E, x)];
    return total;
}

uint64_t count_points_bsgs(const CurveFp& E) {
    auto [lo, hi] = hasse_interval(E.p.p);
    uint64_t L = 1;
    const int kTrials = 24;
    for (int trial = 0; trial < kTrials; trial++) {
        Rng rng(curve_seed(E, 0xB565 + (uint64_t)trial));
        FpPoint P = random_point(E, rng);
        uint64_t ord = order_in_interval(P, lo, hi);
        L = lcm_checked(L, ord, hi);
        /* L divides #E, so multiples of L in [lo, hi] are the candidates */
        uint64_t k_lo = (lo + L - 1) / L;
        uint64_t k_hi = hi / L;
        if (k_lo == k_hi)
            return k_lo * L;
    }
    if (E.p.p < kNaiveFallbackBound)
        return count_points_naive(E);
    throw AmbiguousOrder("group order not determined by sampled point orders");
}

uint64_t count_points(const CurveFp& E) {
    uint64_t cached = E.order_cache.load(std::memory_order_relaxed);
    if (cached)
        return cached;
    uint64_t n = (E.p.p < kNaiveCountBound) ? count_points_naive(E)
                                            : count_points_bsgs(E);
    E.order_cache.store(n, std::memory_order_relaxed);
    return n;
}

std::vector<std::pair<uint64_t, int>> factorize(uint64_t n) {
    if (n == 0)
        throw BadFactorization("cannot factor 0");
    std::vector<uint64_t> primes;
    for (uint64_t d : {2ull, 3ull, 5ull}) {
        while (n % d == 0) {
            primes.push_back(d);
            n /= d;
        }
    }
    /* wheel mod 6 up to 10^6 */
    for (uint64_t d = 7; d <= 1000000 && d * d <= n; d += (d % 6 == 1) ? 4 : 2) {
        while (n % d == 0) {
            primes.push_back(d);
            n /= d;
        }
    }

    /* remaining cofactor has no prime factor <= 10^6 */
    std::vector<uint64_t> pending;
    if (n > 1)
        pending.push_back(n);
    Rng rng(mix64(n ^ 0xFAC7));
    while (!pending.empty()) {
        uint64_t m = pending.back();
        pending.pop_back();
        if (is_prime_u64(m)) {
            primes.push_back(m);
            continue;
        }
        /* Pollard rho, Brent variant */
        uint64_t g = m;
        while (g == m) {
            uint64_t y = rng.below(m - 2) + 1;
            uint64_t c = rng.below(m - 1) + 1;
            uint64_t x = 0, ys = 0, q = 1, r = 1;
            const uint64_t blk = 128;
            g = 1;
            while (g == 1) {
                x = y;
                for (uint64_t i = 0; i < r; i++)
                    y = (mulmod(y, y, m) + c) % m;
                for (uint64_t k = 0; k < r && g == 1; k += blk) {
                    ys = y;
                    uint64_t lim = std::min(blk, r - k);
                    for (uint64_t i = 0; i < lim; i++) {
                        y = (mulmod(y, y, m) + c) % m;
                        q = mulmod(q, x > y ? x - y : y - x, m);
                    }
                    g = std::gcd(q, m);
                }
                r *= 2;
            }
            if (g == m) {
                do {
                    ys = (mulmod(ys, ys, m) + c) % m;
                    g = std::gcd(x > ys ? x - ys : ys - x, m);
                } while (g == 1);
            }
        }
        pending.push_back(g);
        pending.push_back(m / g);
    }

    std::sort(primes.begin(), primes.end());
    std::vector<std::pair<uint64_t, int>> fac;
    for (uint64_t q : primes) {
        if (!fac.empty() && fac.back().first == q)
            fac.back().second++;
        else
            fac.push_back({q, 1});
    }
    return fac;
}

uint64_t point_order(const FpPoint& P, uint64_t N,
                     const std::vector<std::pair<uint64_t, int>>& fac) {
    unsigned __int128 prod = 1;
    for (auto [q, e] : fac) {
        for (int i = 0; i < e; i++) {
            prod *= q;
            if (prod > N)
                throw BadFactorization("factorization does not multiply to N");
        }
    }
    if (prod != N)
        throw BadFactorization("factorization does not multiply to N");
    if (!mul_u64(N, P).inf)
        throw BadFactorization("N does not annihilate the point");

    uint64_t d = N;
    for (auto [q, e] : fac) {
        (void)e;
        while (d % q == 0 && mul_u64(d / q, P).inf)
            d /= q;
    }
    return d;
}

FpPoint sylow_project(const FpPoint& P, uint64_t N, uint64_t ell) {
    uint64_t M = N;
    while (M % ell == 0)
        M /= ell;
    return mul_u64(M, P);
}

SubgroupLStats generated_lpart_stats(const std::vector<FpPoint>& gens, uint64_t ell,
                                     size_t closure_cap) {
    if (!is_prime_u64(ell))
        throw BadFactorization("ell must be prime");
    if (gens.empty())
        return {ell, 0, 0, 0};
    const CurveFp& E = *gens[0].curve;
    for (const FpPoint& g : gens)
        if (!g.curve->same_curve(E))
            throw CurveMismatch("generators on different curves");

    uint64_t N = count_points(E);
    auto fac = factorize(N);

    int eps = 0;
    std::vector<FpPoint> proj;
    for (const FpPoint& g : gens) {
        eps = std::max(eps, val_at(point_order(g, N, fac), ell));
        FpPoint h = sylow_project(g, N, ell);
        if (!h.inf)
            proj.push_back(h);
    }

    /* closure of the projected generators under addition; the group is
     * finite abelian, so the reachable set is the generated subgroup */
    std::unordered_set<PointKey, PointKeyHash> seen;
    std::vector<FpPoint> queue;
    queue.push_back(FpPoint::infinity(E));
    seen.insert(key_of(queue[0]));
    for (size_t i = 0; i < queue.size(); i++) {
        FpPoint cur = queue[i];
        for (const FpPoint& h : proj) {
            FpPoint nxt = add_points(cur, h);
            if (seen.insert(key_of(nxt)).second) {
                if (queue.size() >= closure_cap)
                    throw ClosureBudgetExceeded("subgroup closure exceeds configured cap");
                queue.push_back(nxt);
            }
        }
    }

    uint64_t sz = queue.size();
    int nu = 0;
    while (sz % ell == 0) {
        sz /= ell;
        nu++;
    }
    if (sz != 1)
        throw std::logic_error("closure size is not a power of ell");
    assert(eps <= nu);
    return {ell, nu, eps, nu >= 1 ? 1 : 0};
}

std::pair<uint64_t, uint64_t> group_structure_from_order(const CurveFp& E, uint64_t N,
                                                         int trials) {
    if (N <= 1)
        throw SamplingExhausted("degenerate group of order 1");
    auto fac = factorize(N);

    std::vector<FpPoint> samples;
    Rng rng(curve_seed(E, 0x57A7));
    for (int t = 0; t < trials; t++) {
        samples.push_back(random_point(E, rng));

        /* exponent and size of the sampled subgroup, prime by prime */
        unsigned __int128 sub_order = 1;
        uint64_t n2 = 1;
        for (auto [q, e] : fac) {
            (void)e;
            SubgroupLStats s = generated_lpart_stats(samples, q);
            for (int i = 0; i < s.nu; i++)
                sub_order *= q;
            for (int i = 0; i < s.eps; i++)
                n2 *= q;
        }
        if (sub_order == N) {
            uint64_t n1 = N / n2;
            if (n2 % n1 != 0 || (E.p.p - 1) % n1 != 0)
                throw std::logic_error("invariant factors violate n1 | n2, n1 | p-1");
            return {n1, n2};
        }
    }
    throw SamplingExhausted("group structure undetermined after sampling");
}

std::pair<uint64_t, uint64_t> group_structure(const CurveFp& E, int trials) {
    return group_structure_from_order(E, count_points(E), trials);
}

} // namespace mwf
