#ifndef MWF_EC_FP_HPP
#define MWF_EC_FP_HPP

#include <atomic>
#include <cstdint>
#include <utility>
#include <vector>

#include "mwf/fp.hpp"

/* Elliptic curves y^2 = x^3 + ax + b over F_p (p > 3): group law, point
 * counting, point orders, and the l-part statistics (nu, eps, rad) of
 * subgroups generated by reduced Mordell-Weil points. */

namespace mwf {

struct CurveFp {
    FpElement a, b;
    PrimeModulus p;

    /* Validates p > 3 and 4a^3 + 27b^2 != 0 mod p. */
    CurveFp(FpElement a_, FpElement b_);

    /* Group order cache, 0 = unset.  Filled idempotently by count_points;
     * concurrent fills write the same value. */
    mutable std::atomic<uint64_t> order_cache{0};

    CurveFp(const CurveFp& o) : a(o.a), b(o.b), p(o.p) {
        order_cache.store(o.order_cache.load(std::memory_order_relaxed),
                          std::memory_order_relaxed);
    }
    CurveFp& operator=(const CurveFp& o);

    bool same_curve(const CurveFp& o) const {
        return p == o.p && a == o.a && b == o.b;
    }
};

struct FpPoint {
    const CurveFp* curve; // not owned; must outlive the point
    bool inf;
    FpElement x, y;

    static FpPoint infinity(const CurveFp& E);
    /* Validates the curve equation; PointNotOnCurve otherwise. */
    static FpPoint affine(const CurveFp& E, FpElement x, FpElement y);

    bool operator==(const FpPoint& o) const {
        if (inf || o.inf)
            return inf == o.inf;
        return x == o.x && y == o.y;
    }
};

/* l-adic valuations of the order (nu), exponent (eps) and radical (rad) of a
 * finite abelian group; rad is 1 iff l divides the order. */
struct SubgroupLStats {
    uint64_t ell;
    int nu;
    int eps;
    int rad;

    bool operator==(const SubgroupLStats&) const = default;
};

FpPoint add_points(const FpPoint& P, const FpPoint& Q); // CurveMismatch
FpPoint negate(const FpPoint& P);
FpPoint scalar_mul(int64_t n, const FpPoint& P);

/* #E(F_p).  Naive x-sweep below kNaiveCountBound, baby-step giant-step in the
 * Hasse interval above it; result cached on the curve.  AmbiguousOrder when
 * BSGS cannot pin the order down and p is too large for the naive fallback. */
uint64_t count_points(const CurveFp& E);
uint64_t count_points_naive(const CurveFp& E);
uint64_t count_points_bsgs(const CurveFp& E);

inline constexpr uint64_t kNaiveCountBound = uint64_t(1) << 14;
inline constexpr uint64_t kNaiveFallbackBound = 10000000; // BSGS ambiguity rescue

/* Prime factorization (p, e) pairs ascending; trial division below 10^6,
 * Pollard rho (Brent) beyond. */
std::vector<std::pair<uint64_t, int>> factorize(uint64_t n);

/* Exact order of P given a multiple N of it (with factorization of N).
 * BadFactorization if the factorization does not multiply to N or N does not
 * annihilate P. */
uint64_t point_order(const FpPoint& P, uint64_t N,
                     const std::vector<std::pair<uint64_t, int>>& fac);

/* (N / l^{v_l(N)}) * P: a point of l-power order generating the l-part of <P>. */
FpPoint sylow_project(const FpPoint& P, uint64_t N, uint64_t ell);

/* Statistics of the subgroup generated by the given points (all on one curve):
 * nu by breadth-first closure of the Sylow-projected generators, eps as the
 * largest l-valuation of a generator order (= v_l of the exponent, since the
 * exponent of an abelian group generated by g_i is lcm of their orders). */
SubgroupLStats generated_lpart_stats(const std::vector<FpPoint>& gens, uint64_t ell,
                                     size_t closure_cap = size_t(1) << 20);

/* Invariant factors (n1, n2) with E(F_p) isomorphic to Z/n1 x Z/n2, n1 | n2
 * and n1 | p-1.  Random sampling; SamplingExhausted after `trials` points. */
std::pair<uint64_t, uint64_t> group_structure(const CurveFp& E, int trials = 64);

/* Same, with the order supplied by the caller (exercises the degenerate
 * guards without a full count). */
std::pair<uint64_t, uint64_t> group_structure_from_order(const CurveFp& E, uint64_t N,
                                                         int trials = 64);

} // namespace mwf

#endif
