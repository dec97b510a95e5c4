#ifndef MWF_EC_Q_HPP
#define MWF_EC_Q_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "mwf/ec_fp.hpp"
#include "mwf/fp.hpp"

/* Exact arithmetic on y^2 = x^3 + ax + b over Q with integral a, b: group
 * law, torsion tests, canonical heights, regulators, almost-free detection,
 * and reduction modulo good primes. */

namespace mwf {

struct CurveQ {
    mpz_class a, b;
    mpz_class disc; // -16(4a^3 + 27b^2), always nonzero

    CurveQ(mpz_class a_, mpz_class b_);

    bool operator==(const CurveQ& o) const { return a == o.a && b == o.b; }
};

struct RationalPoint {
    const CurveQ* curve; // not owned; must outlive the point
    bool inf;
    mpq_class x, y; // lowest terms, positive denominators

    static RationalPoint infinity(const CurveQ& E);
    /* Canonicalizes and validates the curve equation exactly. */
    static RationalPoint affine(const CurveQ& E, mpq_class x, mpq_class y);

    bool operator==(const RationalPoint& o) const {
        if (inf || o.inf)
            return inf == o.inf;
        return x == o.x && y == o.y;
    }
};

struct MWSubgroup {
    std::vector<RationalPoint> generators;
    explicit MWSubgroup(std::vector<RationalPoint> gens); // CurveMismatch
};

struct HeightOptions {
    double tol = 1e-8;
    int k_max = 10;
};

/* Canonical-height estimate.  `converged` false means k_max was reached
 * before successive estimates got within tol; the value and its honest
 * err_bound are still valid. */
struct HeightData {
    double hhat;
    double err_bound;
    int k_used;
    bool converged;
};

struct RegulatorData {
    double value;
    double err_bound;
    bool converged;
};

RationalPoint add_q(const RationalPoint& P, const RationalPoint& Q); // CurveMismatch
RationalPoint negate_q(const RationalPoint& P);
RationalPoint scalar_mul_q(int64_t n, const RationalPoint& P);

/* Order of P if torsion (Nagell-Lutz integrality shortcut, then multiples up
 * to the torsion bound 12 over Q), nullopt otherwise.  Exact. */
std::optional<int> is_torsion(const RationalPoint& P);

/* hhat = lim h(x(2^k P)) / 4^k with exact doubling; stops once successive
 * estimates differ by < tol or at k_max.  err_bound = last difference plus
 * 4^{-k} C, where C bounds |h(x(2P)) - 4 h(x(P))| over the whole curve. */
HeightData canonical_height(const RationalPoint& P, const HeightOptions& opt = {});

/* The constant C above, from |a| and |b| only. */
double height_difference_bound(const CurveQ& E);

/* det of the Gram matrix <P_i, P_j> = (hhat(P_i+P_j) - hhat(P_i) -
 * hhat(P_j))/2, with <P,P> = hhat(P).  Empty input gives 1. */
double regulator(const std::vector<RationalPoint>& pts, const HeightOptions& opt = {});
RegulatorData regulator_detail(const std::vector<RationalPoint>& pts,
                               const HeightOptions& opt = {});

/* True iff every point is non-torsion and the points are independent at the
 * given tolerance (regulator > reg_tol).  IndeterminateRank when the
 * regulator exceeds reg_tol but its error bound reaches back to 0, so
 * independence cannot be certified. */
bool is_almost_free(const std::vector<RationalPoint>& pts, double reg_tol = 1e-6,
                    const HeightOptions& opt = {});

/* Primes in [max(lo,5), hi] not dividing the discriminant. */
std::vector<PrimeModulus> good_primes(const CurveQ& E, uint64_t lo, uint64_t hi);

/* Reduction mod a good prime.  BadPrime if p | disc.  reduce_point requires
 * the reduced curve built by reduce_curve (the FpPoint refers to it). */
CurveFp reduce_curve(const CurveQ& E, PrimeModulus p);
FpPoint reduce_point(const RationalPoint& P, const CurveFp& Ep);

/* Text formats shared with the CLI: curve "a b"; point "x y" with rational
 * coordinates like "9/4 -21/8", or "inf". */
CurveQ parse_curve(const std::string& s);                            // ParseError
RationalPoint parse_point(const std::string& s, const CurveQ& E);    // ParseError, PointNotOnCurve
std::string format_curve(const CurveQ& E);
std::string format_point(const RationalPoint& P);

} // namespace mwf

#endif
