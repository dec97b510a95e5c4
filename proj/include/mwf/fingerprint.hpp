#ifndef MWF_FINGERPRINT_HPP
#define MWF_FINGERPRINT_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mwf/ec_fp.hpp"
#include "mwf/ec_q.hpp"
#include "mwf/isogeny.hpp"

/* The experiment harness: per-prime sweeps of the l-part statistics
 * (nu, eps, rad) of reduced subgroups, pointwise comparison of the three
 * inequalities between two curves, isogeny-invariance checks, product-group
 * sweeps, and density estimation for the sets { p : eps_l(p) = m }. */

namespace mwf {

/* Witness lists and demo prime lists are truncated here; totals are kept. */
inline constexpr uint64_t kWitnessCap = 10000;

struct SweepOptions {
    int threads = 1;
    size_t closure_cap = size_t(1) << 20;
};

struct SweepRow {
    uint64_t p;
    SubgroupLStats stats;
};

/* A good prime whose row failed (closure budget, ambiguous order, ...);
 * excluded from rows and from all verdicts, but accounted for. */
struct SweepFlag {
    uint64_t p;
    std::string code;
    std::string message;
};

struct SweepReport {
    std::vector<std::string> curves;                  // "a b" per component
    std::vector<std::vector<std::string>> generators; // point tuple per generator
    uint64_t ell = 0;
    uint64_t lo = 0, hi = 0;
    std::vector<SweepRow> rows;   // ascending in p; every unflagged good prime once
    std::vector<SweepFlag> flags; // ascending in p
};

struct Witness {
    uint64_t p;
    int lhs, rhs;
};

/* Pointwise verdict for one of the three inequalities (condition 2 = order,
 * 3 = exponent, 4 = radical): lhs is the first report's statistic.
 * witnesses hold lhs > rhs violations, reverse_witnesses the swapped ones. */
struct ComparisonVerdict {
    int condition;
    bool holds_on_window; // witness_total == 0
    std::vector<Witness> witnesses;
    uint64_t witness_total = 0;
    std::vector<Witness> reverse_witnesses;
    uint64_t reverse_total = 0;
    uint64_t compared = 0; // common unflagged primes
    uint64_t flagged = 0;  // rows excluded because either side flagged
};

/* Count good primes p <= bound with eps_l(points[i] mod p) = targets[i] for
 * every i.  The proposition behind this wants the points almost free; other
 * inputs are accepted and produce a warning instead of an error. */
struct DensityQuery {
    std::vector<RationalPoint> points;
    std::vector<int> targets;
    uint64_t ell = 0;
    uint64_t bound = 0;
};

struct DensityEstimate {
    uint64_t hits = 0, total = 0;
    double fraction = 0;
    double wilson_lo = 0, wilson_hi = 0; // 95% score interval
    std::vector<std::string> warnings;
};

/* Primes realizing eps_l(Gamma mod p) >= m while eps_l(Gamma' mod p) = 0,
 * for m = 1 and m = 2: the refutation witnesses for a non-isogenous pair.
 * Empty lists are legitimate output (isogenous pairs produce none). */
struct TheoremDemo {
    uint64_t ell = 0;
    uint64_t lo = 0, hi = 0;
    std::vector<uint64_t> primes_m1, primes_m2; // ascending, capped
    uint64_t total_m1 = 0, total_m2 = 0;
};

/* One row per good prime of E in [lo, hi]: reduce the generators and take
 * the stats of the subgroup they generate.  Per-row errors flag the row and
 * the sweep continues.  Output is deterministic and ordered by p for any
 * thread count. */
SweepReport sweep(const CurveQ& E, const MWSubgroup& gamma, uint64_t ell, uint64_t lo,
                  uint64_t hi, const SweepOptions& opt = {});

/* Same over the product group E_1(F_p) x ... x E_k(F_p) with componentwise
 * addition; generators are tuples, primes must be good for every component. */
SweepReport product_sweep(const std::vector<CurveQ>& curves,
                          const std::vector<std::vector<RationalPoint>>& gen_tuples,
                          uint64_t ell, uint64_t lo, uint64_t hi,
                          const SweepOptions& opt = {});

/* Pointwise inequality check on the common primes of two reports (same ell).
 * EmptyOverlap if they share no primes. */
ComparisonVerdict compare(const SweepReport& a, const SweepReport& b, int condition);

/* Sweeps gamma on E and its pushforward on the codomain of iota, then
 * compares all three statistics; for ell coprime to deg(iota) they must
 * agree exactly, so equality means empty witness lists in both directions
 * of all three verdicts (conditions 2, 3, 4 in order). */
std::array<ComparisonVerdict, 3> isogeny_invariance_check(const CurveQ& E,
                                                          const MWSubgroup& gamma,
                                                          const Isogeny& iota, uint64_t ell,
                                                          uint64_t lo, uint64_t hi,
                                                          const SweepOptions& opt = {});

/* One-sided check of nu <= nu', eps <= eps', rad <= rad' for Gamma on the
 * domain of phi against Gamma' on its codomain, valid for ell coprime to
 * i * deg(phi) where i = [phi(Gamma) : phi(Gamma) cap Gamma'].  Supported
 * index patterns: the pushed-forward generators match Gamma' up to sign and
 * order (i = 1), or Gamma' sits inside phi(Gamma) with prime-power index
 * read off the regulator ratio (reg(Gamma') = i^2 reg(phi(Gamma))).
 * Anything else is IndexNotComputable; ell | i * deg gives EllDividesDegree. */
std::array<ComparisonVerdict, 3> lemma_isogenous_check(const Isogeny& phi,
                                                       const MWSubgroup& gamma,
                                                       const MWSubgroup& gamma_prime,
                                                       uint64_t ell, uint64_t lo, uint64_t hi,
                                                       const SweepOptions& opt = {});

/* EmptyWindow when no good prime lies below the bound. */
DensityEstimate estimate_density(const DensityQuery& q);

TheoremDemo theorem_demo(const CurveQ& E, const MWSubgroup& gamma, const CurveQ& Eprime,
                         const MWSubgroup& gamma_prime, uint64_t ell, uint64_t lo,
                         uint64_t hi, const SweepOptions& opt = {});

/* CSV with header "p,nu,eps,rad"; flags are JSON-only. */
std::string report_csv(const SweepReport& r);
/* JSON object {curve, generators, ell, range, rows, flags}. */
std::string report_json(const SweepReport& r);

} // namespace mwf

#endif
