#ifndef MWF_ISOGENY_HPP
#define MWF_ISOGENY_HPP

#include <vector>

#include <gmpxx.h>

#include "mwf/ec_q.hpp"

/* Explicit isogenies over Q from rational kernels: Velu's construction for a
 * two-torsion point or a point of odd prime order, exact pushforward of
 * rational points, and the dual composition test (psi o phi = [2]). */

namespace mwf {

/* X(x) = x_num(x) / x_den(x), coefficients ascending.  The y-map needs no
 * separate data: Velu's normalization preserves the invariant differential,
 * so Y = y * dX/dx. */
struct RationalMaps {
    std::vector<mpq_class> x_num, x_den;
};

struct Isogeny {
    CurveQ domain, codomain;
    std::vector<mpq_class> kernel_x; // one entry per finite kernel point
    int degree;                      // = 1 + kernel_x.size()
    RationalMaps rational_maps;
};

/* Degree-2 isogeny with kernel (x0, 0).  NotTwoTorsion unless x0 is a root
 * of x^3 + ax + b. */
Isogeny velu_2isogeny(const CurveQ& E, const mpq_class& x0);

/* Odd-degree isogeny with kernel <T>; T must have exact odd prime order. */
Isogeny velu_odd_isogeny(const CurveQ& E, const RationalPoint& T);

/* Exact evaluation; kernel points (and Infinity) map to Infinity.  The result
 * refers to phi.codomain, so phi must outlive it.  DomainMismatch if P lies
 * on a different curve. */
RationalPoint pushforward(const Isogeny& phi, const RationalPoint& P);

/* For a 2-isogeny phi: E -> E', build the Velu 2-isogeny psi from E' at the
 * distinguished two-torsion x = -2 x0, map its codomain back onto E by the
 * unique rational scaling (x, y) -> (u^2 x, u^3 y), and test that the
 * composite sends each sample P to 2P or -2P.  NoIsomorphismFound when no
 * rational u matches the coefficients. */
bool dual_check(const Isogeny& phi, const std::vector<RationalPoint>& samples);

} // namespace mwf

#endif
