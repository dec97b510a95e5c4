#include "mwf/isogeny.hpp"

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "mwf/errors.hpp"

namespace mwf {

namespace {

/* Dense polynomials over Q, coefficients ascending.  Everything here stays
 * tiny (degree <= 2 * kernel size), so no attempt at asymptotics. */
using Poly = std::vector<mpq_class>;

Poly poly_mul(const Poly& A, const Poly& B) {
    Poly C(A.size() + B.size() - 1, mpq_class(0));
    for (size_t i = 0; i < A.size(); ++i)
        for (size_t j = 0; j < B.size(); ++j)
            C[i + j] += A[i] * B[j];
    return C;
}

void poly_acc(Poly& A, const Poly& B, const mpq_class& c) {
    if (A.size() < B.size())
        A.resize(B.size(), mpq_class(0));
    for (size_t i = 0; i < B.size(); ++i)
        A[i] += c * B[i];
}

Poly poly_deriv(const Poly& A) {
    if (A.size() <= 1)
        return Poly{mpq_class(0)};
    Poly D(A.size() - 1);
    for (size_t i = 1; i < A.size(); ++i)
        D[i - 1] = mpq_class((long)i) * A[i];
    return D;
}

mpq_class poly_eval(const Poly& A, const mpq_class& x) {
    mpq_class v(0);
    for (size_t i = A.size(); i-- > 0;)
        v = v * x + A[i];
    return v;
}

mpz_class as_integer(const mpq_class& q, const char* what) {
    if (q.get_den() != 1)
        throw std::logic_error(std::string(what) + " is not integral");
    return q.get_num();
}

std::string rat_str(const mpq_class& q) {
    std::ostringstream os;
    os << q;
    return os.str();
}

/* Positive rational u with u^n = v, if one exists. */
bool exact_root(const mpq_class& v, unsigned long n, mpq_class& u) {
    if (v <= 0)
        return false;
    mpz_class rn, rd;
    if (!mpz_root(rn.get_mpz_t(), v.get_num().get_mpz_t(), n))
        return false;
    if (!mpz_root(rd.get_mpz_t(), v.get_den().get_mpz_t(), n))
        return false;
    u = mpq_class(rn) / mpq_class(rd);
    return true;
}

/* The scaling (x, y) -> (u^2 x, u^3 y) carries y^2 = x^3 + a2 x + b2 onto
 * y^2 = x^3 + a1 x + b1 exactly when a1 = u^4 a2 and b1 = u^6 b2.  Over Q
 * every short-Weierstrass isomorphism has this shape, and u is determined
 * up to sign, so root extraction is a complete search. */
mpq_class find_scaling(const mpz_class& a2, const mpz_class& b2, const mpz_class& a1,
                       const mpz_class& b1) {
    mpq_class u;
    bool ok = false;
    if (a2 == 0)
        ok = (a1 == 0) && exact_root(mpq_class(b1) / mpq_class(b2), 6, u);
    else if (b2 == 0)
        ok = (b1 == 0) && exact_root(mpq_class(a1) / mpq_class(a2), 4, u);
    else if (a1 != 0 && b1 != 0)
        ok = exact_root((mpq_class(b1) * mpq_class(a2)) / (mpq_class(b2) * mpq_class(a1)),
                        2, u);
    mpq_class u2 = u * u, u4 = u2 * u2;
    if (!ok || mpq_class(a1) != u4 * mpq_class(a2) || mpq_class(b1) != u4 * u2 * mpq_class(b2)
        || abs(u.get_num()) > 1000 || u.get_den() > 1000)
        throw NoIsomorphismFound("no rational scaling maps y^2 = x^3 + " + a2.get_str()
                                 + "x + " + b2.get_str() + " onto y^2 = x^3 + "
                                 + a1.get_str() + "x + " + b1.get_str());
    return u;
}

bool is_odd_prime(int n) {
    if (n < 3 || n % 2 == 0)
        return false;
    for (int d = 3; d * d <= n; d += 2)
        if (n % d == 0)
            return false;
    return true;
}

} // namespace

Isogeny velu_2isogeny(const CurveQ& E, const mpq_class& x0) {
    mpq_class xr = x0;
    xr.canonicalize();
    /* Rational roots of the monic integral cubic are integers. */
    if (xr.get_den() != 1
        || xr * xr * xr + mpq_class(E.a) * xr + mpq_class(E.b) != 0)
        throw NotTwoTorsion("(" + rat_str(xr) + ", 0) is not on the curve");
    mpz_class x0i = xr.get_num();
    mpz_class t = 3 * x0i * x0i + E.a;
    mpz_class w = x0i * t;

    Isogeny phi{E, CurveQ(E.a - 5 * t, E.b - 7 * w), {mpq_class(x0i)}, 2, {}};
    phi.rational_maps.x_num = {mpq_class(t), mpq_class(-x0i), mpq_class(1)};
    phi.rational_maps.x_den = {mpq_class(-x0i), mpq_class(1)};
    return phi;
}

Isogeny velu_odd_isogeny(const CurveQ& E, const RationalPoint& T) {
    if (!(*T.curve == E))
        throw DomainMismatch("kernel generator lies on a different curve");
    auto ord = is_torsion(T);
    if (!ord)
        throw NotOddTorsion("kernel generator has infinite order");
    int ell = *ord;
    if (!is_odd_prime(ell))
        throw NotOddTorsion("kernel generator has order " + std::to_string(ell)
                            + ", not an odd prime");

    /* iT for i = 1..ell-1; torsion coordinates are integral (Nagell-Lutz),
     * which keeps the codomain model integral. */
    std::vector<RationalPoint> kernel;
    kernel.push_back(T);
    for (int i = 2; i < ell; ++i)
        kernel.push_back(add_q(kernel.back(), T));

    /* One representative per {Q, -Q} pair; x(-Q) = x(Q), so each term below
     * accounts for both points. */
    int reps = (ell - 1) / 2;
    mpq_class a(E.a), b(E.b);
    mpq_class t(0), w(0);
    std::vector<Poly> lin; // x - x_i
    for (int i = 0; i < reps; ++i) {
        const mpq_class& xi = kernel[(size_t)i].x;
        const mpq_class& yi = kernel[(size_t)i].y;
        mpq_class v = 6 * xi * xi + 2 * a;
        mpq_class u = 4 * yi * yi;
        t += v;
        w += u + xi * v;
        lin.push_back(Poly{-xi, mpq_class(1)});
    }
    CurveQ image(as_integer(a - 5 * t, "codomain a"), as_integer(b - 7 * w, "codomain b"));

    /* X = x + sum_i [ v_i/(x - x_i) + u_i/(x - x_i)^2 ] over the common
     * denominator D = prod (x - x_i)^2. */
    Poly D{mpq_class(1)};
    for (int i = 0; i < reps; ++i)
        D = poly_mul(D, poly_mul(lin[(size_t)i], lin[(size_t)i]));
    Poly N = poly_mul(D, Poly{mpq_class(0), mpq_class(1)});
    for (int i = 0; i < reps; ++i) {
        Poly rest{mpq_class(1)};
        for (int j = 0; j < reps; ++j)
            if (j != i)
                rest = poly_mul(rest, poly_mul(lin[(size_t)j], lin[(size_t)j]));
        const mpq_class& xi = kernel[(size_t)i].x;
        const mpq_class& yi = kernel[(size_t)i].y;
        poly_acc(N, poly_mul(rest, lin[(size_t)i]), 6 * xi * xi + 2 * a);
        poly_acc(N, rest, 4 * yi * yi);
    }

    Isogeny phi{E, std::move(image), {}, ell, {std::move(N), std::move(D)}};
    for (const RationalPoint& Q : kernel)
        phi.kernel_x.push_back(Q.x);
    return phi;
}

RationalPoint pushforward(const Isogeny& phi, const RationalPoint& P) {
    if (!(*P.curve == phi.domain))
        throw DomainMismatch("point lies on a different curve");
    if (P.inf)
        return RationalPoint::infinity(phi.codomain);
    for (const mpq_class& xq : phi.kernel_x)
        if (P.x == xq)
            return RationalPoint::infinity(phi.codomain);

    /* x_den vanishes only at kernel abscissas, which were handled above. */
    const Poly& N = phi.rational_maps.x_num;
    const Poly& D = phi.rational_maps.x_den;
    mpq_class nv = poly_eval(N, P.x);
    mpq_class dv = poly_eval(D, P.x);
    mpq_class X = nv / dv;
    /* Velu's maps preserve dx/y, so Y = y * X'(x). */
    mpq_class dX = (poly_eval(poly_deriv(N), P.x) * dv - nv * poly_eval(poly_deriv(D), P.x))
                   / (dv * dv);
    return RationalPoint::affine(phi.codomain, X, P.y * dX);
}

bool dual_check(const Isogeny& phi, const std::vector<RationalPoint>& samples) {
    if (phi.degree != 2 || phi.kernel_x.size() != 1)
        throw NotTwoTorsion("dual construction needs a 2-isogeny");

    /* x = -2 x0 is a root of the codomain cubic whenever x0 is one of the
     * domain cubic, so this kernel always exists. */
    Isogeny psi = velu_2isogeny(phi.codomain, mpq_class(-2) * phi.kernel_x[0]);
    mpq_class u = find_scaling(psi.codomain.a, psi.codomain.b, phi.domain.a, phi.domain.b);
    mpq_class u2 = u * u, u3 = u2 * u;

    for (const RationalPoint& P : samples) {
        if (!(*P.curve == phi.domain))
            throw DomainMismatch("sample lies on a different curve");
        RationalPoint comp = pushforward(psi, pushforward(phi, P));
        RationalPoint back = comp.inf
            ? RationalPoint::infinity(phi.domain)
            : RationalPoint::affine(phi.domain, u2 * comp.x, u3 * comp.y);
        RationalPoint twoP = scalar_mul_q(2, P);
        if (!(back == twoP || back == negate_q(twoP)))
            return false;
    }
    return true;
}

} // namespace mwf
