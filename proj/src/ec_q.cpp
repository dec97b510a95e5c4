#include "mwf/ec_q.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mwf/errors.hpp"

namespace mwf {

namespace {

double log_mpz(const mpz_class& z) {
    long e;
    double mant = mpz_get_d_2exp(&e, z.get_mpz_t());
    return std::log(std::fabs(mant)) + (double)e * std::log(2.0);
}

/* log max(|m|, d), the naive height of m/d in lowest terms */
double naive_height(const mpz_class& m, const mpz_class& d) {
    const mpz_class& big = (mpz_cmpabs(m.get_mpz_t(), d.get_mpz_t()) >= 0) ? m : d;
    return log_mpz(big);
}

/* Primes at which the duplication numerator and denominator can share a
 * factor.  Both are annihilated into 4(4a^3+27b^2) {d^7, m^7} by integer
 * Bezout cofactors, so the content divides 4(4a^3+27b^2); when that number
 * is too large to factor we fall back to a full gcd per step. */
struct StripPlan {
    std::vector<mpz_class> primes;
    bool complete = false;
};

StripPlan make_strip_plan(const CurveQ& E) {
    StripPlan plan;
    mpz_class core = 2 * abs(4 * E.a * E.a * E.a + 27 * E.b * E.b);
    if (core.fits_ulong_p()) {
        for (auto [q, e] : factorize(core.get_ui())) {
            (void)e;
            plan.primes.push_back(mpz_class((unsigned long)q));
        }
        plan.complete = true;
    }
    return plan;
}

/* One exact doubling step on x = m/d in lowest terms; returns lowest terms. */
void dup_step(const CurveQ& E, const StripPlan& plan, mpz_class& m, mpz_class& d) {
    mpz_class m2 = m * m, d2 = d * d;
    mpz_class F = m2 * m2 - 2 * E.a * m2 * d2 - 8 * E.b * m * d * d2
                  + E.a * E.a * d2 * d2;
    mpz_class G = 4 * d * (m2 * m + E.a * m * d2 + E.b * d * d2);

    if (plan.complete) {
        mpz_class Fs, Gs, back;
        for (const mpz_class& q : plan.primes) {
            mp_bitcnt_t vF = mpz_remove(Fs.get_mpz_t(), F.get_mpz_t(), q.get_mpz_t());
            if (vF == 0)
                continue;
            mp_bitcnt_t vG = mpz_remove(Gs.get_mpz_t(), G.get_mpz_t(), q.get_mpz_t());
            mp_bitcnt_t v = std::min(vF, vG);
            if (v == 0)
                continue;
            mpz_pow_ui(back.get_mpz_t(), q.get_mpz_t(), vF - v);
            F = Fs * back;
            mpz_pow_ui(back.get_mpz_t(), q.get_mpz_t(), vG - v);
            G = Gs * back;
        }
    } else {
        mpz_class g = gcd(F, G);
        if (g != 1) {
            F /= g;
            G /= g;
        }
    }
    if (G < 0) {
        F = -F;
        G = -G;
    }
    m = F;
    d = G;
}

void require_same_curve(const RationalPoint& P, const RationalPoint& Q) {
    if (!(*P.curve == *Q.curve))
        throw CurveMismatch("points on different curves");
}

mpq_class eval_curve_residual(const CurveQ& E, const mpq_class& x, const mpq_class& y) {
    return y * y - (x * x * x + mpq_class(E.a) * x + mpq_class(E.b));
}

mpq_class parse_rational(const std::string& tok) {
    mpq_class q;
    try {
        q = mpq_class(tok, 10);
    } catch (const std::invalid_argument&) {
        throw ParseError("bad rational: '" + tok + "'");
    }
    if (q.get_den() == 0)
        throw ParseError("zero denominator: '" + tok + "'");
    q.canonicalize();
    return q;
}

} // namespace

CurveQ::CurveQ(mpz_class a_, mpz_class b_) : a(std::move(a_)), b(std::move(b_)) {
    disc = -16 * (4 * a * a * a + 27 * b * b);
    if (disc == 0)
        throw SingularCurve("4a^3 + 27b^2 = 0");
}

RationalPoint RationalPoint::infinity(const CurveQ& E) {
    return RationalPoint{&E, true, mpq_class(0), mpq_class(0)};
}

RationalPoint RationalPoint::affine(const CurveQ& E, mpq_class x, mpq_class y) {
    x.canonicalize();
    y.canonicalize();
    mpq_class r = eval_curve_residual(E, x, y);
    if (r != 0)
        throw PointNotOnCurve("y^2 - x^3 - ax - b = " + r.get_str() + " at ("
                              + x.get_str() + ", " + y.get_str() + ")");
    return RationalPoint{&E, false, std::move(x), std::move(y)};
}

MWSubgroup::MWSubgroup(std::vector<RationalPoint> gens) : generators(std::move(gens)) {
    for (size_t i = 1; i < generators.size(); i++)
        require_same_curve(generators[0], generators[i]);
}

RationalPoint add_q(const RationalPoint& P, const RationalPoint& Q) {
    require_same_curve(P, Q);
    if (P.inf)
        return Q;
    if (Q.inf)
        return P;

    const CurveQ& E = *P.curve;
    mpq_class lam;
    if (P.x == Q.x) {
        if (P.y + Q.y == 0)
            return RationalPoint::infinity(E);
        lam = (3 * P.x * P.x + mpq_class(E.a)) / (2 * P.y);
    } else {
        lam = (Q.y - P.y) / (Q.x - P.x);
    }
    mpq_class x3 = lam * lam - P.x - Q.x;
    mpq_class y3 = lam * (P.x - x3) - P.y;
    return RationalPoint::affine(E, std::move(x3), std::move(y3));
}

RationalPoint negate_q(const RationalPoint& P) {
    if (P.inf)
        return P;
    return RationalPoint{P.curve, false, P.x, -P.y};
}

RationalPoint scalar_mul_q(int64_t n, const RationalPoint& P) {
    uint64_t mag = n < 0 ? uint64_t(0) - (uint64_t)n : (uint64_t)n;
    RationalPoint base = n < 0 ? negate_q(P) : P;
    RationalPoint acc = RationalPoint::infinity(*P.curve);
    while (mag) {
        if (mag & 1)
            acc = add_q(acc, base);
        mag >>= 1;
        if (mag)
            base = add_q(base, base);
    }
    return acc;
}

std::optional<int> is_torsion(const RationalPoint& P) {
    if (P.inf)
        return 1;
    /* Nagell-Lutz on the integral model: torsion points have integral x, y,
     * and so do their doubles */
    if (P.x.get_den() != 1 || P.y.get_den() != 1)
        return std::nullopt;
    RationalPoint D = add_q(P, P);
    if (!D.inf && (D.x.get_den() != 1 || D.y.get_den() != 1))
        return std::nullopt;
    /* exhaustive up to the rational torsion bound */
    RationalPoint R = P;
    for (int n = 2; n <= 12; n++) {
        R = add_q(R, P);
        if (R.inf)
            return n;
    }
    return std::nullopt;
}

double height_difference_bound(const CurveQ& E) {
    double A = std::fabs(mpz_get_d(E.a.get_mpz_t()));
    double B = std::fabs(mpz_get_d(E.b.get_mpz_t()));
    /* |F|, |G| <= C1 * max(|m|,d)^4 */
    double C1 = std::max(1 + 2 * A + 8 * B + A * A, 4 * (1 + A + B));
    /* Bezout cofactors annihilating (F, G) onto 4(4a^3+27b^2) d^7 resp. m^7:
     * l1 norms of {4(3x^2+4a), 3x^3-5ax-27b} and of the degree-3 pair for the
     * reversed polynomials */
    double Kd = 15 + 21 * A + 27 * B;
    double Km = 4 * ((4 * A * A * A + 27 * B * B) + A * A * B
                     + (3 * A * A * A * A + 22 * A * B * B)
                     + (3 * A * A * A * B + 24 * B * B * B))
                + (A * A * B + 5 * A * A * A * A + 32 * A * B * B
                   + 26 * A * A * A * B + 192 * B * B * B + 3 * A * A * A * A * A
                   + 24 * A * A * B * B);
    return std::log(std::max({C1, Kd, Km}));
}

HeightData canonical_height(const RationalPoint& P, const HeightOptions& opt) {
    if (P.inf || is_torsion(P))
        return {0.0, 0.0, 0, true};

    const CurveQ& E = *P.curve;
    StripPlan plan = make_strip_plan(E);
    double C = height_difference_bound(E);

    mpz_class m = P.x.get_num(), d = P.x.get_den();
    double est = naive_height(m, d);
    double scale = 1.0;
    double diff = 0.0;
    for (int k = 1; k <= opt.k_max; k++) {
        dup_step(E, plan, m, d);
        scale *= 0.25;
        double next = naive_height(m, d) * scale;
        diff = std::fabs(next - est);
        est = next;
        if (diff < opt.tol)
            return {est, diff + C * scale, k, true};
    }
    return {est, diff + C * std::pow(0.25, opt.k_max), opt.k_max, false};
}

RegulatorData regulator_detail(const std::vector<RationalPoint>& pts,
                               const HeightOptions& opt) {
    size_t r = pts.size();
    if (r == 0)
        return {1.0, 0.0, true};
    for (size_t i = 1; i < r; i++)
        require_same_curve(pts[0], pts[i]);

    std::vector<std::vector<double>> g(r, std::vector<double>(r));
    std::vector<std::vector<double>> ge(r, std::vector<double>(r));
    std::vector<HeightData> h(r);
    bool converged = true;
    for (size_t i = 0; i < r; i++) {
        h[i] = canonical_height(pts[i], opt);
        converged = converged && h[i].converged;
        /* <P,P> = hhat(P) exactly; avoids the taller 2P chain */
        g[i][i] = h[i].hhat;
        ge[i][i] = h[i].err_bound;
    }
    for (size_t i = 0; i < r; i++)
        for (size_t j = i + 1; j < r; j++) {
            HeightData s = canonical_height(add_q(pts[i], pts[j]), opt);
            converged = converged && s.converged;
            g[i][j] = g[j][i] = (s.hhat - h[i].hhat - h[j].hhat) / 2;
            ge[i][j] = ge[j][i] = (s.err_bound + h[i].err_bound + h[j].err_bound) / 2;
        }

    double M = 0, delta = 0;
    for (size_t i = 0; i < r; i++)
        for (size_t j = 0; j < r; j++) {
            M = std::max(M, std::fabs(g[i][j]));
            delta = std::max(delta, ge[i][j]);
        }

    /* LU determinant with partial pivoting */
    double det = 1.0;
    for (size_t c = 0; c < r; c++) {
        size_t piv = c;
        for (size_t i = c + 1; i < r; i++)
            if (std::fabs(g[i][c]) > std::fabs(g[piv][c]))
                piv = i;
        if (g[piv][c] == 0.0) {
            det = 0.0;
            break;
        }
        if (piv != c) {
            std::swap(g[piv], g[c]);
            det = -det;
        }
        det *= g[c][c];
        for (size_t i = c + 1; i < r; i++) {
            double f = g[i][c] / g[c][c];
            for (size_t j = c; j < r; j++)
                g[i][j] -= f * g[c][j];
        }
    }

    /* |det(G + Delta) - det(G)| <= r! ((M+delta)^r - M^r) for |Delta| <= delta */
    double rf = 1;
    for (size_t i = 2; i <= r; i++)
        rf *= (double)i;
    double err = rf * (std::pow(M + delta, (double)r) - std::pow(M, (double)r));
    return {det, err, converged};
}

double regulator(const std::vector<RationalPoint>& pts, const HeightOptions& opt) {
    return regulator_detail(pts, opt).value;
}

bool is_almost_free(const std::vector<RationalPoint>& pts, double reg_tol,
                    const HeightOptions& opt) {
    for (const RationalPoint& P : pts)
        if (is_torsion(P))
            return false;
    RegulatorData rd = regulator_detail(pts, opt);
    if (rd.value <= reg_tol)
        return false;
    if (rd.value - rd.err_bound <= 0)
        throw IndeterminateRank(
            "regulator exceeds reg_tol but is within its error bound of 0");
    return true;
}

std::vector<PrimeModulus> good_primes(const CurveQ& E, uint64_t lo, uint64_t hi) {
    lo = std::max<uint64_t>(lo, 5);
    std::vector<PrimeModulus> out;
    if (lo > hi)
        return out;
    for (uint64_t p : primes_in_range(lo, hi))
        if (!mpz_divisible_ui_p(E.disc.get_mpz_t(), p))
            out.push_back(PrimeModulus::trusted(p));
    return out;
}

CurveFp reduce_curve(const CurveQ& E, PrimeModulus p) {
    if (mpz_divisible_ui_p(E.disc.get_mpz_t(), p.p))
        throw BadPrime("prime divides the discriminant");
    uint64_t ap = mpz_fdiv_ui(E.a.get_mpz_t(), p.p);
    uint64_t bp = mpz_fdiv_ui(E.b.get_mpz_t(), p.p);
    return CurveFp(FpElement(ap, p), FpElement(bp, p));
}

FpPoint reduce_point(const RationalPoint& P, const CurveFp& Ep) {
    const CurveQ& E = *P.curve;
    uint64_t p = Ep.p.p;
    if (mpz_divisible_ui_p(E.disc.get_mpz_t(), p))
        throw BadPrime("prime divides the discriminant");
    if (Ep.a.value != mpz_fdiv_ui(E.a.get_mpz_t(), p)
        || Ep.b.value != mpz_fdiv_ui(E.b.get_mpz_t(), p))
        throw CurveMismatch("target curve is not the mod-p reduction");

    if (P.inf)
        return FpPoint::infinity(Ep);
    /* at good primes, p | den(x) iff p | den(y) iff P reduces to the origin */
    if (mpz_divisible_ui_p(P.x.get_den().get_mpz_t(), p)
        || mpz_divisible_ui_p(P.y.get_den().get_mpz_t(), p))
        return FpPoint::infinity(Ep);

    auto red = [&](const mpq_class& q) {
        FpElement num(mpz_fdiv_ui(q.get_num().get_mpz_t(), p), Ep.p);
        FpElement den(mpz_fdiv_ui(q.get_den().get_mpz_t(), p), Ep.p);
        return num * mod_inverse(den);
    };
    return FpPoint::affine(Ep, red(P.x), red(P.y));
}

CurveQ parse_curve(const std::string& s) {
    std::istringstream in(s);
    std::string ta, tb, extra;
    if (!(in >> ta >> tb) || (in >> extra))
        throw ParseError("curve must be two integers 'a b'");
    try {
        return CurveQ(mpz_class(ta, 10), mpz_class(tb, 10));
    } catch (const std::invalid_argument&) {
        throw ParseError("bad integer in curve '" + s + "'");
    }
}

RationalPoint parse_point(const std::string& s, const CurveQ& E) {
    std::istringstream in(s);
    std::string tx, ty, extra;
    if (!(in >> tx))
        throw ParseError("empty point");
    if (tx == "inf") {
        if (in >> extra)
            throw ParseError("trailing input after 'inf'");
        return RationalPoint::infinity(E);
    }
    if (!(in >> ty) || (in >> extra))
        throw ParseError("point must be 'x y' rationals or 'inf'");
    return RationalPoint::affine(E, parse_rational(tx), parse_rational(ty));
}

std::string format_curve(const CurveQ& E) {
    return E.a.get_str() + " " + E.b.get_str();
}

std::string format_point(const RationalPoint& P) {
    if (P.inf)
        return "inf";
    return P.x.get_str() + " " + P.y.get_str();
}

} // namespace mwf
