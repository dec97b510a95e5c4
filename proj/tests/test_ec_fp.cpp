#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "mwf/ec_fp.hpp"
#include "mwf/errors.hpp"
#include "test_util.hpp"

using namespace mwf;

namespace {

CurveFp make_curve(uint64_t p, uint64_t a, uint64_t b) {
    PrimeModulus m(p);
    return CurveFp(FpElement(a, m), FpElement(b, m));
}

CurveFp random_curve(Prng& rng, uint64_t p) {
    PrimeModulus m(p);
    for (;;) {
        FpElement a(rng.below(p), m), b(rng.below(p), m);
        FpElement d = FpElement(4, m) * a * a * a + FpElement(27, m) * b * b;
        if (d.value != 0)
            return CurveFp(a, b);
    }
}

FpPoint random_point(const CurveFp& E, Prng& rng) {
    uint64_t p = E.p.p;
    uint64_t x = rng.below(p);
    for (;;) {
        FpElement fx = FpElement(x, E.p);
        FpElement v = fx * fx * fx + E.a * fx + E.b;
        if (v.value == 0)
            return FpPoint::affine(E, fx, v);
        if (legendre(v) == 1) {
            auto roots = sqrt_mod(v);
            return FpPoint::affine(E, fx, roots[rng.next() & 1]);
        }
        x = (x + 1) % p;
    }
}

/* Brute-force closure of the given points under addition, by repeated
 * saturation over a plain vector (independent of the library's hash-set
 * breadth-first search). */
std::vector<FpPoint> closure_oracle(const std::vector<FpPoint>& gens) {
    std::vector<FpPoint> elems{FpPoint::infinity(*gens[0].curve)};
    auto contains = [](const std::vector<FpPoint>& v, const FpPoint& P) {
        for (const FpPoint& e : v)
            if (e == P)
                return true;
        return false;
    };
    for (size_t i = 0; i < elems.size(); i++)
        for (const FpPoint& g : gens) {
            FpPoint s = add_points(elems[i], g);
            if (!contains(elems, s))
                elems.push_back(s);
        }
    return elems;
}

int val_of(uint64_t n, uint64_t ell) {
    int v = 0;
    while (n % ell == 0) {
        n /= ell;
        v++;
    }
    return v;
}

} // namespace

TEST_CASE("curve construction validates the discriminant") {
    CHECK_NOTHROW(make_curve(5, 3, 0));
    CHECK_THROWS_AS(make_curve(5, 0, 0), Error); // 4a^3+27b^2 = 0
    CHECK_THROWS_AS(make_curve(7, 0, 7), Error); // b reduces to 0 mod 7
    CHECK_THROWS_AS(make_curve(3, 1, 1), Error); // p too small
}

TEST_CASE("point construction validates the equation") {
    CurveFp E = make_curve(5, 3, 0);
    CHECK_NOTHROW(FpPoint::affine(E, FpElement(4, E.p), FpElement(1, E.p)));
    CHECK_THROWS_AS(FpPoint::affine(E, FpElement(1, E.p), FpElement(1, E.p)), Error);
}

TEST_CASE("chord and tangent addition on y^2 = x^3 + 3x over F_5") {
    CurveFp E = make_curve(5, 3, 0);
    FpPoint P = FpPoint::affine(E, FpElement(4, E.p), FpElement(1, E.p));

    FpPoint D = add_points(P, P);
    REQUIRE(!D.inf);
    CHECK(D.x.value == 1);
    CHECK(D.y.value == 3);

    CHECK(add_points(P, negate(P)).inf);
    CHECK(add_points(P, FpPoint::infinity(E)) == P);
    CHECK(add_points(FpPoint::infinity(E), P) == P);
}

TEST_CASE("addition rejects mixed curves") {
    CurveFp E1 = make_curve(5, 3, 0);
    CurveFp E2 = make_curve(5, 1, 0);
    FpPoint P = FpPoint::affine(E1, FpElement(4, E1.p), FpElement(1, E1.p));
    CHECK_THROWS_AS(add_points(P, FpPoint::infinity(E2)), Error);
}

TEST_CASE("scalar multiplication basics") {
    CurveFp E = make_curve(5, 3, 0);
    FpPoint P = FpPoint::affine(E, FpElement(4, E.p), FpElement(1, E.p));

    CHECK(scalar_mul(0, P).inf);
    CHECK(scalar_mul(1, P) == P);
    CHECK(scalar_mul(-1, P) == negate(P));
    CHECK(scalar_mul(5, P).inf);
    CHECK(scalar_mul(4, P) == negate(P)); // 4P = -P on an order-5 point
    CHECK(scalar_mul(-2, P) == negate(scalar_mul(2, P)));
    /* INT64_MIN = -2^63 = 2 mod 5; exercises unsigned negation of the magnitude */
    CHECK(scalar_mul(INT64_MIN, P) == scalar_mul(2, P));
}

TEST_CASE("group law axioms on random triples") {
    Prng rng(0xEC61);
    int triples = 0;
    while (triples < 200) {
        uint64_t p = rng.random_prime(5, 1u << 20);
        CurveFp E = random_curve(rng, p);
        FpPoint P = random_point(E, rng);
        FpPoint Q = random_point(E, rng);
        FpPoint R = random_point(E, rng);

        CHECK(add_points(P, Q) == add_points(Q, P));
        CHECK(add_points(add_points(P, Q), R) == add_points(P, add_points(Q, R)));
        CHECK(add_points(P, negate(P)).inf);
        CHECK(add_points(P, FpPoint::infinity(E)) == P);
        triples++;
    }
}

TEST_CASE("point counts on the F_5 reference curves") {
    CHECK(count_points(make_curve(5, 3, 0)) == 10);
    CHECK(count_points(make_curve(5, 4, 1)) == 8); // y^2 = x^3 - x + 1
    CHECK(count_points(make_curve(5, 1, 0)) == 4);
}

TEST_CASE("order cache fills once and copies") {
    CurveFp E = make_curve(5, 3, 0);
    CHECK(E.order_cache.load() == 0);
    count_points(E);
    CHECK(E.order_cache.load() == 10);
    CurveFp F = E;
    CHECK(F.order_cache.load() == 10);
}

TEST_CASE("naive and BSGS counts agree on random small curves") {
    Prng rng(0xC0DE);
    for (int i = 0; i < 60; i++) {
        uint64_t p = rng.random_prime(5, 10000);
        CurveFp E = random_curve(rng, p);
        uint64_t naive = count_points_naive(E);
        uint64_t bsgs = count_points_bsgs(E);
        CAPTURE(p);
        CAPTURE(E.a.value);
        CAPTURE(E.b.value);
        CHECK(naive == bsgs);
    }
}

TEST_CASE("Hasse bound and Lagrange on larger curves") {
    Prng rng(0x4A55E);
    for (int i = 0; i < 25; i++) {
        uint64_t p = rng.random_prime(1u << 14, 1u << 22);
        CurveFp E = random_curve(rng, p);
        uint64_t N = count_points(E);
        long double diff = (long double)N - (long double)(p + 1);
        CHECK(diff * diff <= 4.0L * p);
        FpPoint P = random_point(E, rng);
        CHECK(scalar_mul((int64_t)N, P).inf);
    }
}

TEST_CASE("factorization") {
    using Fac = std::vector<std::pair<uint64_t, int>>;
    CHECK(factorize(1) == Fac{});
    CHECK(factorize(2) == Fac{{2, 1}});
    CHECK(factorize(1024) == Fac{{2, 10}});
    CHECK(factorize(600) == Fac{{2, 3}, {3, 1}, {5, 2}});
    CHECK(factorize(999983) == Fac{{999983, 1}});
    /* semiprime with both factors above the trial-division bound */
    CHECK(factorize(1000003ull * 1000033ull) == Fac{{1000003, 1}, {1000033, 1}});
    CHECK(factorize(1000003ull * 1000003ull) == Fac{{1000003, 2}});
    CHECK_THROWS_AS(factorize(0), Error);
}

TEST_CASE("point order") {
    CurveFp E = make_curve(5, 3, 0);
    FpPoint P = FpPoint::affine(E, FpElement(4, E.p), FpElement(1, E.p));
    std::vector<std::pair<uint64_t, int>> fac{{2, 1}, {5, 1}};

    CHECK(point_order(P, 10, fac) == 5);
    FpPoint T = FpPoint::affine(E, FpElement(0, E.p), FpElement(0, E.p));
    CHECK(point_order(T, 10, fac) == 2);
    CHECK(point_order(FpPoint::infinity(E), 10, fac) == 1);

    CHECK_THROWS_AS(point_order(P, 10, {{2, 1}, {3, 1}}), Error); // product 6 != 10
    CHECK_THROWS_AS(point_order(P, 4, {{2, 2}}), Error);          // 4P != infinity
}

TEST_CASE("point order against enumeration") {
    Prng rng(0x0D0);
    for (int i = 0; i < 40; i++) {
        uint64_t p = rng.random_prime(5, 3000);
        CurveFp E = random_curve(rng, p);
        uint64_t N = count_points(E);
        auto fac = factorize(N);
        FpPoint P = random_point(E, rng);
        uint64_t d = point_order(P, N, fac);
        FpPoint acc = FpPoint::infinity(E);
        for (uint64_t k = 1; k < d; k++) {
            acc = add_points(acc, P);
            CHECK(!acc.inf);
        }
        CHECK(add_points(acc, P).inf);
    }
}

TEST_CASE("Sylow projection") {
    CurveFp E = make_curve(5, 3, 0);
    FpPoint P = FpPoint::affine(E, FpElement(4, E.p), FpElement(1, E.p));

    FpPoint S5 = sylow_project(P, 10, 5); // multiplier 2
    REQUIRE(!S5.inf);
    CHECK(S5.x.value == 1);
    CHECK(S5.y.value == 3);

    CHECK(sylow_project(P, 10, 3).inf); // multiplier 10 annihilates
    CHECK(sylow_project(FpPoint::infinity(E), 10, 7).inf);
}

TEST_CASE("l-part statistics on the order-10 curve") {
    CurveFp E = make_curve(5, 3, 0);
    FpPoint P = FpPoint::affine(E, FpElement(4, E.p), FpElement(1, E.p));

    CHECK(generated_lpart_stats({P}, 5) == SubgroupLStats{5, 1, 1, 1});
    CHECK(generated_lpart_stats({P}, 3) == SubgroupLStats{3, 0, 0, 0});
    CHECK(generated_lpart_stats({FpPoint::infinity(E)}, 2) == SubgroupLStats{2, 0, 0, 0});
    CHECK(generated_lpart_stats({}, 3) == SubgroupLStats{3, 0, 0, 0});
    CHECK_THROWS_AS(generated_lpart_stats({P}, 4), Error); // 4 is not prime
}

TEST_CASE("closure cap is enforced") {
    /* y^2 = x^3 - x over F_5 has full 2-torsion: 2-part closure has size 8 */
    CurveFp E = make_curve(5, 4, 0);
    std::vector<FpPoint> gens;
    Prng rng(0xCA9);
    for (int i = 0; i < 6; i++)
        gens.push_back(random_point(E, rng));
    CHECK_THROWS_AS(generated_lpart_stats(gens, 2, 3), Error);
    CHECK_NOTHROW(generated_lpart_stats(gens, 2, 1 << 20));
}

TEST_CASE("l-part statistics against a brute-force oracle") {
    Prng rng(0x57A7575);
    const uint64_t ells[] = {2, 3, 5, 7};
    for (int i = 0; i < 100; i++) {
        uint64_t p = rng.random_prime(5, 600);
        CurveFp E = random_curve(rng, p);
        uint64_t N = count_points(E);
        auto fac = factorize(N);
        uint64_t ell = ells[rng.below(4)];

        std::vector<FpPoint> gens;
        size_t ngens = 1 + rng.below(3);
        for (size_t k = 0; k < ngens; k++)
            gens.push_back(random_point(E, rng));

        SubgroupLStats got = generated_lpart_stats(gens, ell);

        /* oracle: enumerate the full generated subgroup, then measure its
         * l-part size and exponent element by element */
        std::vector<FpPoint> sub = closure_oracle(gens);
        int nu = val_of(sub.size(), ell);
        int eps = 0;
        for (const FpPoint& Q : sub)
            eps = std::max(eps, val_of(point_order(Q, N, fac), ell));

        CAPTURE(p);
        CAPTURE(ell);
        CHECK(got.nu == nu);
        CHECK(got.eps == eps);
        CHECK(got.rad == (nu >= 1 ? 1 : 0));
        CHECK(got.eps <= got.nu);
        CHECK((got.nu >= 1) == (got.eps >= 1));
    }
}

TEST_CASE("group structure of the F_5 reference curves") {
    auto s1 = group_structure(make_curve(5, 3, 0));
    CHECK(s1.first == 1);
    CHECK(s1.second == 10);

    auto s2 = group_structure(make_curve(5, 4, 0)); // y^2 = x^3 - x, order 8
    CHECK(s2.first == 2);
    CHECK(s2.second == 4);
}

TEST_CASE("group structure on random curves multiplies out and divides p-1") {
    Prng rng(0x6057);
    for (int i = 0; i < 30; i++) {
        uint64_t p = rng.random_prime(5, 5000);
        CurveFp E = random_curve(rng, p);
        auto [n1, n2] = group_structure(E);
        CHECK(n1 * n2 == count_points(E));
        CHECK(n2 % n1 == 0);
        CHECK((p - 1) % n1 == 0);
        /* exponent check: n2 kills a random point */
        FpPoint P = random_point(E, rng);
        CHECK(scalar_mul((int64_t)n2, P).inf);
    }
}

TEST_CASE("degenerate order-1 group is rejected") {
    CurveFp E = make_curve(5, 3, 0);
    CHECK_THROWS_AS(group_structure_from_order(E, 1), Error);
}
