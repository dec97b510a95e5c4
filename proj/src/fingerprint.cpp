#include "mwf/fingerprint.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>
#include <utility>

#include <json.hpp>

#include "mwf/errors.hpp"

namespace mwf {

namespace {

int val_of(uint64_t ell, uint64_t n) {
    int v = 0;
    while (n != 0 && n % ell == 0) {
        n /= ell;
        ++v;
    }
    return v;
}

uint64_t lcm_u64(uint64_t a, uint64_t b) {
    return a / std::gcd(a, b) * b;
}

void require_prime_ell(uint64_t ell) {
    if (ell < 2 || !is_prime_u64(ell))
        throw BadFactorization("ell = " + std::to_string(ell) + " is not prime");
}

/* Static scheduling keeps per-index work deterministic; an atomic cursor
 * balances the load.  Rows trap their own domain errors, so anything that
 * escapes fn is a bug and is rethrown after the join. */
void parallel_for(size_t n, int threads, const std::function<void(size_t)>& fn) {
    int t = std::max(1, threads);
    if (t == 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<size_t> cursor{0};
    std::exception_ptr first_error;
    std::mutex mu;
    auto work = [&] {
        for (;;) {
            size_t i = cursor.fetch_add(1);
            if (i >= n)
                return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!first_error)
                    first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int k = 1; k < t; ++k)
        pool.emplace_back(work);
    work();
    for (std::thread& th : pool)
        th.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

struct RowCell {
    bool ok = false;
    SweepRow row{};
    SweepFlag flag{};
};

void assemble(SweepReport& rep, std::vector<RowCell>& cells) {
    for (RowCell& c : cells) {
        if (c.ok)
            rep.rows.push_back(c.row);
        else
            rep.flags.push_back(std::move(c.flag));
    }
}

int pick_stat(const SubgroupLStats& s, int condition) {
    switch (condition) {
    case 2:
        return s.nu;
    case 3:
        return s.eps;
    case 4:
        return s.rad;
    default:
        throw std::invalid_argument("condition must be 2, 3 or 4");
    }
}

std::pair<double, double> wilson95(uint64_t hits, uint64_t total) {
    const double z = 1.96;
    double n = (double)total;
    double ph = (double)hits / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (ph + z2 / (2.0 * n)) / denom;
    double half = z * std::sqrt(ph * (1.0 - ph) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

/* Tuples over the product group, keyed by the component point keys
 * ((p, p) marks infinity, as x = p is out of range). */
using TupleKey = std::vector<std::pair<uint64_t, uint64_t>>;

TupleKey key_of(const std::vector<FpPoint>& tuple) {
    TupleKey k;
    k.reserve(tuple.size());
    for (const FpPoint& P : tuple) {
        uint64_t p = P.curve->p.p;
        if (P.inf)
            k.emplace_back(p, p);
        else
            k.emplace_back(P.x.value, P.y.value);
    }
    return k;
}

std::vector<FpPoint> tuple_add(const std::vector<FpPoint>& a, const std::vector<FpPoint>& b) {
    std::vector<FpPoint> s;
    s.reserve(a.size());
    for (size_t j = 0; j < a.size(); ++j)
        s.push_back(add_points(a[j], b[j]));
    return s;
}

/* nu of the product subgroup: closure of the Sylow-projected generator
 * tuples under componentwise addition. */
int product_nu(const std::vector<std::vector<FpPoint>>& proj_gens,
               const std::vector<CurveFp>& curves, uint64_t ell, size_t closure_cap) {
    std::vector<FpPoint> id;
    id.reserve(curves.size());
    for (const CurveFp& E : curves)
        id.push_back(FpPoint::infinity(E));

    std::set<TupleKey> seen{key_of(id)};
    std::vector<std::vector<FpPoint>> frontier{id};
    while (!frontier.empty()) {
        std::vector<std::vector<FpPoint>> next;
        for (const auto& T : frontier) {
            for (const auto& g : proj_gens) {
                std::vector<FpPoint> S = tuple_add(T, g);
                if (seen.insert(key_of(S)).second) {
                    if (seen.size() > closure_cap)
                        throw ClosureBudgetExceeded("product closure exceeded "
                                                    + std::to_string(closure_cap));
                    next.push_back(std::move(S));
                }
            }
        }
        frontier = std::move(next);
    }

    uint64_t size = seen.size();
    int nu = val_of(ell, size);
    uint64_t back = 1;
    for (int i = 0; i < nu; ++i)
        back *= ell;
    if (back != size)
        throw std::logic_error("product closure size is not an ell power");
    return nu;
}

} // namespace

SweepReport sweep(const CurveQ& E, const MWSubgroup& gamma, uint64_t ell, uint64_t lo,
                  uint64_t hi, const SweepOptions& opt) {
    require_prime_ell(ell);
    for (const RationalPoint& g : gamma.generators)
        if (!(*g.curve == E))
            throw CurveMismatch("generator lies on a different curve");

    SweepReport rep;
    rep.curves.push_back(format_curve(E));
    for (const RationalPoint& g : gamma.generators)
        rep.generators.push_back({format_point(g)});
    rep.ell = ell;
    rep.lo = lo;
    rep.hi = hi;

    std::vector<PrimeModulus> primes = good_primes(E, lo, hi);
    std::vector<RowCell> cells(primes.size());
    parallel_for(primes.size(), opt.threads, [&](size_t i) {
        uint64_t p = primes[i].p;
        try {
            CurveFp Ep = reduce_curve(E, primes[i]);
            std::vector<FpPoint> rgens;
            rgens.reserve(gamma.generators.size());
            for (const RationalPoint& g : gamma.generators)
                rgens.push_back(reduce_point(g, Ep));
            cells[i].row = {p, generated_lpart_stats(rgens, ell, opt.closure_cap)};
            cells[i].ok = true;
        } catch (const Error& e) {
            cells[i].flag = {p, e.code(), e.what()};
        }
    });
    assemble(rep, cells);
    return rep;
}

SweepReport product_sweep(const std::vector<CurveQ>& curves,
                          const std::vector<std::vector<RationalPoint>>& gen_tuples,
                          uint64_t ell, uint64_t lo, uint64_t hi, const SweepOptions& opt) {
    require_prime_ell(ell);
    if (curves.empty())
        throw std::invalid_argument("product over zero curves");
    for (const auto& tuple : gen_tuples) {
        if (tuple.size() != curves.size())
            throw CurveMismatch("generator tuple arity does not match the curve list");
        for (size_t j = 0; j < tuple.size(); ++j)
            if (!(*tuple[j].curve == curves[j]))
                throw CurveMismatch("tuple component lies on a different curve");
    }

    SweepReport rep;
    for (const CurveQ& E : curves)
        rep.curves.push_back(format_curve(E));
    for (const auto& tuple : gen_tuples) {
        std::vector<std::string> t;
        for (const RationalPoint& P : tuple)
            t.push_back(format_point(P));
        rep.generators.push_back(std::move(t));
    }
    rep.ell = ell;
    rep.lo = lo;
    rep.hi = hi;

    std::vector<PrimeModulus> primes;
    for (PrimeModulus p : good_primes(curves[0], lo, hi)) {
        bool good = true;
        for (size_t j = 1; j < curves.size() && good; ++j)
            good = !mpz_divisible_ui_p(curves[j].disc.get_mpz_t(), p.p);
        if (good)
            primes.push_back(p);
    }

    std::vector<RowCell> cells(primes.size());
    parallel_for(primes.size(), opt.threads, [&](size_t i) {
        uint64_t p = primes[i].p;
        try {
            std::vector<CurveFp> eps_curves;
            eps_curves.reserve(curves.size());
            for (const CurveQ& E : curves)
                eps_curves.push_back(reduce_curve(E, primes[i]));
            std::vector<uint64_t> orders(curves.size());
            std::vector<std::vector<std::pair<uint64_t, int>>> facs(curves.size());
            for (size_t j = 0; j < curves.size(); ++j) {
                orders[j] = count_points(eps_curves[j]);
                facs[j] = factorize(orders[j]);
            }

            int eps = 0;
            std::vector<std::vector<FpPoint>> proj;
            proj.reserve(gen_tuples.size());
            for (const auto& tuple : gen_tuples) {
                uint64_t tuple_order = 1;
                std::vector<FpPoint> pr;
                pr.reserve(tuple.size());
                for (size_t j = 0; j < tuple.size(); ++j) {
                    FpPoint rp = reduce_point(tuple[j], eps_curves[j]);
                    tuple_order = lcm_u64(tuple_order, point_order(rp, orders[j], facs[j]));
                    pr.push_back(sylow_project(rp, orders[j], ell));
                }
                eps = std::max(eps, val_of(ell, tuple_order));
                proj.push_back(std::move(pr));
            }

            int nu = product_nu(proj, eps_curves, ell, opt.closure_cap);
            if ((eps > 0) != (nu > 0))
                throw std::logic_error("product eps/nu disagree on triviality");
            cells[i].row = {p, SubgroupLStats{ell, nu, eps, nu > 0 ? 1 : 0}};
            cells[i].ok = true;
        } catch (const Error& e) {
            cells[i].flag = {p, e.code(), e.what()};
        }
    });
    assemble(rep, cells);
    return rep;
}

ComparisonVerdict compare(const SweepReport& a, const SweepReport& b, int condition) {
    if (a.ell != b.ell)
        throw DomainMismatch("reports computed for different ell");

    ComparisonVerdict v;
    v.condition = condition;

    size_t i = 0, j = 0;
    while (i < a.rows.size() && j < b.rows.size()) {
        uint64_t pa = a.rows[i].p, pb = b.rows[j].p;
        if (pa < pb) {
            ++i;
        } else if (pb < pa) {
            ++j;
        } else {
            int lhs = pick_stat(a.rows[i].stats, condition);
            int rhs = pick_stat(b.rows[j].stats, condition);
            if (lhs > rhs) {
                if (++v.witness_total <= kWitnessCap)
                    v.witnesses.push_back({pa, lhs, rhs});
            } else if (rhs > lhs) {
                if (++v.reverse_total <= kWitnessCap)
                    v.reverse_witnesses.push_back({pa, lhs, rhs});
            }
            ++v.compared;
            ++i;
            ++j;
        }
    }

    /* primes dropped from the overlap because one side flagged them */
    std::set<uint64_t> akeys, bkeys;
    for (const SweepRow& r : a.rows)
        akeys.insert(r.p);
    for (const SweepFlag& f : a.flags)
        akeys.insert(f.p);
    for (const SweepRow& r : b.rows)
        bkeys.insert(r.p);
    for (const SweepFlag& f : b.flags)
        bkeys.insert(f.p);
    for (const SweepFlag& f : a.flags)
        if (bkeys.count(f.p))
            ++v.flagged;
    for (const SweepFlag& f : b.flags)
        if (akeys.count(f.p) && std::none_of(a.flags.begin(), a.flags.end(),
                                             [&](const SweepFlag& g) { return g.p == f.p; }))
            ++v.flagged;

    if (v.compared == 0)
        throw EmptyOverlap("reports share no good primes");
    v.holds_on_window = v.witness_total == 0;
    return v;
}

std::array<ComparisonVerdict, 3> isogeny_invariance_check(const CurveQ& E,
                                                          const MWSubgroup& gamma,
                                                          const Isogeny& iota, uint64_t ell,
                                                          uint64_t lo, uint64_t hi,
                                                          const SweepOptions& opt) {
    require_prime_ell(ell);
    if (!(iota.domain == E))
        throw DomainMismatch("subgroup curve is not the isogeny domain");
    if ((uint64_t)iota.degree % ell == 0)
        throw EllDividesDegree("ell = " + std::to_string(ell) + " divides deg = "
                               + std::to_string(iota.degree));

    std::vector<RationalPoint> images;
    images.reserve(gamma.generators.size());
    for (const RationalPoint& g : gamma.generators)
        images.push_back(pushforward(iota, g));

    SweepReport ra = sweep(E, gamma, ell, lo, hi, opt);
    SweepReport rb = sweep(iota.codomain, MWSubgroup(images), ell, lo, hi, opt);
    return {compare(ra, rb, 2), compare(ra, rb, 3), compare(ra, rb, 4)};
}

std::array<ComparisonVerdict, 3> lemma_isogenous_check(const Isogeny& phi,
                                                       const MWSubgroup& gamma,
                                                       const MWSubgroup& gamma_prime,
                                                       uint64_t ell, uint64_t lo, uint64_t hi,
                                                       const SweepOptions& opt) {
    require_prime_ell(ell);
    for (const RationalPoint& g : gamma.generators)
        if (!(*g.curve == phi.domain))
            throw DomainMismatch("subgroup does not live on the isogeny domain");
    for (const RationalPoint& g : gamma_prime.generators)
        if (!(*g.curve == phi.codomain))
            throw DomainMismatch("second subgroup does not live on the codomain");
    if ((uint64_t)phi.degree % ell == 0)
        throw EllDividesDegree("ell = " + std::to_string(ell) + " divides deg = "
                               + std::to_string(phi.degree));

    std::vector<RationalPoint> images;
    for (const RationalPoint& g : gamma.generators)
        images.push_back(pushforward(phi, g));

    /* index i = [phi(Gamma) : phi(Gamma) cap Gamma'].  Supported patterns:
     * pushed generators match Gamma' up to sign (i = 1), or Gamma' inside
     * phi(Gamma) with reg(Gamma') = i^2 reg(phi(Gamma)). */
    uint64_t index = 0;
    {
        std::vector<bool> used(gamma_prime.generators.size(), false);
        bool matched = true;
        for (const RationalPoint& img : images) {
            if (img.inf)
                continue; // the identity lies in every subgroup
            bool found = false;
            for (size_t k = 0; k < gamma_prime.generators.size() && !found; ++k) {
                if (used[k])
                    continue;
                const RationalPoint& g = gamma_prime.generators[k];
                if (g == img || g == negate_q(img)) {
                    used[k] = true;
                    found = true;
                }
            }
            if (!found) {
                matched = false;
                break;
            }
        }
        if (matched)
            index = 1;
    }
    if (index == 0) {
        bool free_inputs = std::none_of(images.begin(), images.end(),
                                        [](const RationalPoint& P) {
                                            return is_torsion(P).has_value();
                                        })
                           && std::none_of(gamma_prime.generators.begin(),
                                           gamma_prime.generators.end(),
                                           [](const RationalPoint& P) {
                                               return is_torsion(P).has_value();
                                           });
        if (!free_inputs)
            throw IndexNotComputable("unsupported containment pattern (torsion images)");
        /* the err_bound is honest even when the height series stops on
         * k_max rather than tol, so it is the only gate that matters */
        RegulatorData ra = regulator_detail(images);
        RegulatorData rb = regulator_detail(gamma_prime.generators);
        if (ra.value <= ra.err_bound || rb.value <= rb.err_bound)
            throw IndexNotComputable("regulators too uncertain for an index");
        double ratio = rb.value / ra.value;
        double err = ratio * (ra.err_bound / ra.value + rb.err_bound / rb.value);
        long long j = std::llround(std::sqrt(ratio));
        if (j < 1 || std::fabs(ratio - (double)j * (double)j) > err + 1e-6)
            throw IndexNotComputable("regulator ratio is not an integer square");
        auto fac = factorize((uint64_t)j);
        if (fac.size() > 1)
            throw IndexNotComputable("index " + std::to_string(j)
                                     + " is not a prime power");
        index = (uint64_t)j;
    }
    if (index % ell == 0)
        throw EllDividesDegree("ell = " + std::to_string(ell) + " divides the index "
                               + std::to_string(index));

    SweepReport ra = sweep(phi.domain, gamma, ell, lo, hi, opt);
    SweepReport rb = sweep(phi.codomain, gamma_prime, ell, lo, hi, opt);
    return {compare(ra, rb, 2), compare(ra, rb, 3), compare(ra, rb, 4)};
}

DensityEstimate estimate_density(const DensityQuery& q) {
    require_prime_ell(q.ell);
    if (q.points.empty())
        throw std::invalid_argument("density query without points");
    if (q.points.size() != q.targets.size())
        throw std::invalid_argument("density query targets/points size mismatch");
    for (int m : q.targets)
        if (m < 0)
            throw std::invalid_argument("negative target valuation");

    /* distinct curves by value; each point refers to one of them */
    std::vector<const CurveQ*> curves;
    std::vector<size_t> owner(q.points.size());
    for (size_t i = 0; i < q.points.size(); ++i) {
        const CurveQ* c = q.points[i].curve;
        size_t k = 0;
        while (k < curves.size() && !(*curves[k] == *c))
            ++k;
        if (k == curves.size())
            curves.push_back(c);
        owner[i] = k;
    }

    DensityEstimate est;

    /* the proposition wants almost-free points; warn instead of refusing,
     * grouped per curve (cross-curve relations are not checkable here) */
    for (size_t k = 0; k < curves.size(); ++k) {
        std::vector<RationalPoint> group;
        for (size_t i = 0; i < q.points.size(); ++i)
            if (owner[i] == k)
                group.push_back(q.points[i]);
        try {
            if (!is_almost_free(group))
                est.warnings.push_back("points on " + format_curve(*curves[k])
                                       + " are not almost free; the density "
                                         "proposition does not apply");
        } catch (const IndeterminateRank& e) {
            est.warnings.push_back("independence on " + format_curve(*curves[k])
                                   + " indeterminate: " + e.what());
        }
    }

    std::vector<PrimeModulus> primes;
    for (PrimeModulus p : good_primes(*curves[0], 5, q.bound)) {
        bool good = true;
        for (size_t k = 1; k < curves.size() && good; ++k)
            good = !mpz_divisible_ui_p(curves[k]->disc.get_mpz_t(), p.p);
        if (good)
            primes.push_back(p);
    }
    if (primes.empty())
        throw EmptyWindow("no good primes at or below " + std::to_string(q.bound));

    for (PrimeModulus p : primes) {
        std::vector<CurveFp> reduced;
        reduced.reserve(curves.size());
        for (const CurveQ* c : curves)
            reduced.push_back(reduce_curve(*c, p));
        std::vector<uint64_t> orders(curves.size());
        std::vector<std::vector<std::pair<uint64_t, int>>> facs(curves.size());
        for (size_t k = 0; k < curves.size(); ++k) {
            orders[k] = count_points(reduced[k]);
            facs[k] = factorize(orders[k]);
        }
        bool hit = true;
        for (size_t i = 0; i < q.points.size() && hit; ++i) {
            FpPoint rp = reduce_point(q.points[i], reduced[owner[i]]);
            uint64_t ord = point_order(rp, orders[owner[i]], facs[owner[i]]);
            hit = val_of(q.ell, ord) == q.targets[i];
        }
        est.hits += hit ? 1 : 0;
    }
    est.total = primes.size();
    est.fraction = (double)est.hits / (double)est.total;
    auto [wlo, whi] = wilson95(est.hits, est.total);
    est.wilson_lo = wlo;
    est.wilson_hi = whi;
    return est;
}

TheoremDemo theorem_demo(const CurveQ& E, const MWSubgroup& gamma, const CurveQ& Eprime,
                         const MWSubgroup& gamma_prime, uint64_t ell, uint64_t lo,
                         uint64_t hi, const SweepOptions& opt) {
    SweepReport ra = sweep(E, gamma, ell, lo, hi, opt);
    SweepReport rb = sweep(Eprime, gamma_prime, ell, lo, hi, opt);

    TheoremDemo demo;
    demo.ell = ell;
    demo.lo = lo;
    demo.hi = hi;
    size_t i = 0, j = 0;
    while (i < ra.rows.size() && j < rb.rows.size()) {
        uint64_t pa = ra.rows[i].p, pb = rb.rows[j].p;
        if (pa < pb) {
            ++i;
        } else if (pb < pa) {
            ++j;
        } else {
            if (rb.rows[j].stats.eps == 0) {
                int eps = ra.rows[i].stats.eps;
                if (eps >= 1 && ++demo.total_m1 <= kWitnessCap)
                    demo.primes_m1.push_back(pa);
                if (eps >= 2 && ++demo.total_m2 <= kWitnessCap)
                    demo.primes_m2.push_back(pa);
            }
            ++i;
            ++j;
        }
    }
    return demo;
}

std::string report_csv(const SweepReport& r) {
    std::string out = "p,nu,eps,rad\n";
    for (const SweepRow& row : r.rows) {
        out += std::to_string(row.p);
        out += ',';
        out += std::to_string(row.stats.nu);
        out += ',';
        out += std::to_string(row.stats.eps);
        out += ',';
        out += std::to_string(row.stats.rad);
        out += '\n';
    }
    return out;
}

std::string report_json(const SweepReport& r) {
    nlohmann::json j;
    j["curve"] = r.curves;
    j["generators"] = r.generators;
    j["ell"] = r.ell;
    j["range"] = {r.lo, r.hi};
    j["rows"] = nlohmann::json::array();
    for (const SweepRow& row : r.rows)
        j["rows"].push_back({{"p", row.p},
                             {"nu", row.stats.nu},
                             {"eps", row.stats.eps},
                             {"rad", row.stats.rad}});
    j["flags"] = nlohmann::json::array();
    for (const SweepFlag& f : r.flags)
        j["flags"].push_back({{"p", f.p}, {"code", f.code}, {"message", f.message}});
    return j.dump(2) + "\n";
}

} // namespace mwf
