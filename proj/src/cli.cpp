#include "mwf/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mwf/ec_q.hpp"
#include "mwf/errors.hpp"
#include "mwf/fingerprint.hpp"
#include "mwf/fp.hpp"
#include "mwf/isogeny.hpp"

namespace mwf {

namespace {

int log_level() {
    static int lvl = [] {
        const char* e = std::getenv("MWF_LOG");
        if (!e)
            return 1;
        std::string s(e);
        if (s == "quiet")
            return 0;
        if (s == "debug")
            return 2;
        return 1;
    }();
    return lvl;
}

void log_info(const std::string& m) {
    if (log_level() >= 1)
        std::cerr << "mwf: " << m << "\n";
}

void log_debug(const std::string& m) {
    if (log_level() >= 2)
        std::cerr << "mwf: " << m << "\n";
}

std::string sig12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

uint64_t to_u64(const std::string& s, const std::string& where) {
    try {
        size_t pos = 0;
        unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size() || s[0] == '-')
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(where + ": '" + s + "' is not a nonnegative integer");
    }
}

int to_int(const std::string& s, const std::string& where) {
    try {
        size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(where + ": '" + s + "' is not an integer");
    }
}

double to_double(const std::string& s, const std::string& where) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(where + ": '" + s + "' is not a number");
    }
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

/* one key=value assignment, shared by both config formats; `where` names
 * the source location for error messages */
void assign(JobConfig& cfg, std::string key, const std::string& value,
            const std::string& where) {
    for (char& c : key)
        if (c == '_')
            c = '-';
    if (key == "command")
        cfg.command = parse_command(value);
    else if (key == "curve")
        cfg.curves.push_back(value);
    else if (key == "point")
        cfg.points.push_back(value);
    else if (key == "point2")
        cfg.points2.push_back(value);
    else if (key == "target")
        cfg.targets.push_back(to_int(value, where));
    else if (key == "ell")
        cfg.ell = to_u64(value, where);
    else if (key == "primes")
        parse_prime_range(value, cfg.lo, cfg.hi);
    else if (key == "condition")
        cfg.condition = to_int(value, where);
    else if (key == "out")
        cfg.out = value;
    else if (key == "format")
        cfg.format = value;
    else if (key == "threads")
        cfg.threads = to_int(value, where);
    else if (key == "closure-cap")
        cfg.closure_cap = to_u64(value, where);
    else if (key == "reg-tol")
        cfg.reg_tol = to_double(value, where);
    else if (key == "height-tol")
        cfg.height_tol = to_double(value, where);
    else
        throw ParseError(where + ": unknown key '" + key + "'");
}

JobConfig parse_config_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("config JSON: ") + e.what());
    }
    if (!j.is_object())
        throw ParseError("config JSON: top level must be an object");

    JobConfig cfg;
    for (const auto& [key, value] : j.items()) {
        std::string where = "field '" + key + "'";
        auto one = [&](const nlohmann::json& v) {
            assign(cfg, key, v.is_string() ? v.get<std::string>() : v.dump(), where);
        };
        if (value.is_array())
            for (const auto& v : value)
                one(v);
        else
            one(value);
    }
    return cfg;
}

JobConfig parse_config_lines(const std::string& text) {
    JobConfig cfg;
    std::istringstream in(text);
    std::string line;
    bool saw_command = false;
    for (int no = 1; std::getline(in, line); ++no) {
        size_t hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        line = trim(line);
        if (line.empty())
            continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(no) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ParseError("line " + std::to_string(no) + ": empty key");
        assign(cfg, key, value, "line " + std::to_string(no));
        saw_command = saw_command || key == "command";
    }
    if (!saw_command)
        throw ParseError("config has no 'command' key");
    return cfg;
}

const char* command_name(Command c) {
    switch (c) {
    case Command::sweep:
        return "sweep";
    case Command::product_sweep:
        return "product-sweep";
    case Command::compare:
        return "compare";
    case Command::density:
        return "density";
    case Command::isogeny:
        return "isogeny";
    case Command::heights:
        return "heights";
    case Command::demo:
        return "demo";
    }
    return "?";
}

bool uses_ell(Command c) {
    return c != Command::isogeny && c != Command::heights;
}

void require(bool ok, const std::string& msg) {
    if (!ok)
        throw ParseError(msg);
}

/* parse all curves up front so points can refer to them; the reserve keeps
 * the RationalPoint back-pointers stable while points are parsed */
std::vector<CurveQ> parse_curves(const std::vector<std::string>& specs) {
    std::vector<CurveQ> curves;
    curves.reserve(specs.size());
    for (const std::string& s : specs)
        curves.push_back(parse_curve(s));
    return curves;
}

std::vector<RationalPoint> parse_points(const std::vector<std::string>& specs,
                                        const CurveQ& E) {
    std::vector<RationalPoint> pts;
    pts.reserve(specs.size());
    for (const std::string& s : specs)
        pts.push_back(parse_point(s, E));
    return pts;
}

std::vector<std::string> rat_strings(const std::vector<mpq_class>& v) {
    std::vector<std::string> out;
    out.reserve(v.size());
    for (const mpq_class& q : v)
        out.push_back(q.get_str());
    return out;
}

struct JobResult {
    std::string report;
    int exit_code = 0;
};

SweepOptions options_of(const JobConfig& cfg) {
    SweepOptions opt;
    opt.threads = cfg.threads;
    opt.closure_cap = cfg.closure_cap;
    return opt;
}

JobResult run_sweep(const JobConfig& cfg) {
    CurveQ E = parse_curve(cfg.curves[0]);
    MWSubgroup gamma(parse_points(cfg.points, E));
    SweepReport rep = sweep(E, gamma, cfg.ell, cfg.lo, cfg.hi, options_of(cfg));
    log_debug("sweep: " + std::to_string(rep.rows.size()) + " rows, "
              + std::to_string(rep.flags.size()) + " flags");
    return {cfg.format == "json" ? report_json(rep) : report_csv(rep), 0};
}

JobResult run_product_sweep(const JobConfig& cfg) {
    std::vector<CurveQ> curves = parse_curves(cfg.curves);
    size_t k = curves.size();
    std::vector<std::vector<RationalPoint>> tuples;
    for (size_t i = 0; i + k <= cfg.points.size(); i += k) {
        std::vector<RationalPoint> tuple;
        tuple.reserve(k);
        for (size_t j = 0; j < k; ++j)
            tuple.push_back(parse_point(cfg.points[i + j], curves[j]));
        tuples.push_back(std::move(tuple));
    }
    SweepReport rep =
        product_sweep(curves, tuples, cfg.ell, cfg.lo, cfg.hi, options_of(cfg));
    log_debug("product-sweep: " + std::to_string(rep.rows.size()) + " rows, "
              + std::to_string(rep.flags.size()) + " flags");
    return {cfg.format == "json" ? report_json(rep) : report_csv(rep), 0};
}

JobResult run_compare(const JobConfig& cfg) {
    CurveQ Ea = parse_curve(cfg.curves[0]);
    CurveQ Eb = parse_curve(cfg.curves[1]);
    MWSubgroup ga(parse_points(cfg.points, Ea));
    MWSubgroup gb(parse_points(cfg.points2, Eb));
    SweepOptions opt = options_of(cfg);
    SweepReport ra = sweep(Ea, ga, cfg.ell, cfg.lo, cfg.hi, opt);
    SweepReport rb = sweep(Eb, gb, cfg.ell, cfg.lo, cfg.hi, opt);
    ComparisonVerdict v = compare(ra, rb, cfg.condition);
    log_info("condition " + std::to_string(cfg.condition)
             + (v.holds_on_window ? " holds on " : " refuted on ")
             + std::to_string(v.compared) + " primes ("
             + std::to_string(v.witness_total) + " witnesses, "
             + std::to_string(v.reverse_total) + " reverse)");

    std::string report;
    if (cfg.format == "json") {
        nlohmann::json j;
        j["condition"] = v.condition;
        j["ell"] = cfg.ell;
        j["range"] = {cfg.lo, cfg.hi};
        j["holds_on_window"] = v.holds_on_window;
        j["compared"] = v.compared;
        j["flagged"] = v.flagged;
        j["witness_total"] = v.witness_total;
        j["reverse_total"] = v.reverse_total;
        j["witnesses"] = nlohmann::json::array();
        for (const Witness& w : v.witnesses)
            j["witnesses"].push_back({{"p", w.p}, {"lhs", w.lhs}, {"rhs", w.rhs}});
        j["reverse_witnesses"] = nlohmann::json::array();
        for (const Witness& w : v.reverse_witnesses)
            j["reverse_witnesses"].push_back(
                {{"p", w.p}, {"lhs", w.lhs}, {"rhs", w.rhs}});
        report = j.dump(2) + "\n";
    } else {
        report = "direction,p,lhs,rhs\n";
        for (const Witness& w : v.witnesses)
            report += "forward," + std::to_string(w.p) + "," + std::to_string(w.lhs)
                      + "," + std::to_string(w.rhs) + "\n";
        for (const Witness& w : v.reverse_witnesses)
            report += "reverse," + std::to_string(w.p) + "," + std::to_string(w.lhs)
                      + "," + std::to_string(w.rhs) + "\n";
    }
    return {std::move(report), v.witness_total > 0 ? 2 : 0};
}

JobResult run_density(const JobConfig& cfg) {
    std::vector<CurveQ> curves = parse_curves(cfg.curves);
    DensityQuery q;
    for (size_t i = 0; i < cfg.points.size(); ++i) {
        const CurveQ& E = curves.size() == 1 ? curves[0] : curves[i];
        q.points.push_back(parse_point(cfg.points[i], E));
    }
    q.targets = cfg.targets;
    q.ell = cfg.ell;
    q.bound = cfg.hi;
    DensityEstimate est = estimate_density(q);
    for (const std::string& w : est.warnings)
        log_info("warning: " + w);
    log_debug("density: " + std::to_string(est.hits) + "/" + std::to_string(est.total));

    std::string report;
    if (cfg.format == "json") {
        nlohmann::json j;
        j["hits"] = est.hits;
        j["total"] = est.total;
        j["fraction"] = sig12(est.fraction);
        j["wilson"] = {sig12(est.wilson_lo), sig12(est.wilson_hi)};
        j["warnings"] = est.warnings;
        report = j.dump(2) + "\n";
    } else {
        report = "hits,total,fraction,wilson_lo,wilson_hi\n" + std::to_string(est.hits)
                 + "," + std::to_string(est.total) + "," + sig12(est.fraction) + ","
                 + sig12(est.wilson_lo) + "," + sig12(est.wilson_hi) + "\n";
    }
    return {std::move(report), 0};
}

JobResult run_isogeny(const JobConfig& cfg) {
    CurveQ E = parse_curve(cfg.curves[0]);
    RationalPoint K = parse_point(cfg.points[0], E);
    Isogeny phi = K.y == 0 ? velu_2isogeny(E, K.x) : velu_odd_isogeny(E, K);
    log_info("degree " + std::to_string(phi.degree) + " isogeny onto y^2 = x^3 + ("
             + phi.codomain.a.get_str() + ")x + (" + phi.codomain.b.get_str() + ")");

    std::string report;
    if (cfg.format == "json") {
        nlohmann::json j;
        j["domain"] = format_curve(phi.domain);
        j["codomain"] = format_curve(phi.codomain);
        j["degree"] = phi.degree;
        j["kernel_x"] = rat_strings(phi.kernel_x);
        j["x_num"] = rat_strings(phi.rational_maps.x_num);
        j["x_den"] = rat_strings(phi.rational_maps.x_den);
        report = j.dump(2) + "\n";
    } else {
        report = "degree,codomain_a,codomain_b\n" + std::to_string(phi.degree) + ","
                 + phi.codomain.a.get_str() + "," + phi.codomain.b.get_str() + "\n";
    }
    return {std::move(report), 0};
}

JobResult run_heights(const JobConfig& cfg) {
    CurveQ E = parse_curve(cfg.curves[0]);
    std::vector<RationalPoint> pts = parse_points(cfg.points, E);
    HeightOptions hopt;
    hopt.tol = cfg.height_tol;
    std::vector<HeightData> heights;
    heights.reserve(pts.size());
    for (const RationalPoint& P : pts)
        heights.push_back(canonical_height(P, hopt));
    RegulatorData reg = regulator_detail(pts, hopt);
    bool almost_free_flag = is_almost_free(pts, cfg.reg_tol, hopt);

    std::string report;
    if (cfg.format == "json") {
        nlohmann::json j;
        j["heights"] = nlohmann::json::array();
        for (size_t i = 0; i < pts.size(); ++i)
            j["heights"].push_back({{"point", format_point(pts[i])},
                                    {"hhat", sig12(heights[i].hhat)},
                                    {"err_bound", sig12(heights[i].err_bound)},
                                    {"converged", heights[i].converged}});
        j["regulator"] = {{"value", sig12(reg.value)},
                          {"err_bound", sig12(reg.err_bound)},
                          {"converged", reg.converged}};
        j["almost_free"] = almost_free_flag;
        report = j.dump(2) + "\n";
    } else {
        report = "kind,label,value,err\n";
        for (size_t i = 0; i < pts.size(); ++i)
            report += "height," + format_point(pts[i]) + "," + sig12(heights[i].hhat)
                      + "," + sig12(heights[i].err_bound) + "\n";
        report += "regulator,," + sig12(reg.value) + "," + sig12(reg.err_bound) + "\n";
        report += std::string("almost_free,,") + (almost_free_flag ? "1" : "0") + ",\n";
    }
    return {std::move(report), 0};
}

JobResult run_demo(const JobConfig& cfg) {
    CurveQ Ea = parse_curve(cfg.curves[0]);
    CurveQ Eb = parse_curve(cfg.curves[1]);
    MWSubgroup ga(parse_points(cfg.points, Ea));
    MWSubgroup gb(parse_points(cfg.points2, Eb));
    TheoremDemo d =
        theorem_demo(Ea, ga, Eb, gb, cfg.ell, cfg.lo, cfg.hi, options_of(cfg));
    log_info("exponent separations: " + std::to_string(d.total_m1) + " primes at m=1, "
             + std::to_string(d.total_m2) + " at m=2");

    std::string report;
    if (cfg.format == "json") {
        nlohmann::json j;
        j["ell"] = d.ell;
        j["range"] = {d.lo, d.hi};
        j["m1"] = {{"count", d.total_m1}, {"primes", d.primes_m1}};
        j["m2"] = {{"count", d.total_m2}, {"primes", d.primes_m2}};
        report = j.dump(2) + "\n";
    } else {
        report = "m,p\n";
        for (uint64_t p : d.primes_m1)
            report += "1," + std::to_string(p) + "\n";
        for (uint64_t p : d.primes_m2)
            report += "2," + std::to_string(p) + "\n";
    }
    return {std::move(report), d.total_m1 + d.total_m2 > 0 ? 2 : 0};
}

} // namespace

Command parse_command(const std::string& name) {
    std::string n = name;
    for (char& c : n)
        if (c == '_')
            c = '-';
    if (n == "sweep")
        return Command::sweep;
    if (n == "product-sweep")
        return Command::product_sweep;
    if (n == "compare")
        return Command::compare;
    if (n == "density")
        return Command::density;
    if (n == "isogeny")
        return Command::isogeny;
    if (n == "heights")
        return Command::heights;
    if (n == "demo")
        return Command::demo;
    throw ParseError("unknown command '" + name + "'");
}

void parse_prime_range(const std::string& s, uint64_t& lo, uint64_t& hi) {
    size_t colon = s.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == s.size())
        throw ParseError("prime range must be LO:HI, got '" + s + "'");
    uint64_t l = to_u64(s.substr(0, colon), "prime range");
    uint64_t h = to_u64(s.substr(colon + 1), "prime range");
    if (l == 0 || l > h)
        throw ParseError("prime range needs 0 < LO <= HI, got '" + s + "'");
    lo = l;
    hi = h;
}

JobConfig parse_config(const std::string& text) {
    size_t first = text.find_first_not_of(" \t\r\n");
    JobConfig cfg = (first != std::string::npos && text[first] == '{')
                        ? parse_config_json(text)
                        : parse_config_lines(text);
    validate_config(cfg);
    return cfg;
}

void validate_config(const JobConfig& cfg) {
    std::string cmd = command_name(cfg.command);
    if (uses_ell(cfg.command)) {
        require(cfg.ell != 0, cmd + " requires ell");
        if (!is_prime_u64(cfg.ell))
            throw ParseError("ell = " + std::to_string(cfg.ell) + " is not prime");
        require(cfg.hi != 0, cmd + " requires a prime range (primes LO:HI)");
        require(cfg.lo >= 1 && cfg.lo <= cfg.hi, "prime range needs 0 < LO <= HI");
    }
    require(cfg.format == "csv" || cfg.format == "json",
            "format must be csv or json, got '" + cfg.format + "'");
    require(cfg.threads >= 1, "threads must be at least 1");
    require(cfg.condition >= 2 && cfg.condition <= 4,
            "condition must be 2 (order), 3 (exponent) or 4 (radical)");
    require(cfg.reg_tol > 0, "reg-tol must be positive");
    require(cfg.height_tol > 0, "height-tol must be positive");

    bool two_sided = cfg.command == Command::compare || cfg.command == Command::demo;
    require(two_sided || cfg.points2.empty(), "point2 only applies to compare and demo");
    require(cfg.command == Command::density || cfg.targets.empty(),
            "target only applies to density");

    // arity, then exact parses: every point must lie on its declared curve
    switch (cfg.command) {
    case Command::sweep: {
        require(cfg.curves.size() == 1, "sweep takes exactly one curve");
        CurveQ E = parse_curve(cfg.curves[0]);
        parse_points(cfg.points, E);
        break;
    }
    case Command::product_sweep: {
        require(!cfg.curves.empty(), "product-sweep needs at least one curve");
        std::vector<CurveQ> curves = parse_curves(cfg.curves);
        require(cfg.points.size() % curves.size() == 0,
                "product-sweep points must form tuples of "
                    + std::to_string(curves.size()) + " components");
        for (size_t i = 0; i < cfg.points.size(); ++i)
            parse_point(cfg.points[i], curves[i % curves.size()]);
        break;
    }
    case Command::compare:
    case Command::demo: {
        require(cfg.curves.size() == 2, cmd + " takes exactly two curves");
        CurveQ Ea = parse_curve(cfg.curves[0]);
        CurveQ Eb = parse_curve(cfg.curves[1]);
        parse_points(cfg.points, Ea);
        parse_points(cfg.points2, Eb);
        break;
    }
    case Command::density: {
        require(!cfg.curves.empty(), "density needs at least one curve");
        require(!cfg.points.empty(), "density needs at least one point");
        require(cfg.curves.size() == 1 || cfg.points.size() == cfg.curves.size(),
                "with several curves, density pairs point i with curve i");
        require(cfg.targets.size() == cfg.points.size(),
                "density needs one target per point");
        for (int m : cfg.targets)
            require(m >= 0, "targets are valuations and cannot be negative");
        std::vector<CurveQ> curves = parse_curves(cfg.curves);
        for (size_t i = 0; i < cfg.points.size(); ++i)
            parse_point(cfg.points[i], curves.size() == 1 ? curves[0] : curves[i]);
        break;
    }
    case Command::isogeny: {
        require(cfg.curves.size() == 1, "isogeny takes exactly one curve");
        require(cfg.points.size() == 1, "isogeny takes exactly one kernel point");
        CurveQ E = parse_curve(cfg.curves[0]);
        RationalPoint K = parse_point(cfg.points[0], E);
        require(!K.inf, "the kernel point must be affine");
        break;
    }
    case Command::heights: {
        require(cfg.curves.size() == 1, "heights takes exactly one curve");
        require(!cfg.points.empty(), "heights needs at least one point");
        CurveQ E = parse_curve(cfg.curves[0]);
        parse_points(cfg.points, E);
        break;
    }
    }
}

int run(const JobConfig& cfg) {
    try {
        validate_config(cfg);
        log_debug(std::string("running ") + command_name(cfg.command));
        JobResult res;
        switch (cfg.command) {
        case Command::sweep:
            res = run_sweep(cfg);
            break;
        case Command::product_sweep:
            res = run_product_sweep(cfg);
            break;
        case Command::compare:
            res = run_compare(cfg);
            break;
        case Command::density:
            res = run_density(cfg);
            break;
        case Command::isogeny:
            res = run_isogeny(cfg);
            break;
        case Command::heights:
            res = run_heights(cfg);
            break;
        case Command::demo:
            res = run_demo(cfg);
            break;
        }
        if (cfg.out.empty()) {
            std::cout << res.report;
        } else {
            std::ofstream f(cfg.out, std::ios::binary);
            if (!f)
                throw std::runtime_error("cannot open '" + cfg.out + "' for writing");
            f << res.report;
            if (!f.good())
                throw std::runtime_error("short write to '" + cfg.out + "'");
        }
        return res.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "mwf: error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace mwf
