#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

/* Command-line front end: a validated job description, a parser for the
 * key=value / JSON config formats, and the dispatcher that runs a job and
 * writes its report.  The mwf binary is a thin flag-filling wrapper around
 * these three entry points. */

namespace mwf {

enum class Command {
    sweep,
    product_sweep,
    compare,
    density,
    isogeny,
    heights,
    demo,
};

/* Everything a job needs, with curves and points kept as their exact input
 * strings.  validate_config parses them (and checks points lie on their
 * curves) before any work; run re-parses into local storage so the config
 * stays a plain value type. */
struct JobConfig {
    Command command = Command::sweep;
    std::vector<std::string> curves;  // "a b", one per --curve
    std::vector<std::string> points;  // "x y" rationals or "inf"
    std::vector<std::string> points2; // second subgroup (compare, demo)
    std::vector<int> targets;         // density target valuations, one per point
    uint64_t ell = 0;
    uint64_t lo = 5;
    uint64_t hi = 0;
    int condition = 2;       // compare: 2 = order, 3 = exponent, 4 = radical
    std::string out;         // report path; empty writes to stdout
    std::string format = "csv";
    int threads = 1;
    size_t closure_cap = size_t(1) << 20;
    double reg_tol = 1e-6;
    double height_tol = 1e-8;
};

Command parse_command(const std::string& name); // ParseError

/* "LO:HI" with 0 < LO <= HI. */
void parse_prime_range(const std::string& s, uint64_t& lo, uint64_t& hi); // ParseError

/* Key=value lines (# comments, repeatable keys) or a JSON object when the
 * first significant byte is '{'.  Keys mirror the long flags: command,
 * curve, point, point2, target, ell, primes, condition, out, format,
 * threads, closure-cap, reg-tol, height-tol (underscores accepted).  The
 * result is already validated. */
JobConfig parse_config(const std::string& text); // ParseError, PointNotOnCurve

/* Arity, ranges and exact on-curve checks for the given command.  ell must
 * be prime wherever a job uses it. */
void validate_config(const JobConfig& cfg); // ParseError, PointNotOnCurve

/* Executes the job and writes the report to cfg.out (stdout when empty).
 * Returns the process exit status: 0 done, 2 done with witnesses against
 * the tested inequality (compare, demo), 1 any error (reported on stderr,
 * never thrown).  Logging to stderr is controlled by MWF_LOG=quiet|info|debug. */
int run(const JobConfig& cfg);

} // namespace mwf
