#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mwf/cli.hpp"

namespace {

void add_common(CLI::App* sub, mwf::JobConfig& cfg, std::string& primes) {
    sub->add_option("--curve", cfg.curves, "curve as 'a b' (repeatable)");
    sub->add_option("--point", cfg.points,
                    "point as 'x y' with rational entries n/d, or 'inf' (repeatable)");
    sub->add_option("--ell", cfg.ell, "the prime ell of the statistics");
    sub->add_option("--primes", primes, "good-prime window LO:HI");
    sub->add_option("--out", cfg.out, "report file (default: stdout)");
    sub->add_option("--format", cfg.format, "report format: csv or json");
    sub->add_option("--threads", cfg.threads, "worker threads for prime sweeps");
    sub->add_option("--closure-cap", cfg.closure_cap, "subgroup closure size budget");
    sub->add_option("--reg-tol", cfg.reg_tol, "regulator positivity tolerance");
    sub->add_option("--height-tol", cfg.height_tol, "canonical height series tolerance");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"l-adic statistics of reduced Mordell-Weil subgroups"};
    app.require_subcommand(0, 1);

    std::string config_path;
    app.add_option("--config", config_path,
                   "read the whole job from a key=value or JSON config file");

    mwf::JobConfig cfg;
    std::string primes;

    CLI::App* s_sweep = app.add_subcommand(
        "sweep", "per-prime (nu, eps, rad) of one subgroup over a prime window");
    CLI::App* s_product = app.add_subcommand(
        "product-sweep", "the same statistics for a subgroup of a product of curves");
    CLI::App* s_compare = app.add_subcommand(
        "compare", "pointwise inequality of one statistic between two subgroups");
    CLI::App* s_density = app.add_subcommand(
        "density", "fraction of primes attaining prescribed ell-valuations");
    CLI::App* s_isogeny = app.add_subcommand(
        "isogeny", "explicit isogeny from a rational kernel point");
    CLI::App* s_heights = app.add_subcommand(
        "heights", "canonical heights, regulator and almost-freeness of points");
    CLI::App* s_demo = app.add_subcommand(
        "demo", "primes separating two subgroups by their ell-exponents");
    for (CLI::App* s :
         {s_sweep, s_product, s_compare, s_density, s_isogeny, s_heights, s_demo})
        add_common(s, cfg, primes);
    for (CLI::App* s : {s_compare, s_demo})
        s->add_option("--point2", cfg.points2,
                      "generator of the second subgroup (repeatable)");
    s_compare->add_option("--condition", cfg.condition,
                          "2 = order, 3 = exponent, 4 = radical");
    s_density->add_option("--target", cfg.targets,
                          "target ell-valuation, one per point (repeatable)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_path.empty()) {
            if (!app.get_subcommands().empty()) {
                std::cerr << "mwf: error: --config replaces the subcommand and its flags\n";
                return 1;
            }
            std::ifstream f(config_path);
            if (!f) {
                std::cerr << "mwf: error: cannot read '" << config_path << "'\n";
                return 1;
            }
            std::ostringstream text;
            text << f.rdbuf();
            return mwf::run(mwf::parse_config(text.str()));
        }
        if (app.get_subcommands().empty()) {
            std::cerr << app.help();
            return 1;
        }
        cfg.command = mwf::parse_command(app.get_subcommands()[0]->get_name());
        if (!primes.empty())
            mwf::parse_prime_range(primes, cfg.lo, cfg.hi);
        return mwf::run(cfg);
    } catch (const std::exception& e) {
        std::cerr << "mwf: error: " << e.what() << "\n";
        return 1;
    }
}
