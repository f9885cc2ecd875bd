// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
// Usage: acceptance <path to the szk command-line tool>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "examples.hpp"
#include "szk/homotopy.hpp"

using namespace szk;
namespace ex = szk::examples;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

Outcome linear_exactness() {
    const auto t0 = Clock::now();
    const Diffeo f = parse_diffeo("x/2", Interval(0.0, 1.0 - 0x1p-20), false, true);
    const auto r = szekeres_field(f);
    const double l2 = std::log(2.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < r.field.size(); ++i) {
        const double x = r.field.x[i];
        if (r.trust.contains(x) && x > 0.0) worst = std::max(worst, std::abs(r.field.nu[i] + x * l2) / (x * l2));
    }
    const double lam = std::abs(r.lambda - 2 * l2);
    const double secs = seconds_since(t0);
    return {worst < 1e-10 && lam < 1e-12 && r.iterations_used == 1 && secs < 1.0,
            "rel err " + fmt("%.3g", worst) + ", lambda err " + fmt("%.3g", lam) + ", k = " +
                std::to_string(r.iterations_used) + ", " + fmt("%.2f s", secs)};
}

Outcome logistic_recovery() {
    const auto t0 = Clock::now();
    Tolerances tol;
    tol.grid = 4097;
    const auto r = szekeres_field(ex::logistic(1.0), Side::Left, tol);
    double worst = 0.0;
    for (std::size_t i = 0; i < r.field.size(); ++i) {
        const double x = r.field.x[i];
        if (x < 1e-3 || x > 0.9) continue;
        worst = std::max(worst, std::abs(r.field.nu[i] + x * (1 - x)) / (x * (1 - x)));
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-6 && secs < 10.0, "rel err " + fmt("%.3g", worst) + ", " + fmt("%.2f s", secs)};
}

Outcome scaling() {
    const double a = scaling_check(ex::logistic(1.0));
    const double b = scaling_check(parse_diffeo("x/2", Interval(0.0, 1.0 - 0x1p-20), false, true));
    return {a < 1e-8 && b < 1e-12, "logistic " + fmt("%.3g", a) + ", x/2 " + fmt("%.3g", b)};
}

Outcome flow_and_centralizer() {
    const Diffeo f = ex::logistic(1.0);
    const auto tc = time_coordinate(szekeres_field(f).field);
    const double closure = sup_distance(flow_map(tc, 1.0), f, cosine_grid(0.05, 0.95, 513));
    double tau_err = 0.0, spread = 0.0;
    for (double tau : {2.0, 0.5, std::sqrt(2.0), std::numbers::phi}) {
        const auto ct = centralizer_time(f, ex::logistic(tau), tc);
        tau_err = std::max(tau_err, std::abs(ct.tau - tau));
        spread = std::max(spread, ct.spread);
    }
    return {closure < 1e-7 && tau_err < 1e-8 && spread < 1e-8,
            "closure " + fmt("%.3g", closure) + ", tau err " + fmt("%.3g", tau_err) + ", spread " + fmt("%.3g", spread)};
}

Outcome classification() {
    const auto t0 = Clock::now();
    const Diffeo h = ex::logistic(1.0);
    const auto probes = cosine_grid(0.0, 1.0, 257);
    int pairs = 0, good = 0;
    double gen = 0.0;
    std::string first_bad;
    for (int p = 1; p <= 12; ++p)
        for (int q = 1; q <= 12; ++q) {
            if (std::gcd(p, q) != 1) continue;
            ++pairs;
            try {
                const auto [f, g] = ex::rational_pair(p, q);
                const auto d = decompose(f, g);
                const auto& c = d.payloads.at(0);
                const double e = sup_distance(c.h, h, probes);
                gen = std::max(gen, e);
                if (d.payloads.size() == 1 && c.kind == Kind::Rational && c.p == p && c.q == q && e < 1e-7) ++good;
                else if (first_bad.empty()) first_bad = std::to_string(p) + "/" + std::to_string(q);
            } catch (const std::exception& e) {
                if (first_bad.empty()) first_bad = std::to_string(p) + "/" + std::to_string(q) + " (" + e.what() + ")";
            }
        }
    int irr = 0;
    Tolerances tol;
    tol.q_max = 64;
    for (double tau : {std::sqrt(2.0), std::numbers::phi, std::numbers::pi - 3.0}) {
        try {
            const auto [f, g] = ex::logistic_pair(tau);
            const auto d = decompose(f, g, tol);
            if (d.payloads.size() == 1 && d.payloads[0].kind == Kind::Irrational) ++irr;
        } catch (const std::exception&) {
        }
    }
    const double secs = seconds_since(t0);
    std::string detail = std::to_string(good) + "/" + std::to_string(pairs) + " rational, " + std::to_string(irr) +
                         "/3 irrational, generator err " + fmt("%.3g", gen) + ", " + fmt("%.1f s", secs);
    if (!first_bad.empty()) detail += ", first failure " + first_bad;
    return {good == pairs && irr == 3 && secs < 120.0, detail};
}

Outcome takens_merge_cubic() {
    const auto [f, g] = ex::cubic_pair(std::sqrt(2.0));
    const auto d = decompose(f, g);
    bool shape = d.F.size() == 3 && std::abs(d.F[1].x - 0.5) < 1e-9 && d.F0.size() == 2 && d.F0[0].x == 0.0 &&
                 d.F0[1].x == 1.0 && d.payloads.size() == 1 && d.payloads[0].glue_points.size() == 1;
    if (!shape) return {false, "unexpected fixed-point structure"};
    const auto& c = d.payloads[0];
    double worst = 0.0;
    for (double x : cosine_grid(0.01, 0.99, 1025)) worst = std::max(worst, std::abs(c.nu(x) - ex::cubic_nu(x)));
    const double jump = std::abs(c.glue_points[0].dnu_left - c.glue_points[0].dnu_right);
    return {worst < 1e-5 && jump < 1e-6, "field err " + fmt("%.3g", worst) + ", one-sided Dnu gap " + fmt("%.3g", jump)};
}

Outcome homotopies() {
    const auto t0 = Clock::now();
    const Diffeo id = identity(Interval(0.0, 1.0));
    const std::vector<std::pair<std::string, std::pair<Diffeo, Diffeo>>> cases = {
        {"logistic", ex::logistic_pair(std::sqrt(2.0))},
        {"(h^3,h^2)", ex::rational_pair(2, 3)},
        {"identity", {id, id}},
        {"mixed", ex::mixed_pair()}};
    bool all = true;
    double comm = 0.0, excess = -1.0, dfmin = 1e300;
    std::string failed;
    std::size_t dyadic = 0;
    for (const auto& [name, fg] : cases) {
        try {
            const auto path = build_path(fg.first, fg.second, decompose(fg.first, fg.second));
            const auto r = verify_path(path);
            comm = std::max(comm, r.commutation_residual);
            excess = std::max(excess, r.domination_excess);
            dfmin = std::min(dfmin, r.derivative_positivity_min);
            dyadic += r.dyadic.size();
            if (!r.ok()) {
                all = false;
                failed += " " + name;
            }
        } catch (const std::exception& e) {
            all = false;
            failed += " " + name + " (" + e.what() + ")";
        }
    }
    const double secs = seconds_since(t0);
    std::string detail = "commutation " + fmt("%.3g", comm) + ", domination excess " + fmt("%.3g", excess) +
                         ", min Df_t " + fmt("%.3g", dfmin) + ", " + std::to_string(dyadic) + " dyadic probes, " +
                         fmt("%.1f s", secs);
    if (!failed.empty()) detail += ", failed:" + failed;
    return {all && secs < 300.0, detail};
}

Outcome audit_family() {
    bool all = true;
    double worst_flow = 0.0;
    for (double eps : {0.05, 0.1, 0.2}) {
        const Diffeo f = ex::logistic(eps);
        const auto a = audit_bounds(f, szekeres_field(f));
        all = all && a.log_ratio_ok && a.dnu_ok && a.flow_c1_bound_ok;
        worst_flow = std::max(worst_flow, a.flow_c1_worst_ratio);
    }
    return {all, "worst flow C1 ratio " + fmt("%.3g", worst_flow)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Outcome determinism(const std::string& cli) {
    if (cli.empty()) return {false, "no command-line tool given"};
    const fs::path work = fs::temp_directory_path() / "szk_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);
    // the mixed example has no closed form, so it goes in as sampled tables
    const auto [mf, mg] = ex::mixed_pair();
    const auto nodes = cosine_grid(0.0, 1.0, 4097);
    {
        std::ofstream a(work / "mixed_f.csv"), b(work / "mixed_g.csv");
        write_csv(a, mf, nodes);
        write_csv(b, mg, nodes);
    }
    const std::vector<std::pair<std::string, std::string>> cases = {
        {"logistic", "--f 'expr:x/(x+(1-x)*exp(1))' --g 'expr:x/(x+(1-x)*exp(1.4142135623730951))'"},
        {"rational", "--f 'expr:x/(x+(1-x)*exp(3))' --g 'expr:x/(x+(1-x)*exp(2))'"},
        {"identity", "--f expr:x --g expr:x"},
        {"mixed", "--f csv:" + (work / "mixed_f.csv").string() + " --g csv:" + (work / "mixed_g.csv").string() +
                      " --tol.eps_flat=1e-5"}};
    int same = 0;
    std::string failed;
    for (const auto& [name, args] : cases) {
        bool ok = true;
        for (const char* run : {"a", "b"}) {
            const fs::path out = work / (name + "_" + run);
            const std::string cmd = "'" + cli + "' path " + args + " --times 0,0.25,0.5,1 --out '" + out.string() +
                                    "' > /dev/null 2>&1";
            ok = ok && std::system(cmd.c_str()) == 0;
        }
        for (const char* file : {"path_report.json", "frames.csv"}) {
            const auto a = slurp(work / (name + "_a") / file), b = slurp(work / (name + "_b") / file);
            ok = ok && !a.empty() && a == b;
        }
        if (ok) ++same;
        else failed += " " + name;
    }
    fs::remove_all(work);
    std::string detail = std::to_string(same) + "/4 inputs byte-identical";
    if (!failed.empty()) detail += ", failed:" + failed;
    return {same == 4, detail};
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"linear exactness", linear_exactness},
        {"logistic recovery", logistic_recovery},
        {"uniqueness scaling", scaling},
        {"flow closure and centralizer time", flow_and_centralizer},
        {"classification suite", classification},
        {"Takens merge", takens_merge_cubic},
        {"homotopy verification", homotopies},
        {"bound audit family", audit_family},
        {"determinism", [&] { return determinism(cli); }},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("criterion %zu (%s): %s: %s\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
