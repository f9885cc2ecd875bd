// Command-line front end: analyze, szekeres, path, verify.
//
// Exit codes: 0 success, 1 numerical failure or a failed check, 2 classification
// error, 3 bad input (parse errors, bad options), 4 flow range, 5 the maps do
// not commute.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "szk/expr.hpp"
#include "szk/homotopy.hpp"
#include "szk/report.hpp"

namespace fs = std::filesystem;
using namespace szk;

namespace {

enum Exit { kOk = 0, kFailed = 1, kClassification = 2, kInput = 3, kRange = 4, kCommute = 5 };

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Config {
    std::string command;
    std::string f_spec, g_spec;
    std::size_t grid = 4097;
    std::string out = ".";
    std::string times = "0,0.5,1";
    std::string domain = "0,1";
    std::string open = "none";
    std::string side = "left";
    Tolerances tol;
};

std::vector<double> parse_list(const std::string& s, const char* what) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InputError(std::string("bad number '") + item + "' in " + what);
        }
    }
    if (v.empty()) throw InputError(std::string("empty list for ") + what);
    return v;
}

void set_tolerance(Tolerances& t, const std::string& key, const std::string& val) {
    double x = 0.0;
    try {
        x = std::stod(val);
    } catch (const std::exception&) {
        throw InputError("bad value for tol." + key + ": " + val);
    }
    static const std::map<std::string, double Tolerances::*> reals = {
        {"eps_edge", &Tolerances::eps_edge}, {"trust", &Tolerances::trust},       {"eps_conv", &Tolerances::eps_conv},
        {"eps_inv", &Tolerances::eps_inv},   {"eps_comm", &Tolerances::eps_comm}, {"eps_tau", &Tolerances::eps_tau},
        {"eps_flat", &Tolerances::eps_flat}, {"eps_rat", &Tolerances::eps_rat},   {"eps_comp", &Tolerances::eps_comp},
        {"eps_glue", &Tolerances::eps_glue}, {"eps_fixed", &Tolerances::eps_fixed}};
    if (auto it = reals.find(key); it != reals.end()) {
        t.*(it->second) = x;
    } else if (key == "q_max") {
        t.q_max = static_cast<int>(x);
    } else if (key == "max_iter") {
        t.max_iter = static_cast<std::size_t>(x);
    } else {
        throw InputError("unknown tolerance tol." + key);
    }
}

/// Flat key=value file; '#' starts a comment.  Keys are the long option names.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config " + path);
    std::vector<std::pair<std::string, std::string>> kv;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError(path + ":" + std::to_string(n) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto b2 = s.find_first_not_of(" \t");
            const auto e2 = s.find_last_not_of(" \t");
            return b2 == std::string::npos ? std::string() : s.substr(b2, e2 - b2 + 1);
        };
        kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return kv;
}

void apply_setting(Config& c, const std::string& key, const std::string& val) {
    if (key.rfind("tol.", 0) == 0) set_tolerance(c.tol, key.substr(4), val);
    else if (key == "f") c.f_spec = val;
    else if (key == "g") c.g_spec = val;
    else if (key == "grid") c.grid = static_cast<std::size_t>(parse_list(val, "grid").front());
    else if (key == "out") c.out = val;
    else if (key == "times") c.times = val;
    else if (key == "domain") c.domain = val;
    else if (key == "open") c.open = val;
    else if (key == "side") c.side = val;
    else throw InputError("unknown setting " + key);
}

Diffeo load_map(const std::string& spec, const Config& c) {
    if (spec.rfind("csv:", 0) == 0) return read_csv(spec.substr(4));
    if (spec.rfind("expr:", 0) != 0) throw InputError("map spec must start with expr: or csv: (" + spec + ")");
    const auto d = parse_list(c.domain, "domain");
    if (d.size() != 2) throw InputError("domain needs two numbers");
    if (c.open != "none" && c.open != "lo" && c.open != "hi") throw InputError("open must be none, lo or hi");
    const std::string text = spec.substr(5);
    try {
        return parse_diffeo(text, Interval(d[0], d[1]), c.open == "lo", c.open == "hi");
    } catch (const ParseError& e) {
        throw InputError(std::string(e.what()) + "\n" + expr::caret(text, e.position));
    }
}

void print_summary(const Decomposition& d) {
    std::printf("commutation residual %.3g\n", d.commutation_residual);
    std::printf("common fixed points:");
    for (const auto& p : d.F) std::printf(" %.12g%s", p.x, p.flat ? "(flat)" : "");
    std::printf("\n");
    for (const auto& c : d.payloads) {
        if (c.kind == Kind::Rational)
            std::printf("[%.12g, %.12g] rational p/q = %d/%d\n", c.domain.lo, c.domain.hi, c.p, c.q);
        else
            std::printf("[%.12g, %.12g] irrational tau = %.12g\n", c.domain.lo, c.domain.hi, c.tau);
    }
}

int cmd_analyze(const Config& c) {
    const Diffeo f = load_map(c.f_spec, c), g = load_map(c.g_spec, c);
    const auto d = decompose(f, g, c.tol);
    write_file_atomic(fs::path(c.out) / "decomposition.json", to_text(to_json(d)));
    print_summary(d);
    return kOk;
}

int cmd_szekeres(const Config& c) {
    const Diffeo f = load_map(c.f_spec, c);
    const Side side = c.side == "right" ? Side::Right : Side::Left;
    const auto r = szekeres_field(f, side, c.tol);
    Json j = to_json(r);
    j["scaling_check"] = scaling_check(f, side, c.tol);
    std::ostringstream csv;
    write_field_csv(csv, r.field);
    write_file_atomic(fs::path(c.out) / "field.csv", csv.str());
    write_file_atomic(fs::path(c.out) / "szekeres.json", to_text(j));
    std::printf("lambda %.17g, %zu iterations, C1 residual %.3g\n", r.lambda, r.iterations_used, r.c1_residual);
    return kOk;
}

int cmd_path(const Config& c) {
    const Diffeo f = load_map(c.f_spec, c), g = load_map(c.g_spec, c);
    const auto d = decompose(f, g, c.tol);
    const auto path = build_path(f, g, d);
    const auto rep = verify_path(path, {}, c.tol);
    const auto frames = path_to_frames(path, parse_list(c.times, "times"),
                                       cosine_grid(f.domain().lo, f.domain().hi, c.tol.grid));
    std::ostringstream csv;
    write_frames_csv(csv, frames);
    Json j = to_json(rep);
    j["decomposition"] = to_json(d);
    write_file_atomic(fs::path(c.out) / "frames.csv", csv.str());
    write_file_atomic(fs::path(c.out) / "path_report.json", to_text(j));
    std::printf("path %s: commutation %.3g, min Df_t %.6g, domination excess %.3g\n", rep.ok() ? "verified" : "FAILED",
                rep.commutation_residual, rep.derivative_positivity_min, rep.domination_excess);
    return rep.ok() ? kOk : kFailed;
}

int cmd_verify(const Config& c) {
    const Diffeo f = load_map(c.f_spec, c);
    Json j;
    j["schema_version"] = schema_version;
    bool ok = true;
    if (!c.g_spec.empty()) {
        const Diffeo g = load_map(c.g_spec, c);
        const double res = commutation_residual(f, g);
        j["commutation_residual"] = res;
        if (res > c.tol.eps_comm)
            throw CommutationError("commutation precheck failed (residual " + format_double(res) + ")", res);
    }
    const auto r = szekeres_field(f, Side::Left, c.tol);
    const auto a = audit_bounds(f, r, c.tol);
    j["szekeres"] = to_json(r);
    j["audit"] = to_json(a);
    const double sc = scaling_check(f, Side::Left, c.tol);
    j["scaling_check"] = sc;

    // flow closure and the group law on the trust region
    const auto tc = time_coordinate(r.field);
    const auto probes = cosine_grid(r.trust.lo, r.trust.hi, 513);
    double closure = 0.0, group = 0.0;
    const Diffeo f1 = flow_map(tc, 1.0), fa = flow_map(tc, 0.3), fb = flow_map(tc, 0.45), fab = flow_map(tc, 0.75);
    for (double x : probes) {
        closure = std::max(closure, std::abs(f1(x) - f(x)));
        group = std::max(group, std::abs(fa(fb(x)) - fab(x)));
    }
    j["flow_closure"] = closure;
    j["group_law"] = group;
    ok = a.log_ratio_ok && a.dnu_ok && a.flow_c1_bound_ok && closure < 1e-7 && group < 1e-9;
    j["ok"] = ok;
    write_file_atomic(fs::path(c.out) / "audit.json", to_text(j));
    std::printf("audit %s: lambda %.17g, scaling %.3g, flow closure %.3g\n", ok ? "passed" : "FAILED", r.lambda, sc,
                closure);
    return ok ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
    // --tol.KEY=VAL and --tol.KEY VAL are taken out before CLI11 sees the rest
    std::vector<std::pair<std::string, std::string>> tol_args;
    std::vector<std::string> rest;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a.rfind("--tol.", 0) == 0) {
            const auto eq = a.find('=');
            if (eq != std::string::npos) tol_args.emplace_back(a.substr(2, eq - 2), a.substr(eq + 1));
            else if (i + 1 < argc) tol_args.emplace_back(a.substr(2), argv[++i]);
            else {
                std::cerr << "error: " << a << " needs a value\n";
                return kInput;
            }
        } else {
            rest.push_back(std::move(a));
        }
    }

    CLI::App app{"Szekeres fields, centralizers and homotopies of commuting interval diffeomorphisms"};
    app.require_subcommand(1, 1);
    std::string config_path;
    std::map<std::string, std::string> cli;
    auto add_common = [&](CLI::App* sub, bool need_g) {
        sub->add_option_function<std::string>("--f", [&](const std::string& v) { cli["f"] = v; }, "map f: expr:<text> or csv:<path>");
        sub->add_option_function<std::string>("--g", [&](const std::string& v) { cli["g"] = v; },
                                               need_g ? "map g: expr:<text> or csv:<path>" : "optional second map");
        sub->add_option_function<std::string>("--grid", [&](const std::string& v) { cli["grid"] = v; }, "nodes per component (2^k + 1)");
        sub->add_option_function<std::string>("--out", [&](const std::string& v) { cli["out"] = v; }, "output directory");
        sub->add_option_function<std::string>("--domain", [&](const std::string& v) { cli["domain"] = v; }, "lo,hi for expr: maps");
        sub->add_option_function<std::string>("--open", [&](const std::string& v) { cli["open"] = v; }, "none, lo or hi: the open end of the domain");
        sub->add_option("--config", config_path, "key=value settings file");
    };
    auto* analyze = app.add_subcommand("analyze", "decompose a commuting pair");
    add_common(analyze, true);
    auto* szek = app.add_subcommand("szekeres", "Szekeres field of one map");
    add_common(szek, false);
    szek->add_option_function<std::string>("--side", [&](const std::string& v) { cli["side"] = v; }, "left or right anchor");
    auto* path = app.add_subcommand("path", "build and verify the homotopy to the identity");
    add_common(path, true);
    path->add_option_function<std::string>("--times", [&](const std::string& v) { cli["times"] = v; }, "frame times t0,t1,...");
    auto* verify = app.add_subcommand("verify", "bound audit and flow checks");
    add_common(verify, false);

    std::vector<std::string> reversed(rest.rbegin(), rest.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInput;
    }

    Config cfg;
    try {
        if (!config_path.empty())
            for (const auto& [k, v] : read_config(config_path)) apply_setting(cfg, k, v);
        for (const auto& [k, v] : cli) apply_setting(cfg, k, v);
        for (const auto& [k, v] : tol_args) apply_setting(cfg, k, v);
        cfg.tol.grid = cfg.grid;
        cfg.tol.validate();
        cfg.command = app.get_subcommands().front()->get_name();
        if (cfg.f_spec.empty()) throw InputError("--f is required");
        if ((cfg.command == "analyze" || cfg.command == "path") && cfg.g_spec.empty())
            throw InputError("--g is required");
        if (cfg.side != "left" && cfg.side != "right") throw InputError("side must be left or right");
        fs::create_directories(cfg.out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInput;
    }

    const auto t0 = std::chrono::steady_clock::now();
    int code = kOk;
    try {
        if (cfg.command == "analyze") code = cmd_analyze(cfg);
        else if (cfg.command == "szekeres") code = cmd_szekeres(cfg);
        else if (cfg.command == "path") code = cmd_path(cfg);
        else code = cmd_verify(cfg);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        code = kInput;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        code = kInput;
    } catch (const CommutationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        code = kCommute;
    } catch (const FlowRangeError& e) {
        std::cerr << "error: " << e.what() << " (attainable times [" << format_double(e.attainable_lo) << ", "
                  << format_double(e.attainable_hi) << "])\n";
        code = kRange;
    } catch (const ClassificationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        code = kClassification;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        code = kFailed;
    }
    // timing goes to stderr only; the canonical outputs carry none
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << cfg.command << " finished in " << secs << " s\n";
    return code;
}
