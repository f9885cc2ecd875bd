#pragma once

// JSON reports.  Trees are built with nlohmann::json and written by a small
// printer of our own so every double comes out with 17 significant digits
// (the library prints the shortest round-trip form instead).  Object keys are
// sorted, so equal inputs give byte-identical files.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "szk/homotopy.hpp"
#include "szk/structure.hpp"
#include "szk/szekeres.hpp"

namespace szk {

using Json = nlohmann::json;

inline constexpr int schema_version = 1;

namespace detail {

inline void print_json(std::ostream& os, const Json& j, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (j.type()) {
    case Json::value_t::object: {
        if (j.empty()) { os << "{}"; return; }
        os << "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) os << ",\n";
            first = false;
            os << inner << Json(it.key()).dump() << ": ";
            print_json(os, it.value(), indent + 1);
        }
        os << '\n' << pad << '}';
        return;
    }
    case Json::value_t::array: {
        if (j.empty()) { os << "[]"; return; }
        os << "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) os << ",\n";
            os << inner;
            print_json(os, j[i], indent + 1);
        }
        os << '\n' << pad << ']';
        return;
    }
    case Json::value_t::number_float: {
        const double v = j.get<double>();
        if (!std::isfinite(v)) { os << "null"; return; }  // JSON has no inf or nan
        os << format_double(v);
        return;
    }
    default:
        os << j.dump();
    }
}

inline Json interval_json(const Interval& iv) { return Json::array({iv.lo, iv.hi}); }

}  // namespace detail

inline std::string to_text(const Json& j) {
    std::ostringstream os;
    detail::print_json(os, j, 0);
    os << '\n';
    return os.str();
}

/// Write through a temporary file in the same directory, then rename, so a
/// failed run never leaves a partial file behind.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DomainError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw DomainError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline Json to_json(const ComponentData& c) {
    Json j;
    j["domain"] = detail::interval_json(c.domain);
    j["kind"] = to_string(c.kind);
    if (c.kind == Kind::Rational) {
        j["p"] = c.p;
        j["q"] = c.q;
        j["r"] = c.r;
        j["s"] = c.s;
        j["generator_residual"] = c.generator_residual;
        j["confirm_residual"] = c.confirm_residual;
    } else {
        j["tau"] = c.tau;
        j["tau_left"] = c.tau_left;
        j["tau_right"] = c.tau_right;
        j["field_nodes"] = c.nu.size();
    }
    j["tau_spread"] = c.tau_spread;
    j["glue_mismatch"] = c.glue_mismatch;
    Json glue = Json::array();
    for (const auto& g : c.glue_points) glue.push_back({{"x", g.x}, {"dnu_left", g.dnu_left}, {"dnu_right", g.dnu_right}});
    j["glue_points"] = glue;
    j["evidence"] = c.evidence;
    return j;
}

inline Json to_json(const Decomposition& d) {
    Json j;
    j["schema_version"] = schema_version;
    j["domain"] = detail::interval_json(d.domain);
    j["commutation_residual"] = d.commutation_residual;
    auto points = [](const std::vector<FixedPoint>& ps) {
        Json a = Json::array();
        for (const auto& p : ps) a.push_back({{"x", p.x}, {"flat", p.flat}});
        return a;
    };
    auto intervals = [](const std::vector<Interval>& ivs) {
        Json a = Json::array();
        for (const auto& v : ivs) a.push_back(detail::interval_json(v));
        return a;
    };
    j["F"] = points(d.F);
    j["F0"] = points(d.F0);
    j["fixed_intervals"] = intervals(d.fixed_intervals);
    j["components_U"] = intervals(d.components_U);
    j["components_U0"] = intervals(d.components_U0);
    Json comps = Json::array();
    for (const auto& c : d.payloads) comps.push_back(to_json(c));
    j["components"] = comps;
    return j;
}

inline Json to_json(const SzekeresResult& r) {
    Json j;
    j["schema_version"] = schema_version;
    j["lambda"] = r.lambda;
    j["iterations_used"] = r.iterations_used;
    j["c1_residual"] = r.c1_residual;
    j["direction"] = to_string(r.direction);
    j["side"] = to_string(r.side);
    j["trust_region"] = detail::interval_json(r.trust);
    j["tail_monotone"] = r.tail_monotone;
    j["nodes"] = r.field.size();
    return j;
}

inline Json to_json(const BoundAudit& a) {
    return {{"delta", a.delta},
            {"log_ratio_sup", a.log_ratio_sup},
            {"u1_bound", a.u1_bound},
            {"log_ratio_ok", a.log_ratio_ok},
            {"dnu_sup", a.dnu_sup},
            {"u2_bound", a.u2_bound},
            {"dnu_ok", a.dnu_ok},
            {"theta_sup", a.theta_sup},
            {"theta_ok", a.theta_ok},
            {"telescoping_sup", a.telescoping_sup},
            {"telescoping_ok", a.telescoping_ok},
            {"v_bound", a.v_bound},
            {"flow_c1_worst_ratio", a.flow_c1_worst_ratio},
            {"flow_c1_bound_ok", a.flow_c1_bound_ok},
            {"tail_monotone", a.tail_monotone},
            {"trust_region", detail::interval_json(a.trust)}};
}

inline Json to_json(const PathReport& r) {
    Json j;
    j["schema_version"] = schema_version;
    j["ok"] = r.ok();
    j["commutation_residual"] = r.commutation_residual;
    j["endpoint_residuals"] = {{"start", r.start_residual}, {"formula_gap_at_start", r.formula_gap},
                               {"end", r.end_residual}, {"fixed_points", r.fixed_residual}};
    j["derivative_positivity_min"] = r.derivative_positivity_min;
    j["domination_excess"] = r.domination_excess;
    j["boundary_derivative_deviation"] = r.boundary_derivative_deviation;
    Json c1 = Json::array();
    for (const auto& e : r.c1_modulus) c1.push_back({{"s", e.s}, {"t", e.t}, {"sup", e.value}});
    j["c1_modulus"] = c1;
    Json dy = Json::array();
    for (const auto& p : r.dyadic)
        dy.push_back({{"c", p.c}, {"side", p.side}, {"k", p.k}, {"x", p.x}, {"dev_f", p.dev_f}, {"dev_g", p.dev_g},
                      {"delta_f", p.delta_f}, {"delta_g", p.delta_g}, {"envelope_f", p.envelope_f},
                      {"envelope_g", p.envelope_g}});
    j["dyadic"] = dy;
    j["checks"] = {{"commutation", r.commutation_ok}, {"start", r.start_ok}, {"formula_gap", r.gap_ok},
                   {"end", r.end_ok},             {"fixed_points", r.fixed_ok}, {"positivity", r.positivity_ok},
                   {"domination", r.domination_ok}, {"dyadic_decreasing", r.dyadic_decreasing},
                   {"envelope", r.envelope_ok}};
    return j;
}

}  // namespace szk
