#pragma once

// Decomposition of a commuting pair (f, g) of diffeomorphisms of [lo, hi].
//
// F is the common fixed set (isolated points and fixed intervals); the gaps of
// F are the components U.  F0 collects the points where both maps are tangent
// to the identity to second order, together with the endpoints of the domain
// and of fixed intervals; its gaps are the components U0, each a union of
// U-components glued at non-flat common fixed points.
//
// On a component, g = f^tau in the flow of the Szekeres field of f.  A
// component is rational when f^p = g^q for coprime (p, q); then f = h^q and
// g = h^p with h = f^s g^r, pr + qs = 1.  Otherwise it is irrational and both
// maps are flow maps of a single field.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

#include "szk/core.hpp"
#include "szk/diffeo.hpp"
#include "szk/flow.hpp"
#include "szk/szekeres.hpp"
#include "szk/vector_field.hpp"

namespace szk {

struct FixedPoint {
    double x = 0.0;
    bool flat = false;
};

enum class Kind { Rational, Irrational };

inline const char* to_string(Kind k) { return k == Kind::Rational ? "rational" : "irrational"; }

/// A zero-free stretch of an irrational field with its time coordinate.
struct FieldPiece {
    Interval domain;
    VectorField1D nu;
    TimeCoordinatePtr tc;
};

struct GluePoint {
    double x = 0.0;
    double dnu_left = 0.0;   // one-sided difference quotients of the field
    double dnu_right = 0.0;
};

struct ComponentData {
    Interval domain;
    Kind kind = Kind::Rational;

    // rational: f^p = g^q, f = h^q, g = h^p, h = f^s o g^r with pr + qs = 1
    int p = 0, q = 0, r = 0, s = 0;
    Diffeo h;

    // irrational: f and g are the time-1 and time-tau maps of nu
    VectorField1D nu;
    double tau = 0.0;
    std::vector<FieldPiece> pieces;

    // diagnostics
    double tau_left = std::numeric_limits<double>::quiet_NaN();
    double tau_right = std::numeric_limits<double>::quiet_NaN();
    double tau_spread = 0.0;
    double confirm_residual = std::numeric_limits<double>::quiet_NaN();
    double generator_residual = std::numeric_limits<double>::quiet_NaN();
    double glue_mismatch = 0.0;
    std::vector<GluePoint> glue_points;
    std::string evidence;
};

struct Decomposition {
    Interval domain;
    std::vector<FixedPoint> F;               // isolated common fixed points (endpoints included)
    std::vector<Interval> fixed_intervals;   // maximal intervals where f = g = id
    std::vector<FixedPoint> F0;              // boundaries of the U0 components
    std::vector<Interval> components_U;
    std::vector<Interval> components_U0;
    std::vector<ComponentData> payloads;     // one per U0 component
    double commutation_residual = 0.0;
};

namespace detail {

struct FixedSet {
    std::vector<double> points;
    std::vector<Interval> intervals;
};

inline double bisect_root(const Diffeo& f, double a, double b) {
    double da = f.displacement(a);
    for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
        const double m = 0.5 * (a + b);
        if (m == a || m == b) break;
        const double dm = f.displacement(m);
        if (dm == 0.0) return m;
        if ((dm < 0.0) == (da < 0.0)) {
            a = m;
            da = dm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

/// Golden-section minimum of |f - id| on [a, b].
inline std::pair<double, double> touch_minimum(const Diffeo& f, double a, double b) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = std::abs(f.displacement(c)), fd = std::abs(f.displacement(d));
    for (int it = 0; it < 120 && b - a > 1e-14; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = std::abs(f.displacement(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = std::abs(f.displacement(d));
        }
    }
    const double x = 0.5 * (a + b);
    return {x, std::abs(f.displacement(x))};
}

inline FixedSet fixed_set(const Diffeo& f, const std::vector<double>& xs, double floor) {
    const std::size_t n = xs.size();
    std::vector<double> d(n);
    std::vector<bool> ident(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Jet j = f.jet(xs[i]);
        d[i] = j.disp;
        ident[i] = std::abs(j.disp) <= floor && std::abs(j.d1 - 1.0) <= 1e3 * floor;
    }
    FixedSet out;
    std::vector<bool> in_run(n, false);
    for (std::size_t i = 0; i < n;) {
        if (!ident[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && ident[j + 1]) ++j;
        if (j > i) {
            out.intervals.emplace_back(xs[i], xs[j]);
            for (std::size_t k = i; k <= j; ++k) in_run[k] = true;
        }
        i = j + 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (in_run[i]) continue;
        if (d[i] == 0.0) {
            out.points.push_back(xs[i]);
            continue;
        }
        if (i + 1 < n && !in_run[i + 1] && d[i + 1] != 0.0 && (d[i] < 0.0) != (d[i + 1] < 0.0))
            out.points.push_back(bisect_root(f, xs[i], xs[i + 1]));
        if (i > 0 && i + 1 < n && !in_run[i - 1] && !in_run[i + 1]) {
            const double a = std::abs(d[i - 1]), b = std::abs(d[i]), c = std::abs(d[i + 1]);
            const bool same = (d[i - 1] < 0.0) == (d[i] < 0.0) && (d[i + 1] < 0.0) == (d[i] < 0.0);
            if (same && b <= a && b <= c && b < 1e3 * floor) {
                const auto [x, v] = touch_minimum(f, xs[i - 1], xs[i + 1]);
                if (v <= floor) out.points.push_back(x);
            }
        }
    }
    std::sort(out.points.begin(), out.points.end());
    return out;
}

inline bool inside(const std::vector<Interval>& ivs, double x) {
    return std::any_of(ivs.begin(), ivs.end(), [&](const Interval& v) { return x >= v.lo && x <= v.hi; });
}

/// Gaps between sorted blocks (points are degenerate blocks).
inline std::vector<Interval> gaps(const Interval& dom, std::vector<std::pair<double, double>> blocks) {
    std::sort(blocks.begin(), blocks.end());
    std::vector<Interval> out;
    double cur = dom.lo;
    for (const auto& [a, b] : blocks) {
        if (a > cur) out.emplace_back(cur, a);
        cur = std::max(cur, b);
    }
    if (cur < dom.hi) out.emplace_back(cur, dom.hi);
    return out;
}

inline bool is_identity_on(const Diffeo& f, const std::vector<double>& probes, const Tolerances& tol) {
    for (double x : probes) {
        const Jet j = f.jet(x);
        if (std::abs(j.disp) > tol.eps_fixed || std::abs(j.d1 - 1.0) > tol.eps_flat) return false;
    }
    return true;
}

inline bool flat_at(const Diffeo& f, double c, const Tolerances& tol) {
    const Jet j = f.jet(c);
    return std::abs(j.d1 - 1.0) < tol.eps_flat && std::abs(j.d2) < tol.eps_flat;
}

/// One-sided derivative of the field at c by Richardson-extrapolated difference quotients.
inline double one_sided_derivative(const VectorField1D& nu, double c, double h, double dir) {
    auto q = [&](double step) { return (nu(c + dir * step) - nu(c)) / (dir * step); };
    return 2.0 * q(0.5 * h) - q(h);
}

}  // namespace detail

/// Continued-fraction convergents p/q of x with q <= qmax.
inline std::vector<std::pair<long long, long long>> convergents(double x, int qmax) {
    std::vector<std::pair<long long, long long>> out;
    long long h1 = 1, h2 = 0, k1 = 0, k2 = 1;
    double r = x;
    for (int it = 0; it < 64; ++it) {
        const double a = std::floor(r);
        if (std::abs(a) > 1e15) break;
        const long long ai = static_cast<long long>(a);
        const long long h = ai * h1 + h2, k = ai * k1 + k2;
        if (k > qmax) break;
        out.emplace_back(h, k);
        h2 = h1;
        h1 = h;
        k2 = k1;
        k1 = k;
        const double frac = r - a;
        if (frac < 1e-15) break;
        r = 1.0 / frac;
    }
    return out;
}

/// (r, s) with p r + q s = 1 and minimal |r| + |s|; ties go to s = 0, then r >= 0.
inline std::pair<int, int> bezout_coefficients(int p, int q) {
    if (q == 0) {
        if (std::abs(p) != 1) throw DomainError("bezout: p and q are not coprime");
        return {p, 0};
    }
    const int R = std::abs(p) + std::abs(q) + 1;
    bool found = false;
    int br = 0, bs = 0;
    for (int r = -R; r <= R; ++r) {
        const long long rem = 1 - static_cast<long long>(p) * r;
        if (rem % q != 0) continue;
        const int s = static_cast<int>(rem / q);
        auto key = [](int rr, int ss) { return std::make_tuple(std::abs(rr) + std::abs(ss), ss != 0, rr < 0); };
        if (!found || key(r, s) < key(br, bs)) {
            br = r;
            bs = s;
            found = true;
        }
    }
    if (!found) throw DomainError("bezout: p and q are not coprime");
    return {br, bs};
}

struct Generator {
    Diffeo h;
    int r = 0, s = 0;
    double residual = 0.0;  // max of sup|h^q - f| and sup|h^p - g|
};

/// h = f^s o g^r, verified against f = h^q and g = h^p on the component.
inline Generator bezout_generator(const Diffeo& f, const Diffeo& g, int p, int q, const Interval& comp,
                                  const Tolerances& tol = {}) {
    const Diffeo fc = f.with_domain(comp), gc = g.with_domain(comp);
    const auto [r, s] = bezout_coefficients(p, q);
    Generator out;
    out.r = r;
    out.s = s;
    if (s == 0) out.h = iterate(gc, r);
    else if (r == 0) out.h = iterate(fc, s);
    else {
        // f^s o g^r written as an interleaved word so the running power of h
        // stays between -max(p,q) and max(p,q) instead of reaching s*q
        const Diffeo fi = invert(fc), gi = invert(gc);
        int fs = s, gr = r, e = 0;
        std::optional<Diffeo> acc;
        while (fs != 0 || gr != 0) {
            const bool up = e <= 0;
            const Diffeo* step = nullptr;
            if (fs != 0 && ((fs > 0) == up || gr == 0)) {
                step = fs > 0 ? &fc : &fi;
                e += fs > 0 ? q : -q;
                fs += fs > 0 ? -1 : 1;
            } else {
                step = gr > 0 ? &gc : &gi;
                e += gr > 0 ? p : -p;
                gr += gr > 0 ? -1 : 1;
            }
            acc = acc ? compose(*step, *acc) : *step;
        }
        out.h = *acc;
    }
    const auto probes = cosine_grid(comp.lo, comp.hi, 257);
    out.residual = std::max(sup_distance(iterate(out.h, q), fc, probes), sup_distance(iterate(out.h, p), gc, probes));
    if (!(out.residual < tol.eps_comp))
        throw ClassificationError("bezout generator fails verification (residual " + format_double(out.residual) + ")");
    return out;
}

/// Field glued from a left-anchored and a right-anchored computation at the midpoint.
inline VectorField1D glue_at_midpoint(const VectorField1D& left, const VectorField1D& right, const Interval& comp) {
    VectorField1D out;
    out.domain = comp;
    const double mid = comp.mid();
    for (std::size_t i = 0; i < left.size(); ++i)
        if (left.x[i] <= mid) {
            out.x.push_back(left.x[i]);
            out.nu.push_back(left.nu[i]);
            out.dnu.push_back(left.dnu[i]);
        }
    for (std::size_t i = 0; i < right.size(); ++i)
        if (right.x[i] > mid) {
            out.x.push_back(right.x[i]);
            out.nu.push_back(right.nu[i]);
            out.dnu.push_back(right.dnu[i]);
        }
    return out;
}

inline ComponentData classify_component(const Diffeo& f, const Diffeo& g, const Interval& comp,
                                        const Tolerances& tol = {}) {
    const Diffeo fc = f.with_domain(comp), gc = g.with_domain(comp);
    ComponentData c;
    c.domain = comp;
    const auto probes = cosine_grid(comp.lo, comp.hi, 257);
    if (detail::is_identity_on(fc, probes, tol)) {
        c.kind = Kind::Rational;
        c.p = 1, c.q = 0, c.r = 1, c.s = 0;
        c.h = gc;
        c.evidence = "f is the identity on the component";
        return c;
    }
    if (detail::is_identity_on(gc, probes, tol)) {
        c.kind = Kind::Rational;
        c.p = 0, c.q = 1, c.r = 0, c.s = 1;
        c.h = fc;
        c.evidence = "g is the identity on the component";
        return c;
    }

    // start from the more hyperbolic end
    const double ml = std::abs(std::log(fc.jet(comp.lo).d1)), mr = std::abs(std::log(fc.jet(comp.hi).d1));
    const Side first = ml >= mr * (1.0 - 1e-9) ? Side::Left : Side::Right;
    // the centralizer only looks at the middle half and its images
    double reach_lo = comp.hi, reach_hi = comp.lo;
    for (double x : middle_probes(comp, 17))
        for (double y : {x, fc(x), gc(x)}) {
            reach_lo = std::min(reach_lo, y);
            reach_hi = std::max(reach_hi, y);
        }
    const double margin = 0.01 * comp.length();
    auto field_from = [&](Side side) {
        const double to = side == Side::Left ? reach_hi + margin : reach_lo - margin;
        return szekeres_values(fc, side, szekeres_nodes(comp, side, tol), tol, to);
    };
    const auto r1 = field_from(first);
    const auto tc1 = time_coordinate(r1.field);
    const auto ct1 = centralizer_time(fc, gc, tc1, tol, comp);
    (first == Side::Left ? c.tau_left : c.tau_right) = ct1.tau;
    c.tau_spread = ct1.spread;

    const double window = std::max(tol.eps_rat, 10.0 * ct1.spread);
    for (const auto& [p, q] : convergents(ct1.tau, tol.q_max)) {
        if (std::abs(ct1.tau - static_cast<double>(p) / static_cast<double>(q)) >= window) continue;
        const int pi = static_cast<int>(p), qi = static_cast<int>(q);
        c.confirm_residual = sup_distance(iterate(fc, pi), iterate(gc, qi), probes);
        if (!(c.confirm_residual < tol.eps_comp))
            throw ClassificationError("tau = " + format_double(ct1.tau) + " is within " + format_double(window) +
                                      " of " + std::to_string(p) + "/" + std::to_string(q) +
                                      " but f^p = g^q fails (residual " + format_double(c.confirm_residual) + ")");
        const auto gen = bezout_generator(fc, gc, pi, qi, comp, tol);
        c.kind = Kind::Rational;
        c.p = pi, c.q = qi, c.r = gen.r, c.s = gen.s;
        c.h = gen.h;
        c.generator_residual = gen.residual;
        c.tau = ct1.tau;
        c.evidence = "convergent " + std::to_string(p) + "/" + std::to_string(q) + " confirmed";
        return c;
    }

    // irrational: the field from the other end must give the same time
    const Side second = first == Side::Left ? Side::Right : Side::Left;
    const auto r2 = field_from(second);
    const auto ct2 = centralizer_time(fc, gc, time_coordinate(r2.field), tol, comp);
    (second == Side::Left ? c.tau_left : c.tau_right) = ct2.tau;
    if (std::abs(ct1.tau - ct2.tau) > tol.eps_tau)
        throw ClassificationError("left and right centralizer times disagree: " + format_double(c.tau_left) + " vs " +
                                  format_double(c.tau_right));
    const auto& lf = first == Side::Left ? r1.field : r2.field;
    const auto& rf = first == Side::Left ? r2.field : r1.field;
    c.kind = Kind::Irrational;
    c.nu = glue_at_midpoint(lf, rf, comp);
    const auto tc = time_coordinate(c.nu);
    const auto ct = centralizer_time(fc, gc, tc, tol);
    c.tau = ct.tau;
    c.tau_spread = std::max(c.tau_spread, ct.spread);
    c.pieces.push_back({comp, c.nu, tc});
    c.evidence = "no convergent with q <= " + std::to_string(tol.q_max) + " within " + format_double(window);
    return c;
}

/// Combine the payloads of the U-components inside one U0-component.
inline ComponentData takens_merge(const Diffeo& f, const Diffeo& g, const Interval& comp0,
                                  const std::vector<ComponentData>& inner, const Tolerances& tol = {}) {
    if (inner.empty()) throw DomainError("takens merge: no inner components");
    if (inner.size() == 1 && inner.front().domain == comp0) return inner.front();
    const bool any_rational = std::any_of(inner.begin(), inner.end(), [](const auto& c) { return c.kind == Kind::Rational; });
    const bool all_rational = std::all_of(inner.begin(), inner.end(), [](const auto& c) { return c.kind == Kind::Rational; });
    if (any_rational != all_rational)
        throw ClassificationError("takens merge: inner components of mixed type on [" + format_double(comp0.lo) + ", " +
                                  format_double(comp0.hi) + "]");
    ComponentData out;
    out.domain = comp0;
    if (all_rational) {
        const int p = inner.front().p, q = inner.front().q;
        for (const auto& c : inner)
            if (c.p != p || c.q != q)
                throw ClassificationError("takens merge: inner components disagree on (p, q)");
        const auto gen = bezout_generator(f, g, p, q, comp0, tol);
        out.kind = Kind::Rational;
        out.p = p, out.q = q, out.r = gen.r, out.s = gen.s;
        out.h = gen.h;
        out.generator_residual = gen.residual;
        out.evidence = "merged " + std::to_string(inner.size()) + " rational components";
        return out;
    }

    out.kind = Kind::Irrational;
    double tau_sum = 0.0;
    for (const auto& c : inner) {
        if (std::abs(c.tau - inner.front().tau) > tol.eps_tau)
            throw ClassificationError("takens merge: centralizer times disagree across inner components");
        tau_sum += c.tau;
        out.tau_spread = std::max(out.tau_spread, c.tau_spread);
        for (const auto& piece : c.pieces) out.pieces.push_back(piece);
    }
    out.tau = tau_sum / static_cast<double>(inner.size());
    out.tau_left = inner.front().tau_left;
    out.tau_right = inner.back().tau_right;

    VectorField1D& nu = out.nu;
    nu.domain = comp0;
    for (std::size_t k = 0; k < inner.size(); ++k) {
        const auto& fld = inner[k].nu;
        const std::size_t start = k == 0 ? 0 : 1;  // the shared zero is already present
        for (std::size_t i = start; i < fld.size(); ++i) {
            nu.x.push_back(fld.x[i]);
            nu.nu.push_back(fld.nu[i]);
            nu.dnu.push_back(fld.dnu[i]);
        }
        if (k + 1 < inner.size()) {
            const auto& next = inner[k + 1].nu;
            const double c = fld.x.back();
            const double h = 1e-4 * std::min(fld.domain.length(), next.domain.length());
            GluePoint gp{c, detail::one_sided_derivative(fld, c, h, -1.0), detail::one_sided_derivative(next, c, h, 1.0)};
            out.glue_points.push_back(gp);
            out.glue_mismatch = std::max(out.glue_mismatch, std::abs(gp.dnu_left - gp.dnu_right));
            nu.nu.back() = 0.0;
            nu.dnu.back() = 0.5 * (fld.dnu.back() + next.dnu.front());
            nu.interior_zeros.push_back(c);
        }
    }
    if (out.glue_mismatch > tol.eps_glue)
        throw ClassificationError("takens merge: derivative mismatch " + format_double(out.glue_mismatch) +
                                  " at a gluing point");
    out.evidence = "merged " + std::to_string(inner.size()) + " irrational components";
    return out;
}

/// Sup of |f o g - g o f| on a cosine grid.
inline double commutation_residual(const Diffeo& f, const Diffeo& g, std::size_t n = 2049) {
    double worst = 0.0;
    for (double x : cosine_grid(f.domain().lo, f.domain().hi, n)) worst = std::max(worst, std::abs(f(g(x)) - g(f(x))));
    return worst;
}

/// Common fixed points and the components of their complement.
inline std::pair<std::vector<FixedPoint>, std::vector<Interval>> common_fixed_points(
    const Diffeo& f, const Diffeo& g, std::vector<Interval>* fixed_intervals = nullptr, const Tolerances& tol = {}) {
    require_same_domain(f, g);
    const Interval dom = f.domain();
    const auto xs = cosine_grid(dom.lo, dom.hi, tol.grid);
    const auto sf = detail::fixed_set(f, xs, tol.eps_fixed);
    const auto sg = detail::fixed_set(g, xs, tol.eps_fixed);

    std::vector<Interval> ivs;
    for (const auto& a : sf.intervals)
        for (const auto& b : sg.intervals) {
            const double lo = std::max(a.lo, b.lo), hi = std::min(a.hi, b.hi);
            if (hi > lo) ivs.emplace_back(lo, hi);
        }
    const double common_tol = 1e3 * tol.eps_fixed;
    std::vector<double> pts{dom.lo, dom.hi};
    for (double p : sf.points)
        if (detail::inside(sg.intervals, p) || std::abs(g.displacement(p)) <= common_tol) pts.push_back(p);
    for (double p : sg.points)
        if (detail::inside(sf.intervals, p) || std::abs(f.displacement(p)) <= common_tol) pts.push_back(p);
    std::sort(pts.begin(), pts.end());

    std::vector<FixedPoint> F;
    for (double p : pts) {
        if (detail::inside(ivs, p) && p != dom.lo && p != dom.hi) continue;
        if (!F.empty() && p - F.back().x < 1e-12) continue;
        F.push_back({p, detail::flat_at(f, p, tol) && detail::flat_at(g, p, tol)});
    }
    std::vector<std::pair<double, double>> blocks;
    for (const auto& p : F) blocks.emplace_back(p.x, p.x);
    for (const auto& v : ivs) blocks.emplace_back(v.lo, v.hi);
    if (fixed_intervals) *fixed_intervals = ivs;
    return {F, detail::gaps(dom, blocks)};
}

/// Flat common fixed points: both maps tangent to the identity to second order.
inline std::vector<FixedPoint> flat_points(const Diffeo& f, const Diffeo& g, const std::vector<FixedPoint>& F,
                                           const Tolerances& tol = {}) {
    std::vector<FixedPoint> out;
    for (const auto& p : F)
        if (detail::flat_at(f, p.x, tol) && detail::flat_at(g, p.x, tol)) out.push_back({p.x, true});
    return out;
}

inline Decomposition decompose(const Diffeo& f, const Diffeo& g, const Tolerances& tol = {}) {
    tol.validate();
    require_same_domain(f, g);
    check_endpoints(f);
    check_endpoints(g);
    Decomposition d;
    d.domain = f.domain();
    d.commutation_residual = commutation_residual(f, g);
    if (d.commutation_residual > tol.eps_comm)
        throw CommutationError("f and g do not commute (residual " + format_double(d.commutation_residual) + ")",
                               d.commutation_residual);
    auto [F, U] = common_fixed_points(f, g, &d.fixed_intervals, tol);
    d.F = F;
    d.components_U = U;

    // U0 boundaries: flat points, the domain endpoints and the fixed intervals
    std::vector<std::pair<double, double>> blocks;
    for (const auto& p : d.F)
        if (p.flat || p.x == d.domain.lo || p.x == d.domain.hi) {
            d.F0.push_back(p);
            blocks.emplace_back(p.x, p.x);
        }
    for (const auto& v : d.fixed_intervals) {
        blocks.emplace_back(v.lo, v.hi);
        for (double e : {v.lo, v.hi})
            if (std::none_of(d.F0.begin(), d.F0.end(), [&](const FixedPoint& q) { return q.x == e; }))
                d.F0.push_back({e, true});
    }
    std::sort(d.F0.begin(), d.F0.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
    d.components_U0 = detail::gaps(d.domain, blocks);

    std::vector<ComponentData> inner_all;
    for (const auto& u : d.components_U) inner_all.push_back(classify_component(f, g, u, tol));
    for (const auto& u0 : d.components_U0) {
        std::vector<ComponentData> inner;
        for (const auto& c : inner_all)
            if (c.domain.lo >= u0.lo && c.domain.hi <= u0.hi) inner.push_back(c);
        d.payloads.push_back(takens_merge(f, g, u0, inner, tol));
    }
    return d;
}

}  // namespace szk
