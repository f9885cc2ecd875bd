#pragma once

// The Szekeres vector field of a diffeomorphism of [a,b) fixing only a:
//
//   nu = lambda * lim_k (f^k)* eta0,   eta0 = f - id,
//
// computed node by node.  Along the orbit y_k = f^k(x) we carry D_k = Df^k(x)
// and L_k = D^2 f^k / Df^k, so that (f^k)* sigma (x) = sigma(y_k) / D_k and its
// derivative is D sigma(y_k) - ((f^k)* sigma)(x) L_k.
//
// The seed is not lambda*eta0 but a second-order local approximation of the
// field built from the jet of f at y:
//
//   sigma(y) = d G(m) - (f''/2) Q(m) d^2,   d = f(y) - y,  m = Df(y),
//
// with G(m) = log m / (m - 1).  sigma/eta0 -> lambda at a, so the limit is the
// same, but the relative error of the seed is O(d^2) instead of O(d) and far
// fewer iterations are needed near parabolic points.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "szk/core.hpp"
#include "szk/diffeo.hpp"
#include "szk/flow.hpp"
#include "szk/vector_field.hpp"

namespace szk {

enum class Direction { Contracting, Expanding };

inline const char* to_string(Direction d) { return d == Direction::Contracting ? "contracting" : "expanding"; }
inline const char* to_string(Side s) { return s == Side::Left ? "left" : "right"; }

struct SzekeresResult {
    VectorField1D field;
    double lambda = 1.0;
    std::size_t iterations_used = 0;
    double c1_residual = 0.0;
    Direction direction = Direction::Contracting;
    Side side = Side::Left;
    Interval trust;                         // audits take sups here
    std::vector<double> increment_tail;     // sup C1 increment per step k = 1, 2, ...
    bool tail_monotone = true;              // eventually decreasing
};

namespace detail {

/// log m / (m - 1) and its derivative in m.
inline std::pair<long double, long double> G_pair(long double m) {
    const long double u = m - 1.0L;
    if (std::abs(u) < 1e-4L) {
        const long double g = 1 - u / 2 + u * u / 3 - u * u * u / 4 + u * u * u * u / 5;
        const long double dg = -0.5L + 2 * u / 3 - 3 * u * u / 4 + 4 * u * u * u / 5;
        return {g, dg};
    }
    const long double k = std::log1p(u);
    return {k / u, (u / m - k) / (u * u)};
}

/// Second-order coefficient of the seed and its derivative in m.
inline std::pair<long double, long double> Q_pair(long double m) {
    const long double u = m - 1.0L;
    if (std::abs(u) < 0.02L) {
        const long double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
        const long double q = -1.0L / 6 + u / 3 - 29 * u2 / 60 + 37 * u3 / 60 - 103 * u4 / 140 + 59 * u5 / 70;
        const long double dq = 1.0L / 3 - 29 * u / 30 + 37 * u2 / 20 - 103 * u3 / 35 + 59 * u4 / 14;
        return {q, dq};
    }
    const long double k = std::log1p(u);
    const long double N = k / m + 2 / m - 2 * k / u;
    const long double dN = (-1 - k) / (m * m) - 2 / (m * u) + 2 * k / (u * u);
    return {N / (u * u), dN / (u * u) - 2 * N / (u * u * u)};
}

/// Seed value and derivative from the jet of f at y (third derivative dropped).
inline std::pair<double, double> seed(const Jet& j) {
    const long double d = j.disp, m = j.d1, f2 = j.d2;
    const auto [g, dg] = G_pair(m);
    const auto [q, dq] = Q_pair(m);
    const long double v = d * g - 0.5L * f2 * q * d * d;
    const long double dv = (m - 1) * g + d * dg * f2 - 0.5L * f2 * (2 * q * d * (m - 1) + dq * f2 * d * d);
    return {static_cast<double>(v), static_cast<double>(dv)};
}

struct PullbackOutcome {
    std::vector<double> nu, dnu, last_increment;
    std::vector<std::size_t> steps;
    std::vector<bool> converged;
    std::vector<double> tail;
};

/// Hermite value and derivative of the computed prefix nodes[0..m] at y.
inline std::pair<double, double> prefix_eval(const std::vector<double>& x, const std::vector<double>& v,
                                             const std::vector<double>& d, std::size_t m, double y) {
    std::size_t i = static_cast<std::size_t>(std::upper_bound(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m) + 1, y) - x.begin());
    i = i == 0 ? 0 : std::min(i - 1, m - 1);
    const double h = x[i + 1] - x[i], t = (y - x[i]) / h, t2 = t * t, t3 = t2 * t;
    const double val = (2 * t3 - 3 * t2 + 1) * v[i] + (t3 - 2 * t2 + t) * h * d[i] + (-2 * t3 + 3 * t2) * v[i + 1] +
                       (t3 - t2) * h * d[i + 1];
    const double der = ((6 * t2 - 6 * t) * v[i] + (-6 * t2 + 6 * t) * v[i + 1]) / h + (3 * t2 - 4 * t + 1) * d[i] +
                       (3 * t2 - 2 * t) * d[i + 1];
    return {val, der};
}

/// Pullback iteration for a map contracting every node toward the anchor a.
///
/// A node stops when the C1 increment is below eps_conv and the value has
/// settled to ~1e-13 relative; the relative polish gets a bounded number of
/// extra steps, since near parabolic anchors it is only algebraic.  Rounding
/// in the displacement (about eps * scale, scale being the size of the original
/// coordinates) is amplified by 1/D_k, so once increments grow again from
/// that level the previous value is kept.
///
/// Nodes are processed outward from the anchor.  A node that has settled in
/// the absolute sense, or is still unsettled after relay_after steps, follows
/// its orbit until it passes the previous node and takes
/// nu(x) = nu(f^k x) / Df^k(x) from the converged prefix.  Near a parabolic
/// point this is what keeps crawling orbits affordable and small values
/// relatively accurate.
inline PullbackOutcome pullback_limit(const MapNode& f, double a, double scale, const std::vector<double>& nodes,
                                      const Tolerances& tol, double required_up_to = std::numeric_limits<double>::infinity()) {
    constexpr std::size_t polish_steps = 2000;
    constexpr std::size_t relay_after = 1000;
    const std::size_t n = nodes.size();
    PullbackOutcome out;
    out.nu.resize(n);
    out.dnu.resize(n);
    out.last_increment.assign(n, 0.0);
    out.steps.assign(n, 0);
    out.converged.assign(n, false);
    std::size_t prefix_ok = 0;  // nodes[0..prefix_ok) all converged
    double prefix_inc = 0.0;
    bool given_up = false;
    for (std::size_t i = 0; i < n; ++i) {
        double y = nodes[i], D = 1.0, L = 0.0;
        Jet j = f.jet(y);
        auto [s, ds] = seed(j);
        double v = s, dv = ds;
        if (given_up) {
            // past a failure outside the required range: keep the seed
            out.nu[i] = v;
            out.dnu[i] = dv;
            continue;
        }
        double inc = std::numeric_limits<double>::infinity();
        std::size_t k = 0, settled_at = 0;
        double last_disp = std::abs(j.disp);
        bool past = false;
        bool ok = false;
        const std::size_t cap = nodes[i] > required_up_to ? std::min<std::size_t>(tol.max_iter, 2 * relay_after) : tol.max_iter;
        while (k < cap) {
            if (y + j.disp == y) {
                // the orbit cannot move in floating point: the value is final,
                // unless the displacement itself was lost to rounding
                ok = j.disp != 0.0 || y == a;
                break;
            }
            // advance the orbit by one step
            L += (j.d2 / j.d1) * D;
            D *= j.d1;
            y += j.disp;
            ++k;
            if (D < 1e-280 || (a == 0.0 && std::abs(y) < 1e-280)) {
                ok = true;  // orbit underflowed; the current value is as good as it gets
                break;
            }
            if ((k >= relay_after || settled_at > 0) && prefix_ok == i && i >= 2 && y <= nodes[i - 1] && y >= nodes[0]) {
                const auto [pv, pd] = prefix_eval(nodes, out.nu, out.dnu, i - 1, y);
                v = pv / D;
                dv = pd - v * L;
                inc = prefix_inc;
                ok = true;
                break;
            }
            j = f.jet(y);
            const auto [s1, ds1] = seed(j);
            const double v1 = s1 / D;
            const double dv1 = ds1 - v1 * L;
            const double dval = std::abs(v1 - v), dder = std::abs(dv1 - dv);
            const double inc1 = dval + dder;
            // orbits starting near the far end creep at first; judge only
            // once the displacement has started to shrink
            past = past || std::abs(j.disp) < last_disp;
            last_disp = std::abs(j.disp);
            // relative rounding level of the seed: the displacement carries an
            // absolute error of order eps times the coordinate scale
            const double noise = 0x1p-52 * std::max(std::abs(y), scale) / std::abs(j.disp);
            const bool small = dval <= 100.0 * noise * std::abs(v) && dder <= 1e-6 * std::max(1.0, std::abs(dv));
            if (past && small && inc1 > inc) {
                ok = true;  // rounding floor: keep the previous value
                break;
            }
            if (out.tail.size() < k) out.tail.resize(k, 0.0);
            out.tail[k - 1] = std::max(out.tail[k - 1], inc1);
            inc = inc1;
            v = v1;
            dv = dv1;
            if (past && inc < tol.eps_conv) {
                if (settled_at == 0) settled_at = k;
                if (dval <= 1e-3 * tol.eps_conv * std::abs(v) || k - settled_at >= polish_steps) {
                    ok = true;
                    break;
                }
            }
        }
        out.nu[i] = v;
        out.dnu[i] = dv;
        out.last_increment[i] = std::isfinite(inc) ? inc : 0.0;
        out.steps[i] = k;
        out.converged[i] = ok;
        if (!ok && nodes[i] > required_up_to) given_up = true;
        if (ok && prefix_ok == i) {
            ++prefix_ok;
            prefix_inc = std::max(prefix_inc, out.last_increment[i]);
        }
    }
    return out;
}

/// The map reduced to a left anchor: reflect for the right side.
inline Diffeo left_anchored(const Diffeo& f, Side side) { return side == Side::Left ? f : reflect(f); }

/// Reduced nodes: x -> lo + (hi - x) for the right side, in increasing order.
inline std::vector<double> left_nodes(const Interval& dom, const std::vector<double>& nodes, Side side) {
    if (side == Side::Left) return nodes;
    std::vector<double> r(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) r[nodes.size() - 1 - i] = dom.lo + (dom.hi - nodes[i]);
    return r;
}

/// Sign of f - id on the interior of the reduced map, checked on the given nodes.
inline Direction direction_of(const Diffeo& fl, const std::vector<double>& nodes, double lo, double hi) {
    int sign = 0;
    for (double x : nodes) {
        if (x <= lo || x >= hi) continue;
        const double d = fl.displacement(x);
        const int s = d < 0.0 ? -1 : (d > 0.0 ? 1 : 0);
        if (s == 0 || (sign != 0 && s != sign))
            throw DomainError("szekeres: f has a fixed point in the interior near x = " + format_double(x));
        sign = s;
    }
    if (sign == 0) throw DomainError("szekeres: f is the identity");
    return sign < 0 ? Direction::Contracting : Direction::Expanding;
}

}  // namespace detail

/// log m / (m - 1), or 1 when m = 1.
inline double lambda_of(double m) { return static_cast<double>(detail::G_pair(m).first); }

/// Default nodes of a component: cosine grid truncated at the open end.
inline std::vector<double> szekeres_nodes(const Interval& dom, Side side, const Tolerances& tol = {}) {
    const double e = tol.eps_edge * dom.length();
    return side == Side::Left ? cosine_grid(dom.lo, dom.hi - e, tol.grid) : cosine_grid(dom.lo + e, dom.hi, tol.grid);
}

inline Interval trust_region(const Interval& dom, const Tolerances& tol = {}) {
    const double r = tol.trust * dom.length();
    return {dom.lo + r, dom.hi - r};
}

/// Szekeres field of f anchored at the fixed endpoint given by `side`, on arbitrary nodes.
/// With required_to set, convergence is only demanded between the anchor and
/// that point (the trust region shrinks accordingly); farther nodes get a
/// short step budget and the field is cut at the first one that fails.
inline SzekeresResult szekeres_values(const Diffeo& f, Side side, const std::vector<double>& nodes,
                                      const Tolerances& tol = {}, std::optional<double> required_to = std::nullopt) {
    const Interval dom = f.domain();
    Interval trust = trust_region(dom, tol);
    if (required_to) {
        if (side == Side::Left) trust.hi = std::min(trust.hi, std::max(*required_to, trust.lo));
        else trust.lo = std::max(trust.lo, std::min(*required_to, trust.hi));
    }
    const double anchor = side == Side::Left ? dom.lo : dom.hi;
    if (std::abs(f.displacement(anchor)) > 1e-12 * dom.length())
        throw DomainError("szekeres: the anchor endpoint is not fixed");

    const Diffeo fl = detail::left_anchored(f, side);
    const std::vector<double> xl = detail::left_nodes(dom, nodes, side);
    const Interval tl = side == Side::Left ? trust : Interval(dom.lo + (dom.hi - trust.hi), dom.lo + (dom.hi - trust.lo));
    const auto probes = cosine_grid(tl.lo, tl.hi, 257);
    const Direction dir = detail::direction_of(fl, probes, dom.lo, dom.hi);

    const Diffeo g = dir == Direction::Contracting ? fl : invert(fl);
    const double scale = side == Side::Left ? std::abs(dom.lo) : std::max(std::abs(dom.lo), std::abs(dom.hi));
    auto pb = detail::pullback_limit(*g.node(), dom.lo, scale, xl, tol, tl.hi);
    if (dir == Direction::Expanding)
        for (std::size_t i = 0; i < xl.size(); ++i) {
            pb.nu[i] = -pb.nu[i];
            pb.dnu[i] = -pb.dnu[i];
        }

    SzekeresResult r;
    r.side = side;
    r.direction = dir;
    r.trust = trust;
    r.lambda = lambda_of(f.jet(anchor).d1);
    r.increment_tail = pb.tail;
    const std::size_t n = nodes.size();
    r.field.domain = Interval(nodes.front(), nodes.back());
    r.field.x = nodes;
    r.field.nu.resize(n);
    r.field.dnu.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        // node i of the input corresponds to reduced node i (left) or n-1-i (right)
        const std::size_t j = side == Side::Left ? i : n - 1 - i;
        r.field.nu[i] = side == Side::Left ? pb.nu[j] : -pb.nu[j];
        r.field.dnu[i] = pb.dnu[j];
        r.iterations_used = std::max(r.iterations_used, pb.steps[j]);
        if (trust.contains(nodes[i])) {
            if (!pb.converged[j])
                throw ConvergenceError("szekeres: no convergence at x = " + format_double(nodes[i]) + " after " +
                                           std::to_string(pb.steps[j]) + " steps",
                                       pb.last_increment[j]);
            r.c1_residual = std::max(r.c1_residual, pb.last_increment[j]);
        }
        if (nodes[i] == anchor) r.field.nu[i] = 0.0;
    }
    if (required_to) {
        // keep only the converged stretch next to the anchor
        std::size_t m = 0;
        while (m < n && pb.converged[m]) ++m;
        m = std::max<std::size_t>(m, 4);
        if (m < n) {
            const auto first = static_cast<std::ptrdiff_t>(side == Side::Left ? 0 : n - m);
            auto cut = [&](std::vector<double>& v) {
                v = std::vector<double>(v.begin() + first, v.begin() + first + static_cast<std::ptrdiff_t>(m));
            };
            cut(r.field.x);
            cut(r.field.nu);
            cut(r.field.dnu);
            r.field.domain = Interval(r.field.x.front(), r.field.x.back());
        }
    }
    // eventually decreasing: once the tail has fallen below 1% of its peak it
    // must not rise again (increments under 1e-14 are rounding noise)
    const auto& t = r.increment_tail;
    if (!t.empty()) {
        const double peak = *std::max_element(t.begin(), t.end());
        std::size_t k0 = 0;
        while (k0 < t.size() && t[k0] >= 0.01 * peak) ++k0;
        for (std::size_t k = k0 + 1; k < t.size(); ++k)
            if (t[k] > t[k - 1] * (1.0 + 1e-6) && t[k] > 1e-14) r.tail_monotone = false;
    }
    return r;
}

inline SzekeresResult szekeres_field(const Diffeo& f, Side side = Side::Left, const Tolerances& tol = {}) {
    return szekeres_values(f, side, szekeres_nodes(f.domain(), side, tol), tol);
}

/// Plain pullbacks (f^k)* eta0 for k = 0..K on the nodes of the reduced
/// (left-anchored, contracting) map; eta[k][i] and deta[k][i].
struct PullbackIterates {
    std::vector<double> x;  // reduced nodes
    std::vector<std::vector<double>> eta, deta;
};

inline PullbackIterates pullback_iterates(const Diffeo& f, Side side, const std::vector<double>& nodes, int K) {
    const Interval dom = f.domain();
    const Diffeo fl = detail::left_anchored(f, side);
    PullbackIterates out;
    out.x = detail::left_nodes(dom, nodes, side);
    const auto probes = cosine_grid(out.x.front(), out.x.back(), 257);
    const Diffeo g = detail::direction_of(fl, probes, dom.lo, dom.hi) == Direction::Contracting ? fl : invert(fl);
    const std::size_t n = out.x.size();
    out.eta.assign(K + 1, std::vector<double>(n));
    out.deta.assign(K + 1, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        double y = out.x[i], D = 1.0, L = 0.0;
        for (int k = 0; k <= K; ++k) {
            const Jet j = g.jet(y);
            const double v = j.disp / D;
            out.eta[k][i] = v;
            out.deta[k][i] = (j.d1 - 1.0) - v * L;
            L += (j.d2 / j.d1) * D;
            D *= j.d1;
            y += j.disp;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Quantitative audit

/// Candidate bound for sup |log(nu / (f - id))|.
inline double u1(double d) { return d / (1 - d) + std::log(std::abs(std::log1p(-d)) / d); }

/// Candidate bound for sup |D nu|.
inline double u2(double d) {
    const double r = d / (1 - d);
    return (std::abs(std::log1p(-d)) / d) * (d + r * std::exp(r));
}

/// Candidate C1 bound per unit time for the flow: |f^t - id| <= t sup|nu| and
/// Df^t = exp(int D nu) give the two parts.
inline double v_bound(double d) { return std::max(std::exp(u1(d)) * d, std::expm1(u2(d))); }

/// Probe bound on ||f - id||_2 (sup of |f - x|, |Df - 1|, |D^2 f|) plus the
/// largest jump between neighbouring probes as a margin.
inline double certified_delta(const Diffeo& f, const Interval& on, std::size_t probes = 4097) {
    const auto xs = cosine_grid(on.lo, on.hi, probes);
    double sup = 0.0, jump = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const Jet j = f.jet(xs[i]);
        const double q = std::max({std::abs(j.disp), std::abs(j.d1 - 1.0), std::abs(j.d2)});
        sup = std::max(sup, q);
        if (i > 0) jump = std::max(jump, std::abs(q - prev));
        prev = q;
    }
    return sup + jump;
}

struct BoundAudit {
    double delta = 0.0;
    double log_ratio_sup = 0.0;
    double dnu_sup = 0.0;
    double theta_sup = 0.0;
    double u1_bound = 0.0;
    double u2_bound = 0.0;
    double v_bound = 0.0;
    bool log_ratio_ok = false;
    bool dnu_ok = false;
    bool theta_ok = false;          // |theta| <= delta/(1-delta) |f - x| pointwise
    double telescoping_sup = 0.0;   // sup |log(eta_j / eta_i)| over the stored iterates
    bool telescoping_ok = false;
    bool flow_c1_bound_ok = false;
    double flow_c1_worst_ratio = 0.0;  // max over t of ||f^t - id||_1 / (t v(delta))
    bool tail_monotone = true;
    Interval trust;
};

inline BoundAudit audit_bounds(const Diffeo& f, const SzekeresResult& res, const Tolerances& tol = {},
                               int iterates = 8) {
    BoundAudit a;
    a.trust = res.trust;
    a.tail_monotone = res.tail_monotone;
    a.delta = certified_delta(f, Interval(res.field.x.front(), res.field.x.back()));
    if (!(a.delta < 1.0)) throw DomainError("audit: certified delta " + format_double(a.delta) + " is not below 1");
    const double d = a.delta, r = d / (1 - d);
    a.u1_bound = u1(d);
    a.u2_bound = u2(d);
    a.v_bound = v_bound(d);

    const auto& F = res.field;
    for (std::size_t i = 0; i < F.size(); ++i) {
        if (!res.trust.contains(F.x[i])) continue;
        const double disp = f.displacement(F.x[i]);
        a.log_ratio_sup = std::max(a.log_ratio_sup, std::abs(std::log(F.nu[i] / disp)));
        a.dnu_sup = std::max(a.dnu_sup, std::abs(F.dnu[i]));
    }
    a.log_ratio_ok = a.log_ratio_sup <= a.u1_bound;
    a.dnu_ok = a.dnu_sup <= a.u2_bound;

    // theta = log(eta1 / eta0) and the telescoping bound on the stored iterates
    const auto it = pullback_iterates(f, res.side, F.x, iterates);
    const Interval dom = f.domain();
    a.theta_ok = true;
    for (std::size_t i = 0; i < it.x.size(); ++i) {
        const double xo = res.side == Side::Left ? it.x[i] : dom.lo + (dom.hi - it.x[i]);
        if (!res.trust.contains(xo)) continue;
        const double th = std::log(it.eta[1][i] / it.eta[0][i]);
        a.theta_sup = std::max(a.theta_sup, std::abs(th));
        if (std::abs(th) > r * std::abs(it.eta[0][i]) * (1 + 1e-9) + 1e-15) a.theta_ok = false;
        for (int p = 0; p <= iterates; ++p)
            for (int q = p + 1; q <= iterates; ++q)
                a.telescoping_sup = std::max(a.telescoping_sup, std::abs(std::log(it.eta[q][i] / it.eta[p][i])));
    }
    a.telescoping_ok = a.telescoping_sup <= r;

    // ||f^t - id||_1 <= t v(delta) on the trust region
    const auto tc = time_coordinate(F);
    const auto probes = cosine_grid(res.trust.lo, res.trust.hi, 513);
    a.flow_c1_bound_ok = true;
    for (int k = 1; k <= 10; ++k) {
        const double t = 0.1 * k;
        double norm = 0.0;
        for (double x : probes) {
            const Jet j = tc->flow_jet(x, t);
            norm = std::max({norm, std::abs(j.disp), std::abs(j.d1 - 1.0)});
        }
        const double ratio = norm / (t * a.v_bound);
        a.flow_c1_worst_ratio = std::max(a.flow_c1_worst_ratio, ratio);
        if (ratio > 1.0) a.flow_c1_bound_ok = false;
    }
    (void)tol;
    return a;
}

/// sup over the trust region of |nu_{f^2} - 2 nu_f| / max(|nu_f|, floor).
inline double scaling_check(const Diffeo& f, Side side = Side::Left, const Tolerances& tol = {}) {
    const auto r1 = szekeres_field(f, side, tol);
    const auto r2 = szekeres_values(iterate(f, 2), side, r1.field.x, tol);
    double scale = 0.0;
    for (double v : r1.field.nu) scale = std::max(scale, std::abs(v));
    const double floor = 1e-12 * scale;
    double worst = 0.0;
    for (std::size_t i = 0; i < r1.field.size(); ++i) {
        if (!r1.trust.contains(r1.field.x[i])) continue;
        const double num = std::abs(r2.field.nu[i] - 2.0 * r1.field.nu[i]);
        worst = std::max(worst, num / std::max(std::abs(r1.field.nu[i]), floor));
    }
    return worst;
}

}  // namespace szk
