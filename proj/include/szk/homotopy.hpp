#pragma once

// The path t -> (f_t, g_t) from a commuting pair at t = 0 to (id, id) at t = 1.
//
// On a rational component (f = h^q, g = h^p) the generator is pulled straight
// to the identity, h_t = (1-t) h + t id, and f_t = h_t^q, g_t = h_t^p.  On an
// irrational component f_t and g_t are the flow maps of the component field at
// times 1-t and (1-t) tau.  Points of F0 and fixed intervals stay fixed.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "szk/core.hpp"
#include "szk/diffeo.hpp"
#include "szk/flow.hpp"
#include "szk/structure.hpp"
#include "szk/szekeres.hpp"
#include "szk/vector_field.hpp"

namespace szk {

namespace detail {

/// Identity off the listed open intervals, the given node on each of them.
class ComponentwiseMap final : public MapNode {
public:
    ComponentwiseMap(std::vector<Interval> doms, std::vector<NodePtr> nodes)
        : doms_(std::move(doms)), nodes_(std::move(nodes)) {}
    [[nodiscard]] Jet jet(double x) const override {
        const auto it = std::upper_bound(doms_.begin(), doms_.end(), x,
                                         [](double v, const Interval& d) { return v < d.hi; });
        if (it == doms_.end() || !(x > it->lo)) return identity_jet(x);
        return nodes_[static_cast<std::size_t>(it - doms_.begin())]->jet(x);
    }

private:
    std::vector<Interval> doms_;
    std::vector<NodePtr> nodes_;
};

/// The deviation bound for the field of a map with ||f - id||_2 < d.
inline double u_bound(double d) {
    if (d <= 0.0) return 0.0;
    if (d >= 1.0) return std::numeric_limits<double>::infinity();
    return std::max(u1(d), u2(d));
}

}  // namespace detail

struct PathComponent {
    Interval domain;
    Kind kind = Kind::Rational;
    int p = 0, q = 0;
    Diffeo h;
    double tau = 0.0;
    std::vector<FieldPiece> pieces;
};

struct PathMaps {
    Diffeo f, g;
};

class HomotopyPath {
public:
    HomotopyPath(Diffeo f, Diffeo g, Decomposition dec, std::vector<PathComponent> comps, VectorField1D nu)
        : f_(std::move(f)), g_(std::move(g)), dec_(std::move(dec)), comps_(std::move(comps)), nu_(std::move(nu)) {}

    [[nodiscard]] const Decomposition& decomposition() const { return dec_; }
    [[nodiscard]] const VectorField1D& field() const { return nu_; }
    [[nodiscard]] const std::vector<PathComponent>& components() const { return comps_; }
    [[nodiscard]] const Diffeo& f() const { return f_; }
    [[nodiscard]] const Diffeo& g() const { return g_; }
    [[nodiscard]] const Interval& domain() const { return f_.domain(); }

    /// The pair at time t.  t = 0 is the input pair itself; t = 1 is the identity.
    [[nodiscard]] PathMaps at(double t) const {
        if (t == 0.0) return {f_, g_};
        return formula(t);
    }

    /// The componentwise construction, also at t = 0 (where it reproduces the
    /// input up to the accuracy of the generators and fields).
    [[nodiscard]] PathMaps formula(double t) const {
        const Interval dom = domain();
        if (t == 1.0) return {identity(dom), identity(dom)};
        std::vector<Interval> doms;
        std::vector<NodePtr> fn, gn;
        for (const auto& c : comps_) {
            if (c.kind == Kind::Rational) {
                const Diffeo ht = blend(c.h, t);
                doms.push_back(c.domain);
                fn.push_back(iterate(ht, c.q).node());
                gn.push_back(iterate(ht, c.p).node());
            } else {
                for (const auto& piece : c.pieces) {
                    doms.push_back(piece.domain);
                    fn.push_back(std::make_shared<FlowMapNode>(piece.tc, 1.0 - t));
                    gn.push_back(std::make_shared<FlowMapNode>(piece.tc, (1.0 - t) * c.tau));
                }
            }
        }
        auto make = [&](std::vector<NodePtr> nodes, const char* name) {
            return Diffeo(dom, std::make_shared<detail::ComponentwiseMap>(doms, std::move(nodes)),
                          Representation::Derived, std::string(name) + "_t(" + format_double(t) + ")");
        };
        return {make(std::move(fn), "f"), make(std::move(gn), "g")};
    }

private:
    Diffeo f_, g_;
    Decomposition dec_;
    std::vector<PathComponent> comps_;
    VectorField1D nu_;
};

/// Assemble the path from a classified decomposition.  Flows are tried at
/// times 1 and tau on every irrational piece so that range problems surface
/// here rather than halfway through a verification.
inline HomotopyPath build_path(const Diffeo& f, const Diffeo& g, const Decomposition& dec) {
    if (dec.payloads.size() != dec.components_U0.size())
        throw DomainError("decomposition is missing component payloads");
    std::vector<PathComponent> comps;
    VectorField1D nu;
    nu.domain = dec.domain;
    auto push_zero = [&](double x) {
        if (!nu.x.empty() && !(x > nu.x.back())) return;
        nu.x.push_back(x);
        nu.nu.push_back(0.0);
        nu.dnu.push_back(0.0);
    };
    push_zero(dec.domain.lo);
    for (const auto& c : dec.payloads) {
        PathComponent pc;
        pc.domain = c.domain;
        pc.kind = c.kind;
        if (c.kind == Kind::Rational) {
            if (!c.h.node()) throw DomainError("rational component without a generator");
            pc.p = c.p;
            pc.q = c.q;
            pc.h = c.h;
            // h_t is increasing because Dh is; checked rather than assumed
            for (double x : cosine_grid(c.domain.lo, c.domain.hi, 1025))
                if (!(c.h.jet(x).d1 > 0.0))
                    throw DomainError("generator is not increasing near x = " + format_double(x));
            push_zero(c.domain.lo);
            push_zero(c.domain.hi);
        } else {
            if (c.pieces.empty()) throw DomainError("irrational component without a field");
            pc.tau = c.tau;
            pc.pieces = c.pieces;
            for (const auto& piece : c.pieces)
                for (double x : cosine_grid(piece.domain.lo, piece.domain.hi, 65)) {
                    try {
                        (void)piece.tc->flow_jet(x, 1.0);
                        (void)piece.tc->flow_jet(x, c.tau);
                    } catch (const FlowRangeError& e) {
                        throw FlowRangeError("flow range insufficient on [" + format_double(piece.domain.lo) + ", " +
                                                 format_double(piece.domain.hi) + "]: " + e.what(),
                                             e.attainable_lo, e.attainable_hi);
                    }
                }
            for (std::size_t i = 0; i < c.nu.size(); ++i) {
                if (!nu.x.empty() && !(c.nu.x[i] > nu.x.back())) continue;
                nu.x.push_back(c.nu.x[i]);
                nu.nu.push_back(c.nu.nu[i]);
                nu.dnu.push_back(c.nu.dnu[i]);
            }
        }
        comps.push_back(std::move(pc));
    }
    push_zero(dec.domain.hi);
    return {f, g, dec, std::move(comps), std::move(nu)};
}

// ---------------------------------------------------------------------------
// Verification

struct LatticeSpec {
    std::size_t n_t = 21;
    std::size_t n_x = 2048;
    int k_lo = 4;
    int k_hi = 16;
};

struct C1Entry {
    double s = 0.0, t = 0.0;
    double value = 0.0;  // sup_x |Df_s - Df_t| (max over f and g)
};

/// One refined probe near a flat point of F0.
struct DyadicProbe {
    double c = 0.0;
    int side = 1;        // +1 right of c, -1 left
    int k = 0;
    double x = 0.0;
    double dev_f = 0.0;  // sup_t |Df_t(x) - 1|
    double dev_g = 0.0;
    double delta_f = 0.0, delta_g = 0.0;  // ||f - id||_2, ||g - id||_2 between c and x
    double envelope_f = 0.0, envelope_g = 0.0;
};

struct PathReport {
    double commutation_residual = 0.0;
    double start_residual = 0.0;          // |f_0 - f|, |g_0 - g| on the lattice
    double formula_gap = 0.0;             // the same for the componentwise formula at t = 0
    double end_residual = 0.0;            // |f_1 - id| and |Df_1 - 1|; zero when exact
    double fixed_residual = 0.0;          // |f_t(c) - c| over c in F0
    double derivative_positivity_min = std::numeric_limits<double>::infinity();
    double domination_excess = -std::numeric_limits<double>::infinity();  // max |f_t - x| - |f - x|
    double boundary_derivative_deviation = 0.0;
    std::vector<C1Entry> c1_modulus;
    std::vector<DyadicProbe> dyadic;
    bool dyadic_decreasing = true;
    bool envelope_ok = true;

    bool commutation_ok = false, start_ok = false, gap_ok = false, end_ok = false, fixed_ok = false;
    bool positivity_ok = false, domination_ok = false;

    [[nodiscard]] bool ok() const {
        return commutation_ok && start_ok && gap_ok && end_ok && fixed_ok && positivity_ok && domination_ok && dyadic_decreasing &&
               envelope_ok;
    }
};

inline std::vector<double> lattice_times(std::size_t n) {
    std::vector<double> ts(n);
    for (std::size_t i = 0; i < n; ++i) ts[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    ts.back() = 1.0;
    return ts;
}

inline PathReport verify_path(const HomotopyPath& path, const LatticeSpec& spec = {}, const Tolerances& tol = {}) {
    if (spec.n_t < 2 || spec.n_x < 2) throw DomainError("probe lattice needs at least two points per axis");
    const Interval dom = path.domain();
    const double L = dom.length();
    const auto ts = lattice_times(spec.n_t);
    const auto xs = cosine_grid(dom.lo, dom.hi, spec.n_x);
    const Diffeo& f = path.f();
    const Diffeo& g = path.g();
    const auto& dec = path.decomposition();

    std::vector<Jet> jf0(xs.size()), jg0(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        jf0[i] = f.jet(xs[i]);
        jg0[i] = g.jet(xs[i]);
    }

    // refined probes at the flat points of F0
    PathReport rep;
    for (const auto& c : dec.F0) {
        if (!c.flat) continue;
        for (int side : {-1, 1})
            for (int k = spec.k_lo; k <= spec.k_hi; ++k) {
                const double x = c.x + side * std::ldexp(L, -k);
                if (!(x > dom.lo && x < dom.hi)) continue;
                DyadicProbe dp;
                dp.c = c.x;
                dp.side = side;
                dp.k = k;
                dp.x = x;
                const Interval near(std::min(c.x, x), std::max(c.x, x));
                dp.delta_f = certified_delta(f, near, 1025);
                dp.delta_g = certified_delta(g, near, 1025);
                rep.dyadic.push_back(dp);
            }
    }
    // the component kind decides which envelope applies
    for (auto& dp : rep.dyadic) {
        const PathComponent* comp = nullptr;
        for (const auto& pc : path.components())
            if (dp.x > pc.domain.lo && dp.x < pc.domain.hi) comp = &pc;
        auto envelope = [&](double d) {
            if (!comp) return 0.0;
            const double u = detail::u_bound(d);
            if (comp->kind == Kind::Irrational) return u * std::exp(u);
            if (d <= 0.0) return 0.0;
            if (d >= 1.0) return std::numeric_limits<double>::infinity();
            return std::expm1(2.0 * v_bound(d));
        };
        dp.envelope_f = envelope(dp.delta_f);
        dp.envelope_g = envelope(dp.delta_g);
    }

    std::vector<double> prev_df, prev_dg;
    double prev_t = 0.0;
    for (double t : ts) {
        const PathMaps m = path.at(t);
        std::vector<double> df(xs.size()), dg(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double x = xs[i];
            const Jet a = m.f.jet(x), b = m.g.jet(x);
            df[i] = a.d1;
            dg[i] = b.d1;
            rep.commutation_residual = std::max(rep.commutation_residual, std::abs(m.f(b.v) - m.g(a.v)));
            rep.derivative_positivity_min = std::min({rep.derivative_positivity_min, a.d1, b.d1});
            rep.domination_excess = std::max({rep.domination_excess, std::abs(a.disp) - std::abs(jf0[i].disp),
                                              std::abs(b.disp) - std::abs(jg0[i].disp)});
            if (t == 0.0)
                rep.start_residual = std::max({rep.start_residual, std::abs(a.v - jf0[i].v), std::abs(b.v - jg0[i].v)});
            if (t == 1.0)
                rep.end_residual = std::max({rep.end_residual, std::abs(a.v - x), std::abs(b.v - x),
                                             std::abs(a.d1 - 1.0), std::abs(b.d1 - 1.0)});
        }
        for (const auto& c : dec.F0)
            rep.fixed_residual = std::max({rep.fixed_residual, std::abs(m.f(c.x) - c.x), std::abs(m.g(c.x) - c.x)});
        for (auto& dp : rep.dyadic) {
            dp.dev_f = std::max(dp.dev_f, std::abs(m.f.jet(dp.x).d1 - 1.0));
            dp.dev_g = std::max(dp.dev_g, std::abs(m.g.jet(dp.x).d1 - 1.0));
        }
        if (!prev_df.empty()) {
            C1Entry e{prev_t, t, 0.0};
            for (std::size_t i = 0; i < xs.size(); ++i)
                e.value = std::max({e.value, std::abs(df[i] - prev_df[i]), std::abs(dg[i] - prev_dg[i])});
            rep.c1_modulus.push_back(e);
        }
        prev_df = std::move(df);
        prev_dg = std::move(dg);
        prev_t = t;
    }

    // the jump between the input pair and the limit of the construction at t = 0
    const PathMaps start = path.formula(0.0);
    for (std::size_t i = 0; i < xs.size(); ++i)
        rep.formula_gap = std::max({rep.formula_gap, std::abs(start.f(xs[i]) - jf0[i].v),
                                    std::abs(start.g(xs[i]) - jg0[i].v)});

    // decreasing through the scales, up to the rounding floor of Df
    const double floor_dev = 4 * std::numeric_limits<double>::epsilon();
    for (std::size_t i = 0; i < rep.dyadic.size(); ++i) {
        const auto& dp = rep.dyadic[i];
        rep.boundary_derivative_deviation = std::max({rep.boundary_derivative_deviation, dp.dev_f, dp.dev_g});
        if (dp.dev_f > dp.envelope_f + floor_dev || dp.dev_g > dp.envelope_g + floor_dev) rep.envelope_ok = false;
        if (i > 0) {
            const auto& pr = rep.dyadic[i - 1];
            if (pr.c == dp.c && pr.side == dp.side &&
                (dp.dev_f > pr.dev_f + floor_dev || dp.dev_g > pr.dev_g + floor_dev))
                rep.dyadic_decreasing = false;
        }
    }

    rep.commutation_ok = rep.commutation_residual < tol.eps_comm;
    rep.start_ok = rep.start_residual < 1e-9;
    rep.gap_ok = rep.formula_gap < tol.eps_comp;
    rep.end_ok = rep.end_residual == 0.0;
    rep.fixed_ok = rep.fixed_residual == 0.0;
    rep.positivity_ok = rep.derivative_positivity_min > 0.0;
    rep.domination_ok = rep.domination_excess <= 1e-12;
    return rep;
}

// ---------------------------------------------------------------------------
// Frames for plotting

struct Frame {
    double t = 0.0;
    std::vector<double> x, f, g, df, dg;
};

inline std::vector<Frame> path_to_frames(const HomotopyPath& path, const std::vector<double>& times,
                                         const std::vector<double>& nodes) {
    std::vector<Frame> out;
    for (double t : times) {
        if (!(t >= 0.0 && t <= 1.0)) throw DomainError("path times must lie in [0, 1]");
        const PathMaps m = path.at(t);
        Frame fr;
        fr.t = t;
        for (double x : nodes) {
            const Jet a = m.f.jet(x), b = m.g.jet(x);
            fr.x.push_back(x);
            fr.f.push_back(a.v);
            fr.g.push_back(b.v);
            fr.df.push_back(a.d1);
            fr.dg.push_back(b.d1);
        }
        out.push_back(std::move(fr));
    }
    return out;
}

inline void write_frames_csv(std::ostream& os, const std::vector<Frame>& frames) {
    os << "t,x,f_t,g_t,df_t,dg_t\n";
    for (const auto& fr : frames)
        for (std::size_t i = 0; i < fr.x.size(); ++i)
            os << format_double(fr.t) << ',' << format_double(fr.x[i]) << ',' << format_double(fr.f[i]) << ','
               << format_double(fr.g[i]) << ',' << format_double(fr.df[i]) << ',' << format_double(fr.dg[i]) << '\n';
}

}  // namespace szk
