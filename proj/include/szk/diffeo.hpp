#pragma once

// Orientation-preserving diffeomorphisms of a closed subinterval of [0,1].
//
// A Diffeo is an immutable handle on a MapNode.  Closed-form maps keep exact
// symbolic derivatives; sampled maps interpolate node data with a monotone
// cubic Hermite scheme; compositions, inverses and powers of non-sampled maps
// stay lazy so that no interpolation error enters them.
//
// Every node reports its displacement f(x) - x alongside the value.  Near a
// fixed point the displacement is far smaller than ulp(x); the lazy nodes
// propagate it without the cancellation that `value - x` would suffer.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "szk/core.hpp"
#include "szk/expr.hpp"

namespace szk {

/// Value, first and second derivative, and displacement f(x) - x at a point.
struct Jet {
    double v = 0.0;
    double d1 = 1.0;
    double d2 = 0.0;
    double disp = 0.0;
};

inline Jet identity_jet(double x) { return {x, 1.0, 0.0, 0.0}; }

/// Chain rule for outer(inner(x)).
inline Jet chain(const Jet& outer, const Jet& inner) {
    return {outer.v, outer.d1 * inner.d1, outer.d2 * inner.d1 * inner.d1 + outer.d1 * inner.d2,
            outer.disp + inner.disp};
}

class MapNode;
using NodePtr = std::shared_ptr<const MapNode>;

class MapNode {
public:
    virtual ~MapNode() = default;
    [[nodiscard]] virtual Jet jet(double x) const = 0;
    /// A node for the inverse map when one is known exactly (flows, inverses).
    [[nodiscard]] virtual NodePtr inverse_node() const { return nullptr; }
};

enum class Representation { ClosedForm, Sampled, Derived };

class Diffeo {
public:
    Diffeo() = default;
    Diffeo(Interval dom, NodePtr n, Representation rep, std::string desc = {})
        : domain_(dom), node_(std::move(n)), rep_(rep), description_(std::move(desc)) {}

    [[nodiscard]] Jet jet(double x) const { return node_->jet(domain_.clamp(x)); }
    [[nodiscard]] double operator()(double x) const { return jet(x).v; }
    [[nodiscard]] double displacement(double x) const { return jet(x).disp; }

    [[nodiscard]] const Interval& domain() const { return domain_; }
    [[nodiscard]] const NodePtr& node() const { return node_; }
    [[nodiscard]] Representation representation() const { return rep_; }
    [[nodiscard]] const std::string& description() const { return description_; }
    [[nodiscard]] int regularity_order() const { return regularity_; }

    /// Half-open flags: the flagged endpoint is not required to be fixed.
    [[nodiscard]] bool open_lo() const { return open_lo_; }
    [[nodiscard]] bool open_hi() const { return open_hi_; }

    /// Accumulated interpolation error of resampled results (0 for lazy maps).
    [[nodiscard]] double resample_error() const { return resample_error_; }

    [[nodiscard]] Diffeo with_domain(Interval dom, bool open_lo = false, bool open_hi = false) const {
        Diffeo d = *this;
        d.domain_ = dom;
        d.open_lo_ = open_lo;
        d.open_hi_ = open_hi;
        return d;
    }
    [[nodiscard]] Diffeo with_resample_error(double e) const {
        Diffeo d = *this;
        d.resample_error_ = e;
        return d;
    }
    [[nodiscard]] Diffeo with_description(std::string s) const {
        Diffeo d = *this;
        d.description_ = std::move(s);
        return d;
    }

private:
    Interval domain_;
    NodePtr node_;
    Representation rep_ = Representation::Derived;
    std::string description_;
    int regularity_ = 2;
    bool open_lo_ = false;
    bool open_hi_ = false;
    double resample_error_ = 0.0;
};

// ---------------------------------------------------------------------------
// Node implementations

class IdentityMap final : public MapNode {
public:
    [[nodiscard]] Jet jet(double x) const override { return identity_jet(x); }
    [[nodiscard]] NodePtr inverse_node() const override { return std::make_shared<IdentityMap>(); }
};

class ClosedFormMap final : public MapNode {
public:
    explicit ClosedFormMap(expr::Ptr f)
        : f_(std::move(f)), df_(expr::derivative(f_)), d2f_(expr::derivative(df_)) {}

    [[nodiscard]] Jet jet(double x) const override {
        // for x + E and x - E the displacement is E itself, free of cancellation
        if ((f_->op == expr::Op::Add || f_->op == expr::Op::Sub) && f_->a->op == expr::Op::Var) {
            const double e = expr::eval(f_->b, x);
            const double d = f_->op == expr::Op::Add ? e : -e;
            return {x + d, expr::eval(df_, x), expr::eval(d2f_, x), d};
        }
        const double v = expr::eval(f_, x);
        return {v, expr::eval(df_, x), expr::eval(d2f_, x), v - x};
    }
    [[nodiscard]] const expr::Ptr& first_derivative() const { return df_; }
    [[nodiscard]] const expr::Ptr& second_derivative() const { return d2f_; }

private:
    expr::Ptr f_, df_, d2f_;
};

/// Monotone cubic Hermite interpolation of node values and slopes.
/// Displacements d = f - x are interpolated; since Hermite interpolation
/// reproduces linear functions this is the same interpolant as for f.
class SampledMap final : public MapNode {
public:
    SampledMap(std::vector<double> x, std::vector<double> f, std::vector<double> df)
        : x_(std::move(x)), d_(f.size()), s_(df.size()) {
        const std::size_t n = x_.size();
        if (n < 2 || f.size() != n || df.size() != n) throw DomainError("sampled map needs matching columns");
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (!(x_[i + 1] > x_[i])) throw DomainError("sampled nodes must be strictly increasing");
            if (!(f[i + 1] > f[i]))
                throw DomainError("sampled values must be strictly increasing (node " + std::to_string(i) + ")");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!(df[i] > 0.0)) throw DomainError("sampled derivative must be positive");
            d_[i] = f[i] - x_[i];
        }
        // Fritsch-Carlson limiter on the slopes of f
        std::vector<double> m = df;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double delta = (f[i + 1] - f[i]) / (x_[i + 1] - x_[i]);
            const double a = m[i] / delta;
            const double b = m[i + 1] / delta;
            const double r = a * a + b * b;
            if (r > 9.0) {
                const double t = 3.0 / std::sqrt(r);
                m[i] = t * a * delta;
                m[i + 1] = t * b * delta;
            }
        }
        for (std::size_t i = 0; i < n; ++i) s_[i] = m[i] - 1.0;
    }

    [[nodiscard]] Jet jet(double x) const override {
        const std::size_t n = x_.size();
        std::size_t i = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin());
        i = i == 0 ? 0 : std::min(i - 1, n - 2);
        const double h = x_[i + 1] - x_[i];
        const double t = (x - x_[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        const double g00 = 6 * t2 - 6 * t, g10 = 3 * t2 - 4 * t + 1, g01 = -6 * t2 + 6 * t, g11 = 3 * t2 - 2 * t;
        const double k00 = 12 * t - 6, k10 = 6 * t - 4, k01 = -12 * t + 6, k11 = 6 * t - 2;
        const double d = h00 * d_[i] + h10 * h * s_[i] + h01 * d_[i + 1] + h11 * h * s_[i + 1];
        const double dd = (g00 * d_[i] + g01 * d_[i + 1]) / h + g10 * s_[i] + g11 * s_[i + 1];
        const double ddd = (k00 * d_[i] + k01 * d_[i + 1]) / (h * h) + (k10 * s_[i] + k11 * s_[i + 1]) / h;
        return {x + d, 1.0 + dd, ddd, d};
    }

    [[nodiscard]] const std::vector<double>& nodes() const { return x_; }
    [[nodiscard]] double node_value(std::size_t i) const { return x_[i] + d_[i]; }
    [[nodiscard]] double node_slope(std::size_t i) const { return 1.0 + s_[i]; }

private:
    std::vector<double> x_, d_, s_;
};

class ComposedMap final : public MapNode {
public:
    ComposedMap(NodePtr outer, NodePtr inner) : outer_(std::move(outer)), inner_(std::move(inner)) {}
    [[nodiscard]] Jet jet(double x) const override {
        const Jet in = inner_->jet(x);
        return chain(outer_->jet(in.v), in);
    }

private:
    NodePtr outer_, inner_;
};

/// f^{-1} by monotone bracketing refined with Newton steps on y + disp(y) = x.
class InverseMap final : public MapNode {
public:
    /// At an open end the image of f may fall short of the domain; the
    /// bracket is then widened past that end (the map is evaluated outside).
    InverseMap(NodePtr f, Interval dom, double rel_tol, bool open_lo = false, bool open_hi = false)
        : f_(std::move(f)), dom_(dom), tol_(rel_tol * dom.length()), open_lo_(open_lo), open_hi_(open_hi) {}

    [[nodiscard]] Jet jet(double x) const override {
        double lo = dom_.lo, hi = dom_.hi;
        const double len = dom_.length();
        for (int k = 0; open_hi_ && k < 60 && f_->jet(hi).v < x; ++k) hi += len * std::ldexp(1.0, k);
        for (int k = 0; open_lo_ && k < 60 && f_->jet(lo).v > x; ++k) lo -= len * std::ldexp(1.0, k);
        Jet j = f_->jet(x);
        double y = std::clamp(x - j.disp, lo, hi);
        // the best iterate is kept: displacements with rounding steps can stall Newton
        double best_y = y, best_r = std::numeric_limits<double>::infinity();
        Jet best_j = j;
        int stale = 0;
        for (int it = 0; it < 60; ++it) {
            j = f_->jet(y);
            const double r = (y - x) + j.disp;
            if (std::abs(r) < best_r) {
                best_r = std::abs(r);
                best_y = y;
                best_j = j;
                stale = 0;
            } else if (best_r <= 0x1p-49 * std::max(std::abs(x), 1.0) && ++stale >= 2) {
                break;  // at the rounding floor
            }
            if (r == 0.0) break;
            if (r > 0.0) hi = y; else lo = y;
            double next = y - r / j.d1;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            const double step = std::abs(next - y);
            y = next;
            if (step <= 0x1p-53 * std::max(std::abs(y), 1e-300) || hi - lo <= 0x1p-52 * std::abs(hi)) {
                j = f_->jet(y);
                if (std::abs((y - x) + j.disp) < best_r) {
                    best_r = std::abs((y - x) + j.disp);
                    best_y = y;
                    best_j = j;
                }
                break;
            }
        }
        y = best_y;
        j = best_j;
        // a residual of a few ulps of f times its slope is the best attainable
        const double floor_r = 8 * 0x1p-52 * std::max({std::abs(x), std::abs(y), 1.0}) * std::max(1.0, j.d1);
        if (best_r > std::max(tol_, floor_r))
            throw ConvergenceError("inversion did not reach tolerance", best_r);
        const double inv = 1.0 / j.d1;
        return {y, inv, -j.d2 * inv * inv * inv, -j.disp};
    }
    [[nodiscard]] NodePtr inverse_node() const override { return f_; }

private:
    NodePtr f_;
    Interval dom_;
    double tol_;
    bool open_lo_, open_hi_;
};

/// k-fold self-composition; negative k composes the inverse.
class PowerMap final : public MapNode {
public:
    PowerMap(NodePtr base, int k) : base_(std::move(base)), k_(k < 0 ? -k : k) {}
    [[nodiscard]] Jet jet(double x) const override {
        Jet acc = identity_jet(x);
        for (int i = 0; i < k_; ++i) acc = chain(base_->jet(acc.v), acc);
        return acc;
    }
    [[nodiscard]] NodePtr inverse_node() const override {
        auto b = base_->inverse_node();
        return b ? std::make_shared<PowerMap>(std::move(b), k_) : nullptr;
    }

private:
    NodePtr base_;
    int k_;
};

/// Conjugation by the reflection x -> lo + hi - x.
class ReflectedMap final : public MapNode {
public:
    ReflectedMap(NodePtr f, Interval dom) : f_(std::move(f)), sum_(dom.lo + dom.hi) {}
    ReflectedMap(NodePtr f, double sum) : f_(std::move(f)), sum_(sum) {}
    [[nodiscard]] Jet jet(double y) const override {
        const Jet j = f_->jet(sum_ - y);
        return {sum_ - j.v, j.d1, -j.d2, -j.disp};
    }
    [[nodiscard]] NodePtr inverse_node() const override {
        auto b = f_->inverse_node();
        return b ? std::make_shared<ReflectedMap>(std::move(b), sum_) : nullptr;
    }

private:
    NodePtr f_;
    double sum_;
};

/// (1 - t) h + t id.
class BlendMap final : public MapNode {
public:
    BlendMap(NodePtr h, double t) : h_(std::move(h)), t_(t) {}
    [[nodiscard]] Jet jet(double x) const override {
        const Jet j = h_->jet(x);
        const double w = 1.0 - t_;
        const double d = w * j.disp;
        return {x + d, w * j.d1 + t_, w * j.d2, d};
    }

private:
    NodePtr h_;
    double t_;
};

/// Maps glued at common fixed points; piece i covers [breaks[i], breaks[i+1]].
class PiecewiseMap final : public MapNode {
public:
    PiecewiseMap(std::vector<double> breaks, std::vector<NodePtr> pieces)
        : breaks_(std::move(breaks)), pieces_(std::move(pieces)) {
        if (breaks_.size() != pieces_.size() + 1) throw DomainError("piecewise map: breaks/pieces mismatch");
    }
    [[nodiscard]] Jet jet(double x) const override {
        std::size_t i = static_cast<std::size_t>(std::upper_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin());
        i = i == 0 ? 0 : std::min(i - 1, pieces_.size() - 1);
        return pieces_[i]->jet(std::clamp(x, breaks_[i], breaks_[i + 1]));
    }
    [[nodiscard]] NodePtr inverse_node() const override;

private:
    std::vector<double> breaks_;
    std::vector<NodePtr> pieces_;
};

// the breaks are fixed points, so the pieces invert separately
inline NodePtr PiecewiseMap::inverse_node() const {
    std::vector<NodePtr> inv;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        auto q = pieces_[i]->inverse_node();
        if (!q) q = std::make_shared<InverseMap>(pieces_[i], Interval(breaks_[i], breaks_[i + 1]), 1e-12);
        inv.push_back(std::move(q));
    }
    return std::make_shared<PiecewiseMap>(breaks_, std::move(inv));
}

// ---------------------------------------------------------------------------
// Construction and algebra

inline Diffeo identity(Interval dom = {}) {
    return {dom, std::make_shared<IdentityMap>(), Representation::ClosedForm, "x"};
}

inline void check_monotone(const Diffeo& f, std::size_t probes = 1025) {
    for (double x : cosine_grid(f.domain().lo, f.domain().hi, probes)) {
        const Jet j = f.jet(x);
        if (!(j.d1 > 0.0) || !std::isfinite(j.v)) {
            std::ostringstream os;
            os.precision(17);
            os << "map is not strictly increasing: Df(" << x << ") = " << j.d1;
            throw DomainError(os.str());
        }
    }
}

inline void check_endpoints(const Diffeo& f, double tol = 1e-12) {
    const auto& d = f.domain();
    if (!f.open_lo() && std::abs(f.displacement(d.lo)) > tol)
        throw DomainError("map does not fix the endpoint " + std::to_string(d.lo));
    if (!f.open_hi() && std::abs(f.displacement(d.hi)) > tol)
        throw DomainError("map does not fix the endpoint " + std::to_string(d.hi));
}

/// Parse a DSL expression into a closed-form diffeomorphism of `dom`.
inline Diffeo parse_diffeo(const std::string& text, Interval dom = {}, bool open_lo = false, bool open_hi = false) {
    auto tree = expr::parse(text);
    Diffeo f = Diffeo(dom, std::make_shared<ClosedFormMap>(tree), Representation::ClosedForm, text)
                   .with_domain(dom, open_lo, open_hi);
    check_endpoints(f);
    check_monotone(f);
    return f;
}

inline Diffeo sampled(Interval dom, std::vector<double> x, std::vector<double> f, std::vector<double> df,
                      std::string desc = "sampled") {
    return {dom, std::make_shared<SampledMap>(std::move(x), std::move(f), std::move(df)), Representation::Sampled,
            std::move(desc)};
}

/// Sample `f` at `nodes` into a Sampled map.  Endpoint displacements are set
/// to zero exactly when the endpoint is closed.
inline Diffeo resample(const Diffeo& f, const std::vector<double>& nodes) {
    std::vector<double> v(nodes.size()), d(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const Jet j = f.jet(nodes[i]);
        v[i] = j.v;
        d[i] = j.d1;
    }
    if (!f.open_lo() && nodes.front() == f.domain().lo) v.front() = nodes.front();
    if (!f.open_hi() && nodes.back() == f.domain().hi) v.back() = nodes.back();
    Diffeo s = sampled(f.domain(), nodes, v, d, f.description()).with_domain(f.domain(), f.open_lo(), f.open_hi());
    // error estimate at cell midpoints
    double err = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        const double m = 0.5 * (nodes[i] + nodes[i + 1]);
        err = std::max(err, std::abs(s.displacement(m) - f.displacement(m)));
    }
    return s.with_resample_error(f.resample_error() + err);
}

inline const SampledMap* as_sampled(const Diffeo& f) { return dynamic_cast<const SampledMap*>(f.node().get()); }

inline void require_same_domain(const Diffeo& f, const Diffeo& g) {
    const double tol = 1e-15;
    if (std::abs(f.domain().lo - g.domain().lo) > tol || std::abs(f.domain().hi - g.domain().hi) > tol)
        throw DomainError("domain mismatch");
}

/// f o g.
inline Diffeo compose(const Diffeo& f, const Diffeo& g) {
    require_same_domain(f, g);
    Diffeo lazy = Diffeo(g.domain(), std::make_shared<ComposedMap>(f.node(), g.node()), Representation::Derived,
                         "(" + f.description() + ")o(" + g.description() + ")")
                      .with_domain(g.domain(), g.open_lo() && f.open_lo(), g.open_hi() && f.open_hi());
    // a sampled map may have been restricted to a component: keep its nodes
    // inside the domain and add the endpoints
    auto nodes_in = [&](const SampledMap& s) {
        const Interval dom = g.domain();
        std::vector<double> xs{dom.lo};
        for (double x : s.nodes())
            if (x > dom.lo && x < dom.hi) xs.push_back(x);
        xs.push_back(dom.hi);
        return xs;
    };
    if (const auto* s = as_sampled(g)) return resample(lazy, nodes_in(*s));
    if (const auto* s = as_sampled(f)) return resample(lazy, nodes_in(*s));
    return lazy;
}

inline Diffeo invert(const Diffeo& f, double rel_tol = 1e-12) {
    check_monotone(f);
    if (const auto* s = as_sampled(f)) {
        // swap the columns: exact on the image nodes
        const auto& xs = s->nodes();
        std::vector<double> y(xs.size()), x(xs.size()), dy(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            y[i] = s->node_value(i);
            x[i] = xs[i];
            dy[i] = 1.0 / s->node_slope(i);
        }
        return sampled(f.domain(), y, x, dy, "inv(" + f.description() + ")")
            .with_domain(f.domain(), f.open_lo(), f.open_hi())
            .with_resample_error(f.resample_error());
    }
    NodePtr inv = f.node()->inverse_node();
    if (!inv) inv = std::make_shared<InverseMap>(f.node(), f.domain(), rel_tol, f.open_lo(), f.open_hi());
    return Diffeo(f.domain(), std::move(inv), Representation::Derived, "inv(" + f.description() + ")")
        .with_domain(f.domain(), f.open_lo(), f.open_hi());
}

/// f^k for any integer k; sampled maps are resampled after every composition.
inline Diffeo iterate(const Diffeo& f, int k) {
    if (k == 0) return identity(f.domain()).with_domain(f.domain(), f.open_lo(), f.open_hi());
    if (k == 1) return f;
    const Diffeo base = k > 0 ? f : invert(f);
    const int n = k > 0 ? k : -k;
    if (as_sampled(f)) {
        Diffeo acc = base;
        for (int i = 1; i < n; ++i) acc = compose(base, acc);
        return acc;
    }
    return Diffeo(f.domain(), std::make_shared<PowerMap>(base.node(), n), Representation::Derived,
                  "(" + f.description() + ")^" + std::to_string(k))
        .with_domain(f.domain(), f.open_lo(), f.open_hi());
}

/// Conjugate by x -> lo + hi - x, exchanging the roles of the endpoints.
inline Diffeo reflect(const Diffeo& f) {
    return Diffeo(f.domain(), std::make_shared<ReflectedMap>(f.node(), f.domain()), Representation::Derived,
                  "R(" + f.description() + ")")
        .with_domain(f.domain(), f.open_hi(), f.open_lo());
}

inline Diffeo blend(const Diffeo& h, double t) {
    return Diffeo(h.domain(), std::make_shared<BlendMap>(h.node(), t), Representation::Derived, "blend")
        .with_domain(h.domain(), h.open_lo(), h.open_hi());
}

inline Diffeo piecewise(std::vector<double> breaks, const std::vector<Diffeo>& pieces, std::string desc = "piecewise") {
    std::vector<NodePtr> nodes;
    for (const auto& p : pieces) nodes.push_back(p.node());
    Interval dom(breaks.front(), breaks.back());
    return {dom, std::make_shared<PiecewiseMap>(std::move(breaks), std::move(nodes)), Representation::Derived,
            std::move(desc)};
}

/// Sup of |f - g| over the given points.
inline double sup_distance(const Diffeo& f, const Diffeo& g, const std::vector<double>& pts) {
    double m = 0.0;
    for (double x : pts) m = std::max(m, std::abs(f.displacement(x) - g.displacement(x)));
    return m;
}

// ---------------------------------------------------------------------------
// CSV: header `x,f,df`, strictly increasing x, LF line endings.

inline Diffeo read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DomainError("empty CSV " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "x,f,df") throw DomainError("CSV header must be x,f,df");
    std::vector<double> x, f, df;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        double a, b, c;
        char c1, c2;
        if (!(ls >> a >> c1 >> b >> c2 >> c) || c1 != ',' || c2 != ',')
            throw DomainError("malformed CSV line " + std::to_string(lineno));
        if (!x.empty() && !(a > x.back())) throw DomainError("x column not strictly increasing at line " + std::to_string(lineno));
        x.push_back(a);
        f.push_back(b);
        df.push_back(c);
    }
    if (x.size() < 4) throw DomainError("CSV needs at least four rows");
    Interval dom(x.front(), x.back());
    Diffeo s = sampled(dom, x, f, df, "csv:" + path);
    check_endpoints(s, 1e-12);
    return s;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_csv(std::ostream& os, const Diffeo& f, const std::vector<double>& nodes) {
    os << "x,f,df\n";
    for (double x : nodes) {
        const Jet j = f.jet(x);
        os << format_double(x) << ',' << format_double(j.v) << ',' << format_double(j.d1) << '\n';
    }
}

}  // namespace szk
