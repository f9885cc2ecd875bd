#pragma once

// Flows of a C1 vector field without interior zero.
//
// The time coordinate T(x) = int_c^x dxi / nu(xi) is tabulated on the field's
// nodes.  Interior cells are integrated with Gauss-Legendre on geometrically
// split sub-panels.  The cell touching a zero endpoint is handled in the
// logarithmic variable w = log|x - endpoint|: with nu = s q(s) there, the
// integrand dw / q(e^w) is smooth, so the logarithmic singularity is integrated
// exactly and flat endpoints (q(0) = 0) stay tractable down to a floor.

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "szk/core.hpp"
#include "szk/diffeo.hpp"
#include "szk/vector_field.hpp"

namespace szk {

namespace detail {

inline constexpr std::array<double, 10> gl_nodes = {
    -0.9739065285171717, -0.8650633666889845, -0.6794095682990244, -0.4333953941292472, -0.1488743389816312,
    0.1488743389816312,  0.4333953941292472,  0.6794095682990244,  0.8650633666889845,  0.9739065285171717};
inline constexpr std::array<double, 10> gl_weights = {
    0.0666713443086881, 0.1494513491505806, 0.2190863625159820, 0.2692667193099963, 0.2955242247147529,
    0.2955242247147529, 0.2692667193099963, 0.2190863625159820, 0.1494513491505806, 0.0666713443086881};

template <class F>
double gauss_legendre(F&& f, double a, double b) {
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < gl_nodes.size(); ++i) s += gl_weights[i] * f(c + r * gl_nodes[i]);
    return s * r;
}

}  // namespace detail

/// Tabulated time coordinate of a field; T(basepoint) = 0.
class TimeCoordinate {
public:
    explicit TimeCoordinate(VectorField1D field, std::optional<double> basepoint = std::nullopt)
        : field_(std::move(field)) {
        const auto& x = field_.x;
        const std::size_t n = x.size();
        if (n < 4) throw DomainError("time coordinate needs at least four nodes");
        lo_zero_ = field_.nu.front() == 0.0;
        hi_zero_ = field_.nu.back() == 0.0;
        i0_ = lo_zero_ ? 1 : 0;
        i1_ = hi_zero_ ? n - 2 : n - 1;
        sign_ = field_.nu[i0_] > 0.0 ? 1.0 : -1.0;
        for (std::size_t i = i0_; i <= i1_; ++i)
            if (!(field_.nu[i] * sign_ > 0.0))
                throw DomainError("time coordinate: field has an interior zero near x = " + format_double(x[i]));

        // basepoint: interior node nearest the requested point (default: midpoint)
        const double target = basepoint.value_or(field_.domain.mid());
        ic_ = i0_;
        for (std::size_t i = i0_; i <= i1_; ++i)
            if (std::abs(x[i] - target) < std::abs(x[ic_] - target)) ic_ = i;

        nodeT_.assign(n, 0.0);
        for (std::size_t i = ic_; i < i1_; ++i) nodeT_[i + 1] = nodeT_[i] + cell_integral(i, x[i], x[i + 1]);
        for (std::size_t i = ic_; i > i0_; --i) nodeT_[i - 1] = nodeT_[i] - cell_integral(i - 1, x[i - 1], x[i]);

        if (lo_zero_) lo_cell_ = make_end(+1.0);
        if (hi_zero_) hi_cell_ = make_end(-1.0);
    }

    [[nodiscard]] const VectorField1D& field() const { return field_; }
    [[nodiscard]] double basepoint() const { return field_.x[ic_]; }
    [[nodiscard]] double direction_sign() const { return sign_; }

    /// Resolved range of T (the open ends map to +-inf only in the limit).
    [[nodiscard]] std::pair<double, double> range() const {
        const double a = lo_cell_ ? end_T(*lo_cell_, lo_cell_->w.back()) : nodeT_[i0_];
        const double b = hi_cell_ ? end_T(*hi_cell_, hi_cell_->w.back()) : nodeT_[i1_];
        return {std::min(a, b), std::max(a, b)};
    }

    /// nu and D nu at p, using the end-cell polynomial near zero endpoints.
    [[nodiscard]] std::pair<double, double> nu(double p) const {
        if (lo_cell_ && p < field_.x[i0_]) return end_nu(*lo_cell_, p - field_.domain.lo);
        if (hi_cell_ && p > field_.x[i1_]) return end_nu(*hi_cell_, field_.domain.hi - p);
        return field_.eval(p);
    }

    [[nodiscard]] double T(double p) const {
        const auto& x = field_.x;
        if (lo_cell_ && p < x[i0_]) return end_T(*lo_cell_, std::log(p - field_.domain.lo));
        if (hi_cell_ && p > x[i1_]) return end_T(*hi_cell_, std::log(field_.domain.hi - p));
        const std::size_t i = std::min(std::max(field_.cell(p), i0_), i1_ - 1);
        return nodeT_[i] + cell_integral(i, x[i], p);
    }

    /// The point with T = target.
    [[nodiscard]] double inverse(double target) const {
        const auto& x = field_.x;
        const double lowT = sign_ * nodeT_[i0_], highT = sign_ * nodeT_[i1_], st = sign_ * target;
        if (st < lowT) {
            if (!lo_cell_) throw_range(target);
            return field_.domain.lo + std::exp(end_inverse(*lo_cell_, target));
        }
        if (st > highT) {
            if (!hi_cell_) throw_range(target);
            return field_.domain.hi - std::exp(end_inverse(*hi_cell_, target));
        }
        // binary search over nodes for the cell with st in [T_i, T_{i+1}]
        std::size_t lo = i0_, hi = i1_;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (sign_ * nodeT_[mid] <= st) lo = mid; else hi = mid;
        }
        return solve_in_cell(lo, x[lo], target - nodeT_[lo], x[lo + 1]);
    }

    /// Jet of the time-t map at p.
    [[nodiscard]] Jet flow_jet(double p, double t) const {
        const Interval& dom = field_.domain;
        if ((lo_zero_ && p <= dom.lo) || (hi_zero_ && p >= dom.hi)) return endpoint_jet(p <= dom.lo, t);
        if (t == 0.0) return identity_jet(p);
        const auto [nx, dnx] = nu(p);
        Step st{};
        if (const auto local = local_step(p, t)) {
            st = *local;
        } else {
            st.disp = inverse(T(p) + t) - p;
            const auto [ny, dny] = nu(p + st.disp);
            st.ratio = ny / nx;
            st.ddnu = dny - dnx;
        }
        // D phi_t = nu(y) / nu(p), D^2 phi_t = D phi_t (D nu(y) - D nu(p)) / nu(p)
        return {p + st.disp, st.ratio, st.ratio * st.ddnu / nx, st.disp};
    }

private:
    struct EndCell {
        double sigma;             // +1 at lo (x = lo + s), -1 at hi (x = hi - s)
        double h;                 // distance from the endpoint to the first nonzero node
        double k0, a, b;          // nu(end + sigma s) = s (k0 + a s + b s^2)
        double T_node;            // T at the first nonzero node
        std::vector<double> w;    // panel edges, descending from log h
        std::vector<double> I;    // int_{w_j}^{log h} dw / q
    };

    VectorField1D field_;
    bool lo_zero_ = false, hi_zero_ = false;
    std::size_t i0_ = 0, i1_ = 0, ic_ = 0;
    double sign_ = 1.0;
    std::vector<double> nodeT_;
    std::optional<EndCell> lo_cell_, hi_cell_;

    [[noreturn]] void throw_range(double target) const {
        const auto [a, b] = range();
        throw FlowRangeError("flow leaves the resolved time range (target T = " + format_double(target) +
                                 ", attainable [" + format_double(a) + ", " + format_double(b) + "])",
                             a, b);
    }

    /// Distance from p to the nearest zero endpoint (or the domain length if none).
    [[nodiscard]] double zero_distance(double p) const {
        double d = field_.domain.length();
        if (lo_zero_) d = std::min(d, p - field_.domain.lo);
        if (hi_zero_) d = std::min(d, field_.domain.hi - p);
        return d;
    }

    /// Hermite value and first three derivatives in cell i at local offset off from base.
    [[nodiscard]] std::array<double, 4> hermite(std::size_t i, double base, double off) const {
        const auto& x = field_.x;
        const double h = x[i + 1] - x[i];
        const double t = ((base - x[i]) + off) / h;
        const double y0 = field_.nu[i], y1 = field_.nu[i + 1], m0 = h * field_.dnu[i], m1 = h * field_.dnu[i + 1];
        // nu = y0 + m0 t + c2 t^2 + c3 t^3
        const double c2 = 3 * (y1 - y0) - 2 * m0 - m1, c3 = 2 * (y0 - y1) + m0 + m1;
        return {y0 + t * (m0 + t * (c2 + t * c3)), (m0 + t * (2 * c2 + 3 * t * c3)) / h, (2 * c2 + 6 * t * c3) / (h * h),
                6 * c3 / (h * h * h)};
    }

    /// int_{base+o0}^{base+o1} dxi / nu(xi) within cell i; geometric sub-panels near zero endpoints.
    /// Offsets are kept separate from the base so motions below the spacing of doubles still resolve.
    [[nodiscard]] double cell_integral(std::size_t i, double base, double o0, double o1) const {
        if (o0 == o1) return 0.0;
        const double sgn = o1 > o0 ? 1.0 : -1.0;
        const double a = std::min(o0, o1), b = std::max(o0, o1);
        auto f = [&](double o) {
            const double xc = std::clamp(o, field_.x[i] - base, field_.x[i + 1] - base);
            return 1.0 / hermite(i, base, xc)[0];
        };
        // split so that the distance to the zero endpoint varies by at most 25% per panel
        const double pa = base + a, pb = base + b;
        const double da = zero_distance(pa), db = zero_distance(pb);
        const double ratio = std::max(da, db) / std::max(std::min(da, db), 1e-300);
        double total = 0.0;
        if (ratio <= 1.25) {
            total = detail::gauss_legendre(f, a, b);
        } else {
            const int m = std::min(200, static_cast<int>(std::ceil(std::log(ratio) / std::log(1.25))));
            const bool near_lo = lo_zero_ && (!hi_zero_ || pa - field_.domain.lo < field_.domain.hi - pb);
            // distance to the end as a function of the offset
            const double s_base = near_lo ? base - field_.domain.lo : field_.domain.hi - base;
            const double dir = near_lo ? 1.0 : -1.0;
            const double s0 = s_base + dir * a, s1 = s_base + dir * b;
            double prev = a;
            for (int k = 1; k <= m; ++k) {
                const double sk = s0 * std::pow(s1 / s0, static_cast<double>(k) / m);
                const double next = k == m ? b : dir * (sk - s_base);
                total += detail::gauss_legendre(f, prev, next);
                prev = next;
            }
        }
        return sgn * total;
    }

    [[nodiscard]] double cell_integral(std::size_t i, double p0, double p1) const {
        return cell_integral(i, p0, 0.0, p1 - p0);
    }

    EndCell make_end(double sigma) {
        const auto& x = field_.x;
        const std::size_t inode = sigma > 0 ? i0_ : i1_;
        const double endpoint = sigma > 0 ? field_.domain.lo : field_.domain.hi;
        EndCell c{};
        c.sigma = sigma;
        c.h = std::abs(x[inode] - endpoint);
        // nu(end + sigma s) as a cubic in s: value 0 and slope sigma*Dnu(end) at s = 0
        const std::size_t iend = sigma > 0 ? 0 : x.size() - 1;
        c.k0 = sigma * field_.dnu[iend];
        const double p1 = field_.nu[inode], d1 = sigma * field_.dnu[inode];
        const double P = p1 - c.k0 * c.h, Q = d1 - c.k0;
        c.a = (3 * P - Q * c.h) / (c.h * c.h);
        c.b = (Q * c.h - 2 * P) / (c.h * c.h * c.h);
        c.T_node = nodeT_[inode];
        const double floor = endpoint == 0.0 ? 1e-300 : 8.0 * 0x1p-52 * std::abs(endpoint);
        const double wmin = std::max(std::log(floor), std::log(c.h) - 60.0);
        c.w.push_back(std::log(c.h));
        c.I.push_back(0.0);
        while (c.w.back() > wmin) {
            const double w1 = std::max(c.w.back() - 0.5, wmin);
            const double inc = detail::gauss_legendre([&](double w) { return 1.0 / end_q(c, std::exp(w)); }, w1, c.w.back());
            if (!std::isfinite(inc) || std::abs(c.I.back() + inc) > 1e200) break;
            c.w.push_back(w1);
            c.I.push_back(c.I.back() + inc);
        }
        return c;
    }

    static double end_q(const EndCell& c, double s) { return c.k0 + s * (c.a + s * c.b); }

    [[nodiscard]] std::pair<double, double> end_nu(const EndCell& c, double s) const {
        const double v = s * end_q(c, s);
        const double dv = c.k0 + s * (2 * c.a + 3 * c.b * s);
        return {v, c.sigma * dv};
    }

    /// int_w^{log h} dw'/q, composite over the stored panels plus a linear tail.
    [[nodiscard]] double end_I(const EndCell& c, double w) const {
        if (w >= c.w.front()) return 0.0;
        if (w < c.w.back()) {
            if (c.k0 == 0.0) return c.I.back() * 1e300;  // effectively unreachable
            return c.I.back() + (c.w.back() - w) / c.k0;
        }
        std::size_t j = 0;
        while (j + 1 < c.w.size() && c.w[j + 1] > w) ++j;
        return c.I[j] + detail::gauss_legendre([&](double u) { return 1.0 / end_q(c, std::exp(u)); }, w, c.w[j]);
    }

    [[nodiscard]] double end_T(const EndCell& c, double w) const { return c.T_node - c.sigma * end_I(c, w); }

    /// w with T(w) = target, for target beyond the first nonzero node on this side.
    [[nodiscard]] double end_inverse(const EndCell& c, double target) const {
        const double Iwant = -c.sigma * (target - c.T_node);  // >= 0 along the cell in the sign of q
        const double sq = c.k0 != 0.0 ? (c.k0 > 0 ? 1.0 : -1.0) : (end_q(c, c.h) > 0 ? 1.0 : -1.0);
        const double want = sq * Iwant;
        // panel search on |I|
        std::size_t j = 0;
        while (j + 1 < c.I.size() && sq * c.I[j + 1] < want) ++j;
        if (j + 1 == c.I.size()) {
            if (c.k0 == 0.0) return c.w.back();
            return c.w.back() - (Iwant - c.I.back()) * c.k0;
        }
        // solve in panel [w_{j+1}, w_j]
        double lo = c.w[j + 1], hi = c.w[j];
        double w = 0.5 * (lo + hi);
        for (int it = 0; it < 80; ++it) {
            const double r = sq * (end_I(c, w) - Iwant);  // increasing as w decreases
            if (r == 0.0) break;
            if (r > 0.0) lo = w; else hi = w;
            double next = w + r * std::abs(end_q(c, std::exp(w)));
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - w) <= 1e-15 * std::max(1.0, std::abs(w))) {
                w = next;
                break;
            }
            w = next;
        }
        return w;
    }

    /// p in cell i with int_{x0}^{p} = want (x0 is the cell's left node).
    [[nodiscard]] double solve_in_cell(std::size_t i, double x0, double want, double x1) const {
        double lo = x0, hi = x1;
        auto F = [&](double p) { return sign_ * (cell_integral(i, x0, p) - want); };  // increasing in p
        double p = x0 + want * field_(x0);
        if (!(p > lo && p < hi)) p = 0.5 * (lo + hi);
        for (int it = 0; it < 80; ++it) {
            const double r = F(p);
            if (r == 0.0) break;
            if (r > 0.0) hi = p; else lo = p;
            double next = p - r * std::abs(field_(p));
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - p) <= 0x1p-53 * std::abs(p) || hi - lo <= 0x1p-53 * std::abs(hi)) {
                p = next;
                break;
            }
            p = next;
        }
        return p;
    }

    struct Step {
        double disp;
        double ratio;  // nu(p + disp) / nu(p)
        double ddnu;   // D nu(p + disp) - D nu(p)
    };

    /// Step when p and its image stay inside one cell, solved relative to p.
    [[nodiscard]] std::optional<Step> local_step(double p, double t) const {
        const auto& x = field_.x;
        const Interval& dom = field_.domain;
        const double move = sign_ * (t > 0 ? 1.0 : -1.0);
        if (lo_cell_ && p < x[i0_]) return local_end_step(*lo_cell_, p - dom.lo, t, move);
        if (hi_cell_ && p > x[i1_]) return local_end_step(*hi_cell_, dom.hi - p, t, move);
        const std::size_t i = std::min(std::max(field_.cell(p), i0_), i1_ - 1);
        const double edge = (move > 0 ? x[i + 1] : x[i]) - p;
        if (std::abs(t) > std::abs(cell_integral(i, p, 0.0, edge))) return std::nullopt;
        double lo = 0.0, hi = edge;  // bracket for the displacement (either order)
        auto F = [&](double d) { return cell_integral(i, p, 0.0, d) - t; };
        const auto h0 = hermite(i, p, 0.0);
        double d = t * h0[0];
        if (!((d - lo) * (d - hi) < 0.0)) d = 0.5 * (lo + hi);
        for (int it = 0; it < 80; ++it) {
            const double r = F(d);
            if (r == 0.0) break;
            // F grows with the distance travelled when t > 0 and shrinks when t < 0
            if (r * t > 0.0) hi = d; else lo = d;
            double next = d - r * hermite(i, p, d)[0];
            if (!((next - lo) * (next - hi) < 0.0)) next = 0.5 * (lo + hi);
            if (std::abs(next - d) <= 0x1p-53 * std::abs(d)) {
                d = next;
                break;
            }
            d = next;
        }
        // exact Taylor expansions of the cubic about p
        const double dnu = d * (h0[1] + d * (0.5 * h0[2] + d * h0[3] / 6.0));
        const double dd = d * (h0[2] + 0.5 * d * h0[3]);
        return Step{d, 1.0 + dnu / h0[0], dd};
    }

    /// Solved in the log-displacement u = log(s'/s), which stays resolved when the
    /// motion is far below the spacing of doubles around log s (flat endpoints).
    [[nodiscard]] std::optional<Step> local_end_step(const EndCell& c, double s, double t, double move) const {
        const double ds_sign = move * c.sigma;  // > 0 moves away from the endpoint
        const double want = c.sigma * t;       // int_0^u du' / q(s e^u')
        auto inv_q = [&](double u) { return 1.0 / end_q(c, s * std::exp(u)); };
        auto G = [&](double u) {
            // composite GL on panels of width <= 1
            const int m = std::max(1, static_cast<int>(std::ceil(std::abs(u))));
            double acc = 0.0;
            for (int k = 0; k < m; ++k) acc += detail::gauss_legendre(inv_q, u * k / m, u * (k + 1) / m);
            return acc;
        };
        const double umax = std::log(c.h / s);
        if (ds_sign > 0 && std::abs(G(umax)) < std::abs(want)) return std::nullopt;
        double lo = ds_sign > 0 ? 0.0 : -700.0, hi = ds_sign > 0 ? umax : 0.0;
        const double q0 = end_q(c, s);
        const double sq = q0 > 0 ? 1.0 : -1.0;
        double u = want * q0;
        if (!(u > lo && u < hi)) u = 0.5 * (lo + hi);
        for (int it = 0; it < 200; ++it) {
            const double r = sq * (G(u) - want);  // increasing in u
            if (r == 0.0) break;
            if (r > 0.0) hi = u; else lo = u;
            double next = u - r * std::abs(end_q(c, s * std::exp(u)));
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - u) <= 0x1p-53 * std::abs(u) || hi - lo <= 0x1p-53 * std::abs(hi)) {
                u = next;
                break;
            }
            u = next;
        }
        const double ds = s * std::expm1(u), s1 = s + ds;
        // nu = s q(s) and sigma D nu = k0 + 2 a s + 3 b s^2 in the end variable
        const double ratio = (s1 / s) * (end_q(c, s1) / q0);
        const double ddnu = c.sigma * ds * (2 * c.a + 3 * c.b * (s + s1));
        return Step{c.sigma * ds, ratio, ddnu};
    }

    [[nodiscard]] Jet endpoint_jet(bool at_lo, double t) const {
        const double p = at_lo ? field_.domain.lo : field_.domain.hi;
        const double kappa = at_lo ? field_.dnu.front() : field_.dnu.back();
        const auto& c = at_lo ? lo_cell_ : hi_cell_;
        const double beta = c ? c->a : 0.0;
        const double m = std::exp(kappa * t);
        const double d2 = kappa != 0.0 ? 2 * beta * m * std::expm1(kappa * t) / kappa : 2 * beta * t;
        return {p, m, d2, 0.0};
    }
};

using TimeCoordinatePtr = std::shared_ptr<const TimeCoordinate>;

inline TimeCoordinatePtr time_coordinate(const VectorField1D& nu, std::optional<double> c = std::nullopt) {
    return std::make_shared<const TimeCoordinate>(nu, c);
}

class FlowMapNode final : public MapNode {
public:
    FlowMapNode(TimeCoordinatePtr tc, double t) : tc_(std::move(tc)), t_(t) {}
    [[nodiscard]] Jet jet(double x) const override { return tc_->flow_jet(x, t_); }
    [[nodiscard]] NodePtr inverse_node() const override { return std::make_shared<FlowMapNode>(tc_, -t_); }

private:
    TimeCoordinatePtr tc_;
    double t_;
};

inline Diffeo flow_map(const TimeCoordinatePtr& tc, double t) {
    const auto& f = tc->field();
    return Diffeo(f.domain, std::make_shared<FlowMapNode>(tc, t), Representation::Derived,
                  "flow(t=" + format_double(t) + ")")
        .with_domain(f.domain, f.nu.front() != 0.0, f.nu.back() != 0.0);
}

inline Diffeo flow_map(const VectorField1D& nu, double t) { return flow_map(time_coordinate(nu), t); }

struct CentralizerTime {
    double tau = 0.0;
    double spread = 0.0;      // max - min over the probe set
    double f_time = 1.0;      // the same measurement for f itself
    double commutation = 0.0; // sup |f o g - g o f| on the probes
};

/// The time tau with g = f^tau in the flow of nu, where f is the time-1 map of nu.
/// Probes sit in the middle half of `on` (default: the field's domain).
inline CentralizerTime centralizer_time(const Diffeo& f, const Diffeo& g, const TimeCoordinatePtr& tc,
                                        const Tolerances& tol = {}, std::optional<Interval> on = std::nullopt) {
    const Interval dom = on.value_or(tc->field().domain);
    const auto probes = middle_probes(dom, 17);
    CentralizerTime out;
    for (double x : probes) {
        const double fg = f(g(x)), gf = g(f(x));
        out.commutation = std::max(out.commutation, std::abs(fg - gf));
    }
    if (out.commutation > tol.eps_comm)
        throw CommutationError("maps do not commute to tolerance (residual " + format_double(out.commutation) + ")",
                               out.commutation);
    double tmin = 1e300, tmax = -1e300, fmin = 1e300, fmax = -1e300, sum = 0.0;
    for (double x : probes) {
        const double Tx = tc->T(x);
        const double t = tc->T(g(x)) - Tx;
        const double s = tc->T(f(x)) - Tx;
        tmin = std::min(tmin, t);
        tmax = std::max(tmax, t);
        fmin = std::min(fmin, s);
        fmax = std::max(fmax, s);
        sum += t;
    }
    out.tau = sum / static_cast<double>(probes.size());
    out.spread = tmax - tmin;
    out.f_time = 0.5 * (fmin + fmax);
    if (std::abs(out.f_time - 1.0) > 1e3 * tol.eps_tau || fmax - fmin > 1e3 * tol.eps_tau)
        throw ClassificationError("f is not the time-1 map of the field (measured time " + format_double(out.f_time) + ")");
    if (out.spread > tol.eps_tau)
        throw ClassificationError("centralizer time is not constant (spread " + format_double(out.spread) + ")");
    return out;
}

inline CentralizerTime centralizer_time(const Diffeo& f, const Diffeo& g, const VectorField1D& nu,
                                        const Tolerances& tol = {}) {
    return centralizer_time(f, g, time_coordinate(nu), tol);
}

}  // namespace szk
