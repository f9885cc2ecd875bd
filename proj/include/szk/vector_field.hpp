#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "szk/core.hpp"
#include "szk/diffeo.hpp"

namespace szk {

/// A C1 vector field on a subinterval, identified with the scalar function dx(nu),
/// sampled with its derivative and interpolated by cubic Hermite on the nodes.
struct VectorField1D {
    Interval domain;
    std::vector<double> x;
    std::vector<double> nu;
    std::vector<double> dnu;
    std::vector<double> interior_zeros;  // only set by the Takens merge
    std::string interior_regularity = "C1";

    [[nodiscard]] std::size_t size() const { return x.size(); }

    [[nodiscard]] std::size_t cell(double p) const {
        std::size_t i = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), p) - x.begin());
        return i == 0 ? 0 : std::min(i - 1, x.size() - 2);
    }

    /// Value and derivative at p.
    [[nodiscard]] std::pair<double, double> eval(double p) const {
        const std::size_t i = cell(p);
        const double h = x[i + 1] - x[i];
        const double t = (p - x[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        const double v = (2 * t3 - 3 * t2 + 1) * nu[i] + (t3 - 2 * t2 + t) * h * dnu[i] + (-2 * t3 + 3 * t2) * nu[i + 1] +
                         (t3 - t2) * h * dnu[i + 1];
        const double d = ((6 * t2 - 6 * t) * nu[i] + (-6 * t2 + 6 * t) * nu[i + 1]) / h + (3 * t2 - 4 * t + 1) * dnu[i] +
                         (3 * t2 - 2 * t) * dnu[i + 1];
        return {v, d};
    }
    [[nodiscard]] double operator()(double p) const { return eval(p).first; }

    [[nodiscard]] VectorField1D scaled(double c) const {
        VectorField1D out = *this;
        for (auto& v : out.nu) v *= c;
        for (auto& v : out.dnu) v *= c;
        return out;
    }
};

/// Sample a field given by closures (used for oracles and constructed examples).
template <class Nu, class DNu>
VectorField1D sample_field(Interval dom, const std::vector<double>& nodes, Nu&& nu, DNu&& dnu) {
    VectorField1D f;
    f.domain = dom;
    f.x = nodes;
    f.nu.reserve(nodes.size());
    f.dnu.reserve(nodes.size());
    for (double p : nodes) {
        f.nu.push_back(nu(p));
        f.dnu.push_back(dnu(p));
    }
    return f;
}

/// f* eta = (eta o f) / Df, with derivative D eta o f - (D^2 f / Df) (eta o f) / Df.
inline VectorField1D pullback(const Diffeo& f, const VectorField1D& eta) {
    if (std::abs(f.domain().lo - eta.domain.lo) > 1e-15 || std::abs(f.domain().hi - eta.domain.hi) > 1e-15)
        throw DomainError("pullback: domain mismatch");
    VectorField1D out = eta;
    for (std::size_t i = 0; i < eta.size(); ++i) {
        const Jet j = f.jet(eta.x[i]);
        if (!(j.d1 > 0.0)) throw DomainError("pullback: Df must be positive");
        const auto [e, de] = eta.eval(std::clamp(j.v, eta.x.front(), eta.x.back()));
        const double w = e / j.d1;
        out.nu[i] = w;
        out.dnu[i] = de - (j.d2 / j.d1) * w;
    }
    return out;
}

inline void write_field_csv(std::ostream& os, const VectorField1D& f) {
    os << "x,nu,dnu\n";
    for (std::size_t i = 0; i < f.size(); ++i)
        os << format_double(f.x[i]) << ',' << format_double(f.nu[i]) << ',' << format_double(f.dnu[i]) << '\n';
}

}  // namespace szk
