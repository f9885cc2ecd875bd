#pragma once

// Commuting pairs with known structure, shared by the test binaries.

#include <cmath>
#include <string>
#include <utility>

#include "szk/diffeo.hpp"
#include "szk/flow.hpp"
#include "szk/vector_field.hpp"

namespace szk::examples {

/// Time-t map of the logistic field -x(1-x) on [0, 1].
inline Diffeo logistic(double t) {
    return parse_diffeo("x/(x+(1-x)*exp(" + format_double(t) + "))", Interval(0.0, 1.0));
}

inline std::pair<Diffeo, Diffeo> logistic_pair(double tau) { return {logistic(1.0), logistic(tau)}; }

/// (h^q, h^p) for h the time-1 logistic map.
inline std::pair<Diffeo, Diffeo> rational_pair(int p, int q) {
    const Diffeo h = logistic(1.0);
    return {iterate(h, q), iterate(h, p)};
}

/// Field with a simple interior zero at 1/2: x(1/2 - x)(1 - x).
inline double cubic_nu(double x) { return x * (0.5 - x) * (1.0 - x); }
inline double cubic_dnu(double x) { return 0.5 - 3.0 * x + 3.0 * x * x; }

inline TimeCoordinatePtr sampled_tc(Interval dom, double (*nu)(double), double (*dnu)(double), std::size_t n = 4097) {
    return time_coordinate(sample_field(dom, cosine_grid(dom.lo, dom.hi, n), nu, dnu));
}

/// Time-1 and time-tau maps of the cubic field, built half by half and glued at 1/2.
inline std::pair<Diffeo, Diffeo> cubic_pair(double tau) {
    const auto left = sampled_tc(Interval(0.0, 0.5), cubic_nu, cubic_dnu);
    const auto right = sampled_tc(Interval(0.5, 1.0), cubic_nu, cubic_dnu);
    auto glue = [&](double t) {
        return piecewise({0.0, 0.5, 1.0}, {flow_map(left, t), flow_map(right, t)}, "cubic flow");
    };
    return {glue(1.0), glue(tau)};
}

/// Left of 1/2 a rational pair (h^2, h^3); right of 1/2 the time-1 and time-sqrt2
/// maps of a field with a cubic zero at 1/2, so 1/2 is flat for both maps.
inline Diffeo mixed_generator() { return parse_diffeo("x+2*x*(0.5-x)^3", Interval(0.0, 0.5)); }
inline double mixed_right_nu(double x) { return -8.0 * std::pow(x - 0.5, 3) * (1.0 - x); }
inline double mixed_right_dnu(double x) { return -24.0 * std::pow(x - 0.5, 2) * (1.0 - x) + 8.0 * std::pow(x - 0.5, 3); }

inline std::pair<Diffeo, Diffeo> mixed_pair() {
    const Diffeo h = mixed_generator();
    const auto tc = sampled_tc(Interval(0.5, 1.0), mixed_right_nu, mixed_right_dnu);
    const Diffeo f = piecewise({0.0, 0.5, 1.0}, {iterate(h, 2), flow_map(tc, 1.0)}, "mixed f");
    const Diffeo g = piecewise({0.0, 0.5, 1.0}, {iterate(h, 3), flow_map(tc, std::sqrt(2.0))}, "mixed g");
    return {f, g};
}

}  // namespace szk::examples
