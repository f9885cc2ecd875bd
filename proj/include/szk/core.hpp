#pragma once

// Shared vocabulary: intervals, grids, error types and the tolerance set.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace szk {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t pos)
        : Error(msg + " at position " + std::to_string(pos)), position(pos) {}
    std::size_t position;
};

/// The input does not satisfy a precondition of the operation (endpoints not fixed,
/// derivative not positive, domains differ, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, double last_residual)
        : Error(msg), residual(last_residual) {}
    double residual;
};

class ClassificationError : public Error {
public:
    using Error::Error;
};

/// A flow map was asked for a time that leaves the tabulated range of the time coordinate.
class FlowRangeError : public Error {
public:
    FlowRangeError(const std::string& msg, double lo, double hi)
        : Error(msg), attainable_lo(lo), attainable_hi(hi) {}
    double attainable_lo;
    double attainable_hi;
};

class CommutationError : public Error {
public:
    CommutationError(const std::string& msg, double res) : Error(msg), residual(res) {}
    double residual;
};

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    Interval() = default;
    Interval(double a, double b) : lo(a), hi(b) {
        if (!(a < b)) throw DomainError("interval requires lo < hi");
    }

    [[nodiscard]] double length() const { return hi - lo; }
    [[nodiscard]] double mid() const { return 0.5 * (lo + hi); }
    [[nodiscard]] bool contains(double x) const { return x >= lo && x <= hi; }
    [[nodiscard]] double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Which endpoint of a component is the fixed point the construction is anchored at.
/// Left: [a,b) with a fixed.  Right: (a,b] with b fixed.
enum class Side { Left, Right };

/// Cosine-graded nodes on [lo, hi]: dense near both ends, endpoints exact.
inline std::vector<double> cosine_grid(double lo, double hi, std::size_t n) {
    if (n < 2) throw DomainError("grid needs at least two nodes");
    std::vector<double> x(n);
    const double len = hi - lo;
    for (std::size_t i = 0; i < n; ++i) {
        const double th = std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1);
        // sin^2 form keeps relative accuracy of the first offsets
        const double s = std::sin(0.5 * th);
        x[i] = lo + len * s * s;
    }
    x.front() = lo;
    x.back() = hi;
    // The symmetric half is taken from hi so that offsets near hi are exact too.
    for (std::size_t i = n / 2 + 1; i + 1 < n; ++i) {
        const double th = std::numbers::pi * static_cast<double>(n - 1 - i) / static_cast<double>(n - 1);
        const double s = std::sin(0.5 * th);
        x[i] = hi - len * s * s;
    }
    return x;
}

/// Chebyshev points of the middle half of [lo, hi].
inline std::vector<double> middle_probes(const Interval& iv, std::size_t n) {
    std::vector<double> p(n);
    const double c = iv.mid();
    const double r = 0.25 * iv.length();
    for (std::size_t i = 0; i < n; ++i) {
        const double th = std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        p[i] = c - r * std::cos(th);
    }
    return p;
}

/// Tolerances and sizes shared by the whole pipeline; every one is a config knob.
struct Tolerances {
    std::size_t grid = 4097;
    double eps_edge = 0x1p-20;      // half-open truncation, relative to component length
    double trust = 1e-3;            // audit trust margin, relative to component length
    double eps_conv = 1e-10;        // C1 increment of the pullback iteration
    std::size_t max_iter = 100000;
    double eps_inv = 1e-12;         // inversion, relative to domain length
    double eps_comm = 1e-7;
    double eps_tau = 1e-7;
    double eps_flat = 1e-8;
    double eps_rat = 1e-9;
    int q_max = 64;
    double eps_comp = 1e-7;
    double eps_glue = 1e-5;
    double eps_fixed = 1e-13;       // detection floor for f = id

    void validate() const {
        if (grid < 257 || ((grid - 1) & (grid - 2)) != 0)
            throw DomainError("grid size must be 2^k + 1 and at least 257");
        for (double v : {eps_edge, trust, eps_conv, eps_inv, eps_comm, eps_tau, eps_flat, eps_rat,
                         eps_comp, eps_glue, eps_fixed})
            if (!(v > 0.0)) throw DomainError("tolerances must be positive");
        if (q_max < 1 || max_iter < 1) throw DomainError("q_max and max_iter must be positive");
    }
};

}  // namespace szk
