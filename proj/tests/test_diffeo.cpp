#include <gtest/gtest.h>

#include <cmath>

#include "szk/diffeo.hpp"
#include "szk/expr.hpp"

using namespace szk;

TEST(Expr, ParsesAndDifferentiates) {
    const auto e = expr::parse("x/(x+(1-x)*exp(1))");
    const double x = 0.3, E = std::exp(1.0), den = x + (1 - x) * E;
    EXPECT_DOUBLE_EQ(expr::eval(e, x), x / den);
    EXPECT_NEAR(expr::eval(expr::derivative(e), x), E / (den * den), 1e-15);
    EXPECT_DOUBLE_EQ(expr::eval(expr::parse("-x^2 + sqrt(4)"), 3.0), -7.0);
}

TEST(Expr, ErrorPosition) {
    try {
        (void)expr::parse("x*(1+x");
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position, 6u);
        EXPECT_EQ(expr::caret("x*(1+x", e.position), "x*(1+x\n      ^");
    }
    EXPECT_THROW((void)expr::parse("y+1"), ParseError);
}

TEST(Diffeo, InverseAndIterate) {
    const Diffeo f = parse_diffeo("x/(x+(1-x)*exp(1))");
    const Diffeo fi = invert(f);
    for (double x : cosine_grid(0.0, 1.0, 65)) {
        EXPECT_NEAR(fi(f(x)), x, 1e-13);
        EXPECT_NEAR(iterate(f, 3)(x), x / (x + (1 - x) * std::exp(3.0)), 1e-14);
        EXPECT_NEAR(iterate(f, -2)(x), x / (x + (1 - x) * std::exp(-2.0)), 1e-12);
    }
}

TEST(Diffeo, PiecewiseInverseKeepsBreaks) {
    const Diffeo a = parse_diffeo("x-x*(0.5-x)", Interval(0.0, 0.5));
    const Diffeo b = parse_diffeo("x+(x-0.5)*(1-x)", Interval(0.5, 1.0));
    const Diffeo p = piecewise({0.0, 0.5, 1.0}, {a, b});
    const Diffeo pi = invert(p);
    EXPECT_EQ(p(0.5), 0.5);
    for (double x : cosine_grid(0.0, 1.0, 129)) EXPECT_NEAR(pi(p(x)), x, 1e-13);
}

TEST(Diffeo, SampledRestrictedToPiece) {
    // composing a sampled map restricted to a sub-interval resamples there only
    const Diffeo f = parse_diffeo("x-x*(0.5-x)*(1-x)");
    const Diffeo s = resample(f, cosine_grid(0.0, 1.0, 257)).with_domain(Interval(0.0, 0.5));
    const Diffeo ss = compose(s, s);
    EXPECT_EQ(ss.domain().hi, 0.5);
    for (double x : cosine_grid(0.0, 0.5, 33)) EXPECT_NEAR(ss(x), f(f(x)), 1e-8);
}

TEST(Diffeo, RejectsDecreasingMaps) {
    EXPECT_THROW(check_monotone(parse_diffeo("1-x")), DomainError);
    EXPECT_THROW(check_endpoints(parse_diffeo("x/2")), DomainError);
}
