#include <gtest/gtest.h>

#include <cmath>

#include "szk/expr.hpp"
#include "szk/diffeo.hpp"
#include "szk/szekeres.hpp"

using namespace szk;

namespace {

const double kLog2 = std::log(2.0);

Diffeo half_map() { return parse_diffeo("x/2", Interval(0.0, 1.0 - 0x1p-20), false, true); }
Diffeo logistic(double t = 1.0) {
    return parse_diffeo("x/(x+(1-x)*" + format_double(std::exp(t)) + ")", Interval(0.0, 1.0));
}

}  // namespace

TEST(Szekeres, LinearMapIsExact) {
    const auto r = szekeres_field(half_map());
    EXPECT_EQ(r.iterations_used, 1u);
    EXPECT_NEAR(r.lambda, 2 * kLog2, 1e-12);
    double worst = 0.0;
    for (std::size_t i = 0; i < r.field.size(); ++i) {
        const double x = r.field.x[i];
        if (!r.trust.contains(x)) continue;
        worst = std::max(worst, std::abs(r.field.nu[i] + x * kLog2) / (x * kLog2));
    }
    EXPECT_LT(worst, 1e-10);
    EXPECT_EQ(r.direction, Direction::Contracting);
}

TEST(Szekeres, LogisticRecovery) {
    const auto r = szekeres_field(logistic());
    double worst = 0.0;
    for (std::size_t i = 0; i < r.field.size(); ++i) {
        const double x = r.field.x[i];
        if (x < 1e-3 || x > 0.9) continue;
        const double nu = -x * (1 - x);
        worst = std::max(worst, std::abs(r.field.nu[i] - nu) / std::abs(nu));
        EXPECT_NEAR(r.field.dnu[i], -(1 - 2 * x), 1e-6) << x;
    }
    EXPECT_LT(worst, 1e-6);
    EXPECT_LE(r.c1_residual, 1e-10);
}

TEST(Szekeres, ScalingCheck) {
    EXPECT_LT(scaling_check(half_map()), 1e-12);
    EXPECT_LT(scaling_check(logistic()), 1e-8);
}

TEST(Szekeres, ExpandingBranchIsNegatedInverse) {
    const auto f = logistic();
    const auto r = szekeres_field(f);
    const auto ri = szekeres_values(invert(f), Side::Left, r.field.x);
    EXPECT_EQ(ri.direction, Direction::Expanding);
    double worst = 0.0;
    for (std::size_t i = 0; i < r.field.size(); ++i)
        if (r.trust.contains(r.field.x[i]))
            worst = std::max(worst, std::abs(ri.field.nu[i] + r.field.nu[i]) / std::abs(r.field.nu[i]));
    EXPECT_LT(worst, 1e-8);
    EXPECT_LT(scaling_check(invert(half_map())), 1e-12);
}

TEST(Szekeres, RightSideMatchesLogisticField) {
    // anchored at 1 the logistic map is expanding; the field is the same
    const auto r = szekeres_field(logistic(), Side::Right);
    EXPECT_EQ(r.direction, Direction::Expanding);
    EXPECT_NEAR(r.lambda, 1.0 / (std::exp(1.0) - 1.0), 1e-12);
    double worst = 0.0;
    for (std::size_t i = 0; i < r.field.size(); ++i) {
        const double x = r.field.x[i];
        if (x < 0.1 || x > 1 - 1e-3) continue;
        worst = std::max(worst, std::abs(r.field.nu[i] + x * (1 - x)) / (x * (1 - x)));
    }
    EXPECT_LT(worst, 1e-6);
    EXPECT_EQ(r.field.nu.back(), 0.0);
}

TEST(Szekeres, ParabolicLambdaIsOne) {
    Tolerances tol;
    tol.grid = 257;
    const auto f = parse_diffeo("x-x^2/4", Interval(0.0, 0.5), false, true);
    const auto r = szekeres_field(f, Side::Left, tol);
    EXPECT_EQ(r.lambda, 1.0);
    EXPECT_LT(r.field.nu[100], 0.0);
}

TEST(Szekeres, InteriorFixedPointRejected) {
    const auto f = parse_diffeo("x+0.1*x*(0.5-x)*(1-x)", Interval(0.0, 1.0));
    EXPECT_THROW(szekeres_field(f), DomainError);
}

TEST(Audit, LinearMap) {
    const auto f = half_map();
    const auto r = szekeres_field(f);
    const auto a = audit_bounds(f, r);
    EXPECT_NEAR(a.log_ratio_sup, std::log(2 * kLog2), 1e-12);
    EXPECT_TRUE(a.log_ratio_ok);
    EXPECT_TRUE(a.dnu_ok);
}

TEST(Audit, PerturbationFamily) {
    for (double eps : {0.05, 0.1, 0.2}) {
        const auto f = logistic(eps);
        const auto r = szekeres_field(f);
        const auto a = audit_bounds(f, r);
        EXPECT_LT(a.delta, 1.0);
        EXPECT_TRUE(a.log_ratio_ok) << eps << " " << a.log_ratio_sup << " " << a.u1_bound;
        EXPECT_TRUE(a.dnu_ok) << eps << " " << a.dnu_sup << " " << a.u2_bound;
        EXPECT_TRUE(a.theta_ok) << eps;
        EXPECT_TRUE(a.telescoping_ok) << eps << " " << a.telescoping_sup;
        EXPECT_TRUE(a.flow_c1_bound_ok) << eps << " " << a.flow_c1_worst_ratio;
        EXPECT_TRUE(a.tail_monotone);
    }
}
