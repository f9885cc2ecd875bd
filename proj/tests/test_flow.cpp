#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "szk/flow.hpp"
#include "szk/szekeres.hpp"

using namespace szk;

namespace {

VectorField1D logistic_field(std::size_t n = 4097) {
    return sample_field(Interval(0.0, 1.0), cosine_grid(0.0, 1.0, n), [](double x) { return -x * (1 - x); },
                        [](double x) { return 2 * x - 1; });
}

double logistic_flow(double x, double t) { return x / (x + (1 - x) * std::exp(t)); }

Diffeo logistic_map(double t) {
    return parse_diffeo("x/(x+(1-x)*" + format_double(std::exp(t)) + ")", Interval(0.0, 1.0));
}

}  // namespace

TEST(Flow, LinearTimeCoordinate) {
    const Interval dom(0.0, 1.0 - 0x1p-20);
    const auto nu = sample_field(dom, cosine_grid(dom.lo, dom.hi, 4097), [](double x) { return -x * std::log(2.0); },
                                 [](double) { return -std::log(2.0); });
    TimeCoordinate tc(nu, 0.5);
    const double c = tc.basepoint();
    EXPECT_NEAR(tc.T(c / 2) - tc.T(c), 1.0, 1e-12);
    EXPECT_NEAR(tc.T(c), 0.0, 0.0);
    const auto half = flow_map(nu, 1.0);
    for (double x : {1e-9, 1e-3, 0.1, 0.5, 0.9})
        EXPECT_NEAR(half(x), x / 2, 1e-10 * std::max(x, 1e-3)) << x;
}

TEST(Flow, LogisticTimeCoordinate) {
    TimeCoordinate tc(logistic_field(), 0.5);
    const double c = tc.basepoint();
    auto T = [](double x) { return std::log((1 - x) / x); };
    for (double x : {1e-8, 1e-3, 0.2, 0.7, 0.999, 1 - 1e-9})
        EXPECT_NEAR(tc.T(x) - tc.T(c), T(x) - T(c), 1e-9) << x;
    EXPECT_NEAR(tc.T(1 / (1 + std::exp(1.0))) - tc.T(0.5), 1.0, 1e-10);
}

TEST(Flow, LogisticFlowMaps) {
    const auto tc = time_coordinate(logistic_field());
    for (double t : {-2.0, -0.3, 0.0, 0.3, 1.0, std::sqrt(2.0), 5.0}) {
        const auto ft = flow_map(tc, t);
        for (double x : cosine_grid(0.0, 1.0, 301)) {
            const Jet j = ft.jet(x);
            ASSERT_NEAR(j.v, logistic_flow(x, t), 1e-9) << "t=" << t << " x=" << x;
            const double e = std::exp(t), den = x + (1 - x) * e;
            ASSERT_NEAR(j.d1, e / (den * den), 1e-7) << "t=" << t << " x=" << x;
        }
    }
}

TEST(Flow, GroupLawAndInverse) {
    const auto tc = time_coordinate(logistic_field());
    const double ts[] = {0.3, -0.3, 1.0, -1.0, std::sqrt(2.0)};
    const auto probes = cosine_grid(0.0, 1.0, 129);
    for (double s : ts)
        for (double t : ts) {
            const auto lhs = compose(flow_map(tc, s), flow_map(tc, t));
            EXPECT_LT(sup_distance(lhs, flow_map(tc, s + t), probes), 1e-8);
        }
    EXPECT_LT(sup_distance(flow_map(tc, -0.7), invert(flow_map(tc, 0.7)), probes), 1e-9);
}

TEST(Flow, DerivativeIdentity) {
    const auto tc = time_coordinate(logistic_field());
    for (double x : middle_probes(Interval(0.0, 1.0), 33)) {
        const Jet j = tc->flow_jet(x, 1.3);
        EXPECT_NEAR(tc->nu(j.v).first - j.d1 * tc->nu(x).first, 0.0, 1e-8);
    }
}

TEST(Flow, CentralizerTimes) {
    const auto f = logistic_map(1.0);
    const auto nu = szekeres_field(f).field;
    const auto tc = time_coordinate(nu);
    const auto probes = cosine_grid(0.05, 0.95, 257);
    EXPECT_LT(sup_distance(flow_map(tc, 1.0), f, probes), 1e-7);
    for (double tau : {2.0, 0.5, std::sqrt(2.0), std::numbers::phi}) {
        const auto ct = centralizer_time(f, logistic_map(tau), tc);
        EXPECT_NEAR(ct.tau, tau, 1e-8);
        EXPECT_LT(ct.spread, 1e-8);
    }
    EXPECT_NEAR(centralizer_time(f, f, tc).tau, 1.0, 1e-10);
    EXPECT_NEAR(centralizer_time(f, compose(f, f), tc).tau, 2.0, 1e-10);
}

TEST(Flow, RangeError) {
    const Interval dom(0.0, 1.0 - 0x1p-20);
    const auto nu = sample_field(dom, cosine_grid(dom.lo, dom.hi, 257), [](double x) { return x; },
                                 [](double) { return 1.0; });
    EXPECT_THROW((void)flow_map(nu, 20.0)(0.5), FlowRangeError);
}
