#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "examples.hpp"
#include "szk/homotopy.hpp"

using namespace szk;
namespace ex = szk::examples;

namespace {

HomotopyPath path_of(const std::pair<Diffeo, Diffeo>& fg) {
    return build_path(fg.first, fg.second, decompose(fg.first, fg.second));
}

void expect_sound(const PathReport& r) {
    EXPECT_LT(r.commutation_residual, 1e-7);
    EXPECT_EQ(r.end_residual, 0.0);
    EXPECT_EQ(r.fixed_residual, 0.0);
    EXPECT_GT(r.derivative_positivity_min, 0.0);
    EXPECT_LE(r.domination_excess, 1e-12);
    EXPECT_LT(r.start_residual, 1e-9);
    EXPECT_LT(r.formula_gap, 1e-7);
    EXPECT_TRUE(r.dyadic_decreasing);
    EXPECT_TRUE(r.envelope_ok);
    EXPECT_TRUE(r.ok());
}

}  // namespace

TEST(Homotopy, IdentityPair) {
    const Diffeo id = identity(Interval(0.0, 1.0));
    const auto path = path_of({id, id});
    const auto r = verify_path(path);
    expect_sound(r);
    EXPECT_EQ(r.commutation_residual, 0.0);
    EXPECT_EQ(r.boundary_derivative_deviation, 0.0);
}

TEST(Homotopy, LogisticHalfTime) {
    const auto path = path_of(ex::logistic_pair(std::sqrt(2.0)));
    const auto m = path.at(0.5);
    EXPECT_NEAR(m.f(0.5), 1.0 / (1.0 + std::exp(0.5)), 1e-8);
    EXPECT_NEAR(m.g(0.5), 1.0 / (1.0 + std::exp(0.5 * std::sqrt(2.0))), 1e-8);
    expect_sound(verify_path(path));
}

TEST(Homotopy, EndpointsExact) {
    const auto fg = ex::logistic_pair(std::sqrt(2.0));
    const auto path = path_of(fg);
    const auto one = path.at(1.0);
    for (double x : cosine_grid(0.0, 1.0, 257)) {
        EXPECT_EQ(one.f(x), x);
        EXPECT_EQ(one.g.jet(x).d1, 1.0);
        EXPECT_EQ(path.at(0.0).f(x), fg.first(x));
    }
}

TEST(Homotopy, RationalPairCommutesToRoundoff) {
    const auto path = path_of(ex::rational_pair(3, 2));
    ASSERT_EQ(path.components().size(), 1u);
    EXPECT_EQ(path.components()[0].kind, Kind::Rational);
    const auto r = verify_path(path);
    expect_sound(r);
    EXPECT_LT(r.commutation_residual, 1e-9);
}

TEST(Homotopy, MixedExample) {
    const auto path = path_of(ex::mixed_pair());
    ASSERT_EQ(path.components().size(), 2u);
    const auto r = verify_path(path);
    expect_sound(r);
    // probes on both sides of the flat junction, thirteen scales each
    std::size_t at_half = 0;
    for (const auto& dp : r.dyadic) at_half += std::abs(dp.c - 0.5) < 1e-9;
    EXPECT_EQ(at_half, 26u);
    EXPECT_GT(r.boundary_derivative_deviation, 0.0);
    EXPECT_EQ(r.c1_modulus.size(), 20u);
}

TEST(Homotopy, Frames) {
    const auto path = path_of(ex::logistic_pair(std::sqrt(2.0)));
    const auto nodes = cosine_grid(0.0, 1.0, 257);
    const auto frames = path_to_frames(path, {0.0, 0.5, 1.0}, nodes);
    ASSERT_EQ(frames.size(), 3u);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double x = nodes[i];
        EXPECT_EQ(frames[0].f[i], path.f()(x));
        EXPECT_NEAR(frames[1].f[i], x / (x + (1 - x) * std::exp(0.5)), 1e-8);
        EXPECT_EQ(frames[2].f[i], x);
    }
    std::ostringstream os;
    write_frames_csv(os, frames);
    EXPECT_EQ(os.str().substr(0, 22), "t,x,f_t,g_t,df_t,dg_t\n");
    EXPECT_THROW(path_to_frames(path, {1.5}, nodes), DomainError);
}
