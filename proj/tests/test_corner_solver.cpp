#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "ehd/corner_solver.hpp"

using namespace ehd;

namespace {

const double s3 = std::sqrt(3.0);

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace

TEST(CornerResidual, UnilateralAtPi) {
    const CornerSystem sys{CornerVariant::unilateral_config_1};
    const double c2 = 2 * s3 / 9;
    EXPECT_LT(max_abs(residual(sys, {{c2, c2}, -pi})), 1e-15);
}

TEST(CornerResidual, BilateralRoot) {
    const CornerSystem sys{CornerVariant::bilateral};
    EXPECT_LT(max_abs(residual(sys, {{2.0 / 3, 4.0 / 9, 4.0 / 9}, -5 * pi / 6})), 1e-15);
}

TEST(CornerResidual, ZeroAmplitudesBySubstitution) {
    // with zero amplitudes the residual is minus the right-hand side:
    // (sin t, sin(t + 2pi/3), -sin(t + 4pi/3)) at t = -5pi/6
    const CornerSystem sys{CornerVariant::unilateral_config_1};
    const auto r = residual(sys, {{0.0, 0.0}, -5 * pi / 6});
    ASSERT_EQ(r.size(), 3u);
    EXPECT_NEAR(r[0], -0.5, 1e-15);
    EXPECT_NEAR(r[1], -0.5, 1e-15);
    EXPECT_NEAR(r[2], -1.0, 1e-15);
}

TEST(CornerResidual, DimensionMismatch) {
    try {
        residual(CornerSystem{CornerVariant::bilateral}, {{1.0, 2.0}, -pi});
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::invalid_argument);
    }
}

TEST(CornerSolve, UnilateralRoots) {
    // one opening position per sign configuration; together theta1 in {-pi, -2pi/3}
    std::vector<double> thetas;
    for (auto v : {CornerVariant::unilateral_config_1, CornerVariant::unilateral_config_2}) {
        const auto sol = solve(CornerSystem{v});
        EXPECT_FALSE(sol.degenerate_family);
        EXPECT_LE((pi / 3) / (sol.grid_points - 1), 1e-3); // scan spacing
        ASSERT_EQ(sol.roots.size(), 1u) << to_string(v);
        thetas.push_back(sol.roots[0].theta1);
    }
    std::sort(thetas.begin(), thetas.end());
    EXPECT_NEAR(thetas[0], -pi, 1e-12);
    EXPECT_NEAR(thetas[1], -2 * pi / 3, 1e-12);
    const auto all = solve_unilateral();
    ASSERT_EQ(all.size(), 2u);
    for (const auto& r : all) {
        EXPECT_LT(r.residual_norm, 1e-12);
        for (double a : r.amplitudes) EXPECT_NEAR(a, std::sqrt(2 * s3) / 3, 1e-12);
        for (double c : r.squared) EXPECT_NEAR(c, 2 * s3 / 9, 1e-12);
    }
}

TEST(CornerSolve, BilateralRoot) {
    const auto sol = solve(CornerSystem{CornerVariant::bilateral});
    ASSERT_EQ(sol.roots.size(), 1u);
    const auto& r = sol.roots[0];
    EXPECT_NEAR(r.theta1, -5 * pi / 6, 1e-12);
    ASSERT_EQ(r.amplitudes.size(), 3u);
    EXPECT_NEAR(r.amplitudes[0], std::sqrt(6.0) / 3, 1e-12);
    EXPECT_NEAR(r.amplitudes[1], 2.0 / 3, 1e-12);
    EXPECT_NEAR(r.amplitudes[2], 2.0 / 3, 1e-12);
    EXPECT_LT(r.residual_norm, 1e-12);
}

TEST(CornerSolve, NoInteriorUnilateralRoots) {
    for (const auto& r : solve_unilateral())
        EXPECT_TRUE(std::abs(r.theta1 + pi) < 1e-9 || std::abs(r.theta1 + 2 * pi / 3) < 1e-9) << r.theta1;
}

TEST(CornerSolve, DegenerateWithoutGravity) {
    const auto sol = solve(CornerSystem{CornerVariant::unilateral_config_1, 0.0});
    EXPECT_TRUE(sol.degenerate_family);
}

TEST(CornerSolve, RootsGiveFreeBoundarySolutions) {
    for (const auto& r : solve_unilateral()) {
        const auto p = profile_from_root(r);
        EXPECT_NO_THROW(validate(p));
        for (const auto& rr : fb_residual(p, 0.0)) EXPECT_LT(std::abs(rr.residual), 1e-12) << r.theta1;
    }
    const auto b = solve(CornerSystem{CornerVariant::bilateral});
    for (const auto& rr : fb_residual(profile_from_root(b.roots.at(0)), 0.0)) EXPECT_LT(std::abs(rr.residual), 1e-12);
}

TEST(CornerSolve, VariantNames) {
    for (auto v : {CornerVariant::unilateral_config_1, CornerVariant::unilateral_config_2, CornerVariant::bilateral})
        EXPECT_EQ(parse_corner_variant(to_string(v)), v);
    EXPECT_FALSE(parse_corner_variant("trilateral").has_value());
}

TEST(CornerSolve, CsvAndDeterminism) {
    const auto a = solve(CornerSystem{CornerVariant::bilateral}), b = solve(CornerSystem{CornerVariant::bilateral});
    std::ostringstream sa, sb;
    write_roots_csv(sa, a);
    write_roots_csv(sb, b);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(sa.str().substr(0, sa.str().find('\n')), "variant,theta1,squared_amplitudes,amplitudes,residual");
}
