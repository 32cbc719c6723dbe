#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "ehd/field.hpp"

using namespace ehd;

namespace {

const double s3 = std::sqrt(3.0);

template <class F>
double simpson(F f, double a, double b, int n = 4000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int k = 1; k < n; ++k) s += f(a + k * h) * (k % 2 ? 4 : 2);
    return s * h / 3;
}

ScalarField square(double h, auto f) { return ScalarField::square(1.125, h, f); }

double hausdorff_to_axis(const Polyline& pl) {
    double m = 0.0;
    for (const Vec2& v : pl.vertices) m = std::max(m, std::abs(v.y));
    return m;
}

} // namespace

TEST(FieldConstruct, RejectsBadInput) {
    EXPECT_THROW(ScalarField({0, 0}, 0.1, 4, 4, std::vector<double>(16)), error);
    EXPECT_THROW(ScalarField({0, 0}, 0.1, 8, 8, std::vector<double>(10)), error);
    std::vector<double> v(64, 0.0);
    v[3] = std::nan("");
    EXPECT_THROW(ScalarField({0, 0}, 0.1, 8, 8, v), error);
    EXPECT_THROW(ScalarField({0, 0}, -0.1, 8, 8, std::vector<double>(64)), error);
}

TEST(FieldSample, Constant) {
    const auto u = square(1.0 / 16, [](Vec2) { return 5.0; });
    EXPECT_DOUBLE_EQ(sample(u, {0.123, -0.77}), 5.0);
}

TEST(FieldSample, AffineExact) {
    const auto u = square(1.0 / 16, [](Vec2 p) { return p.y; });
    EXPECT_NEAR(sample(u, {0.3, 0.7}), 0.7, 1e-15);
}

TEST(FieldSample, OutsideHull) {
    const auto u = square(1.0 / 16, [](Vec2 p) { return p.y; });
    try {
        sample(u, {2.0, 0.0});
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::out_of_domain);
    }
}

TEST(FieldSample, SecondOrderOnA1) {
    // interior mid-cell points away from the kinks
    const auto p = a1_profile();
    std::vector<double> err;
    for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
        const auto u = ScalarField::square(1.125, h, p);
        double e = 0.0;
        for (double t : {-2.2, -1.6, -1.0})
            for (double r : {0.3, 0.6, 0.9}) {
                Vec2 x = from_polar(r, t);
                x = {std::floor(x.x / h) * h + 0.5 * h, std::floor(x.y / h) * h + 0.5 * h};
                e = std::max(e, std::abs(sample(u, x) - eval(p, x)));
            }
        err.push_back(e);
    }
    EXPECT_GT(err[0] / err[1], 3.0);
    EXPECT_GT(err[1] / err[2], 3.0);
}

TEST(FieldGrad, AffineAndQuadraticExact) {
    const auto u = square(1.0 / 16, [](Vec2 p) { return p.y; });
    const Vec2 g = grad(u, {0.31, -0.4});
    EXPECT_NEAR(g.x, 0.0, 1e-14);
    EXPECT_NEAR(g.y, 1.0, 1e-13);
    const auto q = square(1.0 / 16, [](Vec2 p) { return p.x * p.x; });
    const Vec2 gq = grad(q, {1.0, 0.0});
    EXPECT_NEAR(gq.x, 2.0, 1e-13);
    EXPECT_NEAR(gq.y, 0.0, 1e-14);
}

TEST(FieldGrad, NearHullRejected) {
    const auto u = square(1.0 / 16, [](Vec2 p) { return p.y; });
    EXPECT_THROW(grad(u, {1.12, 0.0}), error);
}

TEST(FieldGrad, ConvergesOnA1) {
    const auto p = a1_profile();
    std::vector<double> err;
    for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
        const auto u = ScalarField::square(1.125, h, p);
        double e = 0.0;
        for (double t : {-2.0, -1.57, -1.2})
            for (double r : {0.4, 0.8}) {
                const Vec2 x = from_polar(r, t);
                e = std::max(e, norm(grad(u, x) - gradient(p, x)));
            }
        err.push_back(e);
    }
    EXPECT_GT(err[0] / err[1], 1.8);
    EXPECT_GT(err[1] / err[2], 1.8);
    EXPECT_LT(err[2], 1e-3);
}

TEST(FieldQuadrature, CircleConstant) {
    const auto u = ScalarField::square(2.25, 1.0 / 16, [](Vec2) { return 1.0; });
    EXPECT_NEAR(circle_integral(u, [](Vec2) { return 1.0; }, {0, 0}, 2.0), 4 * pi, 1e-12);
}

TEST(FieldQuadrature, CircleSinSquared) {
    const auto u = square(1.0 / 64, [](Vec2 p) { return p.y; });
    const double v = circle_integral(u, [&](Vec2 x) { return std::pow(sample(u, x), 2); }, {0, 0}, 1.0);
    EXPECT_NEAR(v, pi, 1e-12);
}

TEST(FieldQuadrature, CircleA1Squared) {
    const auto p = a1_profile();
    const double oracle = simpson([&](double t) { return std::pow(eval(p, Polar{1.0, t}), 2); }, -5 * pi / 6, -pi / 6);
    EXPECT_NEAR(oracle, 2 * pi / 27, 1e-12);
    const PhasedField pf(ScalarField::square(1.125, 1.0 / 128, p));
    const double v = phase_circle_integral(
        pf, Phase::negative, [&](Vec2 x) { return std::pow(pf.part(Phase::negative, x), 2); }, {0, 0}, 1.0);
    EXPECT_NEAR(v, oracle, 1e-4);
}

TEST(FieldQuadrature, BallConstantAndDensities) {
    const auto u = square(1.0 / 128, [](Vec2 p) { return p.y; });
    EXPECT_NEAR(ball_integral(u, [](Vec2) { return 1.0; }, {0, 0}, 1.0), pi, 1e-12);
    const double half = ball_integral(u, [](Vec2 x) { return std::max(-x.y, 0.0); }, {0, 0}, 1.0);
    EXPECT_NEAR(half, 2.0 / 3, 1e-4);
    const PhasedField pf(ScalarField::square(1.125, 1.0 / 128, a1_profile()));
    const double d =
        phase_ball_integral(pf, Phase::negative, [](Vec2 x) { return weight_below(x, 0.0); }, {0, 0}, 1.0);
    EXPECT_NEAR(d, s3 / 3, 1e-3);
}

TEST(FieldQuadrature, LinearAndMonotone) {
    const auto u = square(1.0 / 32, [](Vec2 p) { return p.x + 2 * p.y; });
    auto f = [](Vec2 x) { return x.x * x.x; };
    auto g = [](Vec2 x) { return 1 + x.y * x.y; };
    const double a = ball_integral(u, f, {0.1, 0.1}, 0.7), b = ball_integral(u, g, {0.1, 0.1}, 0.7);
    const double ab = ball_integral(u, [&](Vec2 x) { return 2 * f(x) + 3 * g(x); }, {0.1, 0.1}, 0.7);
    EXPECT_NEAR(ab, 2 * a + 3 * b, 1e-12);
    EXPECT_LE(a, ball_integral(u, [&](Vec2 x) { return f(x) + 0.01; }, {0.1, 0.1}, 0.7));
    EXPECT_GE(a, 0.0);
}

TEST(FieldQuadrature, ConvergesForSmoothIntegrand) {
    // int_{B_1} x1^2 x2^2 = pi/24
    std::vector<double> err;
    for (int k = 0; k < 3; ++k) {
        const int n_rho = 8 << k, n_theta = 64 << k;
        err.push_back(std::abs(ball_quadrature([](Vec2 x) { return x.x * x.x * x.y * x.y; }, {0, 0}, 1.0, n_rho, n_theta) -
                               pi / 24));
    }
    EXPECT_GT(err[0] / err[1], 3.0);
    EXPECT_GT(err[1] / err[2], 3.0);
}

TEST(FieldQuadrature, LeavesHull) {
    const auto u = square(1.0 / 16, [](Vec2 p) { return p.y; });
    try {
        circle_integral(u, [](Vec2) { return 1.0; }, {0.5, 0}, 1.0);
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::out_of_domain);
    }
    EXPECT_THROW(ball_integral(u, [](Vec2) { return 1.0; }, {0, 0}, 2.0), error);
    EXPECT_THROW(circle_quadrature([](Vec2) { return 1.0; }, {0, 0}, 1.0, 16), error);
}

TEST(FieldLevelSet, FlatInterface) {
    const double h = 1.0 / 32;
    const auto u = square(h, [](Vec2 p) { return p.y; });
    const auto lines = extract_level_set(PhasedField(u), Phase::negative);
    ASSERT_EQ(lines.size(), 1u);
    EXPECT_LE(hausdorff_to_axis(lines[0]), 0.5 * h);
    EXPECT_NEAR(lines[0].vertices.front().x * lines[0].vertices.back().x, -1.125 * 1.125, 1e-9);
    for (std::size_t k = 1; k < lines[0].vertices.size(); ++k) {
        const double d = norm(lines[0].vertices[k] - lines[0].vertices[k - 1]);
        EXPECT_GT(d, 0.0);
        EXPECT_LE(d, 2 * h);
    }
}

TEST(FieldLevelSet, A1Rays) {
    const double h = 1.0 / 64;
    const auto u = ScalarField::square(1.125, h, a1_profile());
    const auto lines = extract_level_set(PhasedField(u), Phase::negative);
    ASSERT_EQ(lines.size(), 1u);
    // every vertex far from the vertex lies on one of the two rays
    int left = 0, right = 0;
    for (const Vec2& v : lines[0].vertices) {
        if (norm(v) < 0.2 || std::abs(v.x) > 1.0) continue;
        const double t = std::atan2(v.y, v.x);
        if (std::abs(t + pi / 6) < 0.05) ++right;
        else if (std::abs(t + 5 * pi / 6) < 0.05) ++left;
        else ADD_FAILURE() << "vertex off the rays at angle " << t;
        const double dist = std::min(std::abs(std::sin(t + pi / 6)), std::abs(std::sin(t + 5 * pi / 6))) * norm(v);
        EXPECT_LE(dist, h);
    }
    EXPECT_GT(left, 20);
    EXPECT_GT(right, 20);
}

TEST(FieldLevelSet, SignsAlternateAcross) {
    const double h = 1.0 / 32;
    const auto u = square(h, [](Vec2 p) { return p.y - 0.3 * std::sin(3 * p.x); });
    for (const auto& pl : extract_level_set(PhasedField(u), Phase::negative))
        for (std::size_t k = 0; k + 1 < pl.vertices.size(); ++k) {
            const Vec2 a = pl.vertices[k], b = pl.vertices[k + 1];
            const Vec2 m = (a + b) * 0.5;
            const Vec2 t = b - a;
            const Vec2 n = Vec2{-t.y, t.x} * (1.0 / norm(t));
            const Vec2 p1 = m + n * h, p2 = m - n * h;
            if (!u.contains(p1) || !u.contains(p2)) continue;
            EXPECT_LT(sample(u, p1) * sample(u, p2), 0.0);
        }
}

TEST(FieldLevelSet, EmptyForConstantSign) {
    const auto u = square(1.0 / 16, [](Vec2) { return -1.0; });
    EXPECT_TRUE(extract_level_set(PhasedField(u), Phase::negative).empty());
}

TEST(FieldRescale, A1Homogeneous) {
    const auto p = a1_profile();
    const auto u = ScalarField::square(1.125, 1.0 / 128, p);
    for (double r : {0.25, 0.5, 1.0}) {
        const auto v = rescale(u, {0, 0}, r, 1.5);
        double e = 0.0;
        for (int j = 0; j < v.ny(); j += 4)
            for (int i = 0; i < v.nx(); i += 4) e = std::max(e, std::abs(v.at(i, j) - eval(p, v.node(i, j))));
        EXPECT_LT(e, 2e-3 / r) << r; // interpolation error grows like (h/r)
        EXPECT_DOUBLE_EQ(v.datum(), 0.0);
    }
}

TEST(FieldRescale, ZeroAndLinear) {
    const auto z = square(1.0 / 32, [](Vec2) { return 0.0; });
    EXPECT_EQ(rescale(z, {0, 0}, 0.5, 1.5).max_abs(), 0.0);
    const auto u = square(1.0 / 32, [](Vec2 p) { return p.y; });
    const auto v = rescale(u, {0, 0}, 0.25, 1.0);
    for (int j = 0; j < v.ny(); j += 8)
        for (int i = 0; i < v.nx(); i += 8) EXPECT_NEAR(v.at(i, j), v.node(i, j).y, 1e-13);
}

TEST(FieldRescale, DatumTransforms) {
    auto u = square(1.0 / 32, [](Vec2 p) { return p.y; });
    u.set_datum(0.2);
    const auto v = rescale(u, {0.1, -0.3}, 0.5, 1.5);
    EXPECT_NEAR(v.datum(), (0.2 + 0.3) / 0.5, 1e-15);
}

TEST(FieldRescale, Composes) {
    const auto u = ScalarField::square(1.125, 1.0 / 128, [](Vec2 p) { return p.y + p.x * p.x - 0.5 * p.x * p.y; });
    const Vec2 x0{0.1, -0.05};
    const auto once = rescale(u, x0, 0.5, 1.5, 257);
    const auto twice = rescale(once, {0, 0}, 0.5, 1.5, 257);
    const auto direct = rescale(u, x0, 0.25, 1.5, 257);
    double e = 0.0, scale = direct.max_abs();
    for (std::size_t k = 0; k < direct.values().size(); ++k)
        e = std::max(e, std::abs(twice.values()[k] - direct.values()[k]));
    EXPECT_LT(e, 1e-3 * scale);
}

TEST(FieldRescale, Errors) {
    const auto u = square(1.0 / 32, [](Vec2 p) { return p.y; });
    EXPECT_THROW(rescale(u, {0, 0}, 2.0, 1.5), error);
    EXPECT_THROW(rescale(u, {0, 0}, 0.5, 2.0), error);
}

TEST(FieldIo, RoundTrip) {
    auto u = ScalarField::from_function({-0.5, 0.25}, 1.0 / 7, 9, 11, [](Vec2 p) { return std::sin(p.x) * p.y; }, 0.3);
    std::stringstream ss;
    ss << "# comment line\n";
    write_field(ss, u);
    const auto v = read_field(ss);
    EXPECT_EQ(v.nx(), 9);
    EXPECT_EQ(v.ny(), 11);
    EXPECT_EQ(v.h(), u.h());
    EXPECT_EQ(v.datum(), 0.3);
    EXPECT_EQ(v.origin(), u.origin());
    EXPECT_EQ(v.values(), u.values());
    std::stringstream bad("9 11 0.1 0 0 0\n1 2 3\n");
    EXPECT_THROW(read_field(bad), error);
}

TEST(FieldIo, PolylineCsv) {
    const auto u = square(1.0 / 16, [](Vec2 p) { return p.y; });
    std::stringstream ss;
    write_polylines_csv(ss, extract_level_set(PhasedField(u), Phase::negative));
    std::string header;
    std::getline(ss, header);
    EXPECT_EQ(header, "polyline,closed,vertex,x,y");
    int rows = 0;
    for (std::string line; std::getline(ss, line);) ++rows;
    EXPECT_GT(rows, 30);
}

TEST(FieldPhases, PartsPartition) {
    const PhasedField pf(ScalarField::square(1.125, 1.0 / 64, a3_profile()));
    for (double t = -3.0; t < 3.1; t += 0.37)
        for (double r : {0.2, 0.55, 0.9}) {
            const Vec2 x = from_polar(r, t);
            const double m = pf.part(Phase::negative, x), p = pf.part(Phase::positive, x);
            EXPECT_LE(m, 0.0);
            EXPECT_GE(p, 0.0);
            EXPECT_EQ(m * p, 0.0);
        }
}
