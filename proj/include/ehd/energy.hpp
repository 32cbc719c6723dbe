#pragma once
//
// energy.hpp
//
// The two-phase functional
//     E(u) = int |grad u|^2 + (x2 - x2^0)^+ chi{u>0} + (x2^0 - x2)^+ chi{u<0}
// its one-phase restriction, and the domain-variation first variations that
// characterize weak solutions.
//

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "field.hpp"

namespace ehd {

enum class WeightSelector { two_phase, one_phase_negative };

/// Gravity weights lambda_+^2 = (x2 - x2^0)^+, lambda_-^2 = (x2 - x2^0)^+ + x2^0 - x2, lambda_0^2 = 0.
struct WeightSpec {
    double x2_0 = 0.0;
    WeightSelector selector = WeightSelector::two_phase;

    double positive(Vec2 p) const {
        return selector == WeightSelector::two_phase ? std::max(p.y - x2_0, 0.0) : 0.0;
    }
    double negative(Vec2 p) const { return std::max(p.y - x2_0, 0.0) + x2_0 - p.y; }
};

/// Integration region: a ball, or the whole lattice hull.
struct Region {
    bool whole = false;
    Vec2 center{};
    double radius = 0.0;

    static Region ball(Vec2 c, double r) { return {false, c, r}; }
    static Region hull() { return {true, {}, 0.0}; }
};

namespace detail {

/// Integral of f over the phase within the region. Hull integrals use a 4x4
/// midpoint rule per cell, which is first order at indicator jumps.
template <class F>
double region_phase_integral(const PhasedField& pf, Phase ph, const Region& reg, F&& f) {
    if (!reg.whole) return phase_ball_integral(pf, ph, f, reg.center, reg.radius);
    const ScalarField& u = pf.field();
    constexpr int sub = 4;
    const double h = u.h(), dA = (h / sub) * (h / sub);
    double total = 0.0;
    for (int j = 0; j + 1 < u.ny(); ++j)
        for (int i = 0; i + 1 < u.nx(); ++i) {
            const Vec2 base = u.node(i, j);
            for (int b = 0; b < sub; ++b)
                for (int a = 0; a < sub; ++a) {
                    const Vec2 p = base + Vec2{(a + 0.5) * h / sub, (b + 0.5) * h / sub};
                    if (pf.inside(ph, p)) total += f(p) * dA;
                }
        }
    return total;
}

} // namespace detail

/// Dirichlet energy plus gravity weight of one phase.
inline double phase_energy(const PhasedField& pf, Phase ph, const Region& reg, const WeightSpec& w) {
    return detail::region_phase_integral(pf, ph, reg, [&](Vec2 p) {
        return pf.grad_sq(ph, p) + (ph == Phase::positive ? w.positive(p) : w.negative(p));
    });
}

inline double e_ehd(const PhasedField& pf, const Region& reg) {
    const WeightSpec w{pf.datum(), WeightSelector::two_phase};
    return phase_energy(pf, Phase::negative, reg, w) + phase_energy(pf, Phase::positive, reg, w);
}

/// One-phase energy of u^-; the field must be nonpositive on the region.
inline double e_onephase(const PhasedField& pf, const Region& reg) {
    const ScalarField& u = pf.field();
    for (int j = 0; j < u.ny(); ++j)
        for (int i = 0; i < u.nx(); ++i) {
            if (pf.snapped(i, j) <= 0.0) continue;
            const Vec2 p = u.node(i, j);
            const bool in_region = reg.whole || norm(p - reg.center) <= reg.radius + u.h();
            if (in_region) throw error(errc::not_one_phase, "positive values inside the region");
        }
    const WeightSpec w{pf.datum(), WeightSelector::one_phase_negative};
    return phase_energy(pf, Phase::negative, reg, w);
}

// ---------------------------------------------------------------------------
// test vector fields

/// phi(x) = eta(x) (b + A (x - c)),  eta = (1 - |x-c|^2/R^2)^2 on the disk of radius R.
struct TestVectorField {
    Vec2 center{};
    double radius = 1.0;
    Vec2 b{};
    Mat2 a{};

    Vec2 value(Vec2 x) const {
        const Vec2 d = x - center;
        const double s = dot(d, d) / (radius * radius);
        if (s >= 1.0) return {0.0, 0.0};
        const double eta = (1 - s) * (1 - s);
        return (b + a * d) * eta;
    }

    Mat2 jacobian(Vec2 x) const {
        const Vec2 d = x - center;
        const double s = dot(d, d) / (radius * radius);
        if (s >= 1.0) return {};
        const double eta = (1 - s) * (1 - s);
        const Vec2 grad_eta = d * (-4.0 * (1 - s) / (radius * radius));
        const Vec2 v = b + a * d;
        return {v.x * grad_eta.x + eta * a.a11, v.x * grad_eta.y + eta * a.a12,
                v.y * grad_eta.x + eta * a.a21, v.y * grad_eta.y + eta * a.a22};
    }

    double divergence(Vec2 x) const { return jacobian(x).trace(); }

    /// sup|phi| + sup|D phi| (max entry) estimated on a dense polar grid over the support.
    double c1_norm() const {
        double s0 = 0.0, s1 = 0.0;
        for (int k = 0; k <= 200; ++k)
            for (int m = 0; m < 256; ++m) {
                const Vec2 x = center + from_polar(radius * k / 200.0, 2 * pi * m / 256.0);
                s0 = std::max(s0, norm(value(x)));
                const Mat2 j = jacobian(x);
                s1 = std::max({s1, std::abs(j.a11), std::abs(j.a12), std::abs(j.a21), std::abs(j.a22)});
            }
        return s0 + s1;
    }
};

namespace detail {

/// |grad u|^2 div phi - 2 grad u . Dphi grad u for one phase.
inline double dirichlet_variation(const PhasedField& pf, Phase ph, const TestVectorField& phi, int n_rho,
                                  int n_theta) {
    return phase_ball_integral(
        pf, ph,
        [&](Vec2 p) {
            const Vec2 g = pf.gradient(ph, p);
            const Mat2 d = phi.jacobian(p);
            return dot(g, g) * d.trace() - 2.0 * dot(g, d * g);
        },
        phi.center, phi.radius, n_rho, n_theta);
}

inline double negative_gravity_variation(const PhasedField& pf, const TestVectorField& phi, int n_rho, int n_theta) {
    const double x20 = pf.datum();
    return phase_ball_integral_clipped(
        pf, Phase::negative, [&](Vec2 p) { return (x20 - p.y) * phi.divergence(p) - phi.value(p).y; }, phi.center,
        phi.radius, -1, x20, n_rho, n_theta);
}

inline double positive_gravity_variation(const PhasedField& pf, const TestVectorField& phi, int n_rho, int n_theta) {
    const double x20 = pf.datum();
    return phase_ball_integral_clipped(
        pf, Phase::positive, [&](Vec2 p) { return (p.y - x20) * phi.divergence(p) + phi.value(p).y; }, phi.center,
        phi.radius, +1, x20, n_rho, n_theta);
}

/// Quadrature sized so its error is below the lattice error: about four
/// radial and eight angular samples per cell width.
inline void variation_resolution(const PhasedField& pf, double r, int& n_rho, int& n_theta) {
    n_rho = std::max(32, static_cast<int>(std::ceil(4 * r / pf.h())));
    const int arc = static_cast<int>(std::ceil(8 * pi * r / pf.h() / 12.0));
    n_theta = std::max(default_n_theta, 12 * arc);
}

} // namespace detail

/// Domain-variation first variation of the two-phase functional in direction phi.
inline double first_variation(const PhasedField& pf, const TestVectorField& phi) {
    detail::require_inside(pf.field(), phi.center, phi.radius, "test field support");
    int n_rho = 0, n_theta = 0;
    detail::variation_resolution(pf, phi.radius, n_rho, n_theta);
    return detail::dirichlet_variation(pf, Phase::negative, phi, n_rho, n_theta) +
           detail::dirichlet_variation(pf, Phase::positive, phi, n_rho, n_theta) +
           detail::negative_gravity_variation(pf, phi, n_rho, n_theta) +
           detail::positive_gravity_variation(pf, phi, n_rho, n_theta);
}

/// First variation of the one-phase functional at u^- alone.
inline double first_variation_onephase(const PhasedField& pf, const TestVectorField& phi) {
    detail::require_inside(pf.field(), phi.center, phi.radius, "test field support");
    int n_rho = 0, n_theta = 0;
    detail::variation_resolution(pf, phi.radius, n_rho, n_theta);
    return detail::dirichlet_variation(pf, Phase::negative, phi, n_rho, n_theta) +
           detail::negative_gravity_variation(pf, phi, n_rho, n_theta);
}

/// Height check on one-phase boundaries: vertices of the negative-phase
/// boundary that border no positive phase must lie at or below x2^0 + tol,
/// those of the positive phase at or above x2^0 - tol. Returns the worst
/// violation (0 when the constraint holds).
inline double one_phase_height_violation(const PhasedField& pf, double tol) {
    const double x20 = pf.datum();
    const double h = pf.h();
    double worst = 0.0;
    auto one_phase = [&](Vec2 p, Phase other) {
        // no point of the other phase within two cells
        for (int a = -2; a <= 2; ++a)
            for (int b = -2; b <= 2; ++b) {
                const Vec2 q = p + Vec2{a * h, b * h};
                if (pf.field().contains(q) && pf.inside(other, q)) return false;
            }
        return true;
    };
    for (const auto& pl : extract_level_set(pf, Phase::negative))
        for (const Vec2& v : pl.vertices)
            if (pf.field().contains(v, h) && one_phase(v, Phase::positive))
                worst = std::max(worst, v.y - (x20 + tol));
    for (const auto& pl : extract_level_set(pf, Phase::positive))
        for (const Vec2& v : pl.vertices)
            if (pf.field().contains(v, h) && one_phase(v, Phase::negative))
                worst = std::max(worst, (x20 - tol) - v.y);
    return worst;
}

/// Free boundary condition residuals of a lattice field along the rays of a
/// degree-3/2 reference profile. On each side of the ray the one-sided
/// gradient is extrapolated linearly from central differences at 3h and 6h
/// along the normal (far enough that the stencil stays off the kink).
/// Residuals are divided by rho (they scale linearly in rho for the profile)
/// and the worst of the sampled radii is kept per ray.
inline std::vector<RayResidual> fb_residual_sampled(const ScalarField& u, const PiecewiseProfile& ref,
                                                    const std::vector<double>& radii = {0.5, 0.75, 1.0}) {
    const double x20 = u.datum(), h = u.h();
    const double snap = 1e-12 * u.max_abs();
    std::vector<RayResidual> out = fb_residual(ref, x20);
    for (auto& rr : out) {
        double worst = 0.0;
        for (double rho : radii) {
            const Vec2 p = from_polar(rho, rr.theta);
            double gm = 0.0, gp = 0.0;
            for (double side : {-1.0, 1.0}) {
                const Vec2 n = Vec2{-std::sin(rr.theta), std::cos(rr.theta)} * side;
                const Vec2 q1 = p + n * (3 * h), q2 = p + n * (6 * h);
                const double v = sample(u, q1);
                if (std::abs(v) <= snap) continue;
                const Vec2 g = grad(u, q1) * 2.0 - grad(u, q2);
                (v < 0 ? gm : gp) = dot(g, g);
            }
            double r = 0.0;
            switch (rr.kind) {
            case RayKind::two_phase: r = gm - gp - (x20 - p.y); break;
            case RayKind::one_phase_negative: r = gm - (x20 - p.y); break;
            case RayKind::one_phase_positive: r = gp - (p.y - x20); break;
            }
            r /= rho;
            if (std::abs(r) >= std::abs(worst)) worst = r;
        }
        rr.residual = worst;
    }
    return out;
}

} // namespace ehd
