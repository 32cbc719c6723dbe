#pragma once
//
// frequency.hpp
//
// Frequency of the negative phase about x0:
//     D(r) = r int_{B_r} |grad u-|^2 / T(r),   T(r) = int_{dB_r} (u-)^2
//     V(r) = r int_{B_r} (x2^0 - x2)^+ (1 - chi{u<0}) / T(r)
//     H(r) = D(r) - V(r)
// with its derivative identity and the vanishing-order estimate N0.
//

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <vector>

#include "field.hpp"
#include "weiss.hpp"

namespace ehd {

namespace detail {

inline double negative_trace(const PhasedField& pf, Vec2 x0, double r, int n_theta) {
    const double t = weiss_J(pf, x0, r, PhaseSelector::negative, n_theta);
    if (!(t > 1e-14 * 2 * pi * r)) throw error(errc::degenerate_trace, "trace of u- vanishes on the circle");
    return t;
}

/// int_{B_r} (x2^0 - x2)^+ (1 - chi{u<0}).
inline double void_weight(const PhasedField& pf, Vec2 x0, double r, QuadratureSpec q) {
    detail::require_inside(pf.field(), x0, r, "ball");
    const double x20 = pf.datum();
    const int n_rho = q.n_rho > 0 ? q.n_rho : default_n_rho(r, pf.h());
    auto w = [&](Vec2 p) { return weight_below(p, x20); };
    const double below = level_ball_quadrature([&](Vec2 p) { return p.y - x20; }, w, x0, r, n_rho, q.n_theta);
    const double wet = phase_ball_integral(pf, Phase::negative, w, x0, r, n_rho, q.n_theta);
    return std::max(below - wet, 0.0);
}

} // namespace detail

inline double freq_D(const PhasedField& pf, Vec2 x0, double r, QuadratureSpec q = {}) {
    const double t = detail::negative_trace(pf, x0, r, q.n_theta);
    const double dir = phase_ball_integral(
        pf, Phase::negative, [&](Vec2 p) { return pf.grad_sq(Phase::negative, p); }, x0, r, q.n_rho, q.n_theta);
    return r * dir / t;
}

inline double freq_V(const PhasedField& pf, Vec2 x0, double r, QuadratureSpec q = {}) {
    const double t = detail::negative_trace(pf, x0, r, q.n_theta);
    return r * detail::void_weight(pf, x0, r, q) / t;
}

struct FrequencyRow {
    double r = 0.0;
    double D = 0.0, V = 0.0, H = 0.0;
    double trace = 0.0; // T(r)
};

struct FrequencyReport {
    Vec2 center{};
    std::vector<FrequencyRow> rows; // descending radii
    bool degenerate = false;
    bool extrapolated = false;      // false: H_limit is the smallest-radius value
    double H_limit = 0.0;
    double N0_estimate = 0.0;
    int monotone_violations = 0;    // H decreasing in r beyond tolerance
};

/// Nearest admissible vanishing order in {3/2} U {2, 3, 4, ...}.
inline double nearest_order(double h) {
    if (h <= 1.75) return 1.5;
    return std::max(2.0, std::round(h));
}

inline FrequencyReport freq_H(const PhasedField& pf, Vec2 x0, const std::vector<double>& radii,
                              double monotone_tol = 1e-3) {
    FrequencyReport rep;
    rep.center = x0;
    for (double r : radii) {
        FrequencyRow row;
        row.r = r;
        try {
            row.trace = detail::negative_trace(pf, x0, r, default_n_theta);
        } catch (const error& e) {
            if (e.code() != errc::degenerate_trace) throw;
            rep.degenerate = true;
            rep.rows.push_back(row);
            continue;
        }
        row.D = freq_D(pf, x0, r);
        row.V = freq_V(pf, x0, r);
        row.H = row.D - row.V;
        rep.rows.push_back(row);
    }
    if (rep.degenerate || rep.rows.empty()) return rep;
    for (std::size_t k = 1; k < rep.rows.size(); ++k)
        if (rep.rows[k].H - rep.rows[k - 1].H > monotone_tol * (1 + std::abs(rep.rows[k - 1].H)))
            ++rep.monotone_violations;

    const std::size_t n = rep.rows.size();
    rep.H_limit = rep.rows.back().H;
    if (n >= 3) {
        const double a = rep.rows[n - 3].H, b = rep.rows[n - 2].H, c = rep.rows[n - 1].H;
        const bool monotone = (a >= b && b >= c) || (a <= b && b <= c);
        if (monotone) {
            DensityLimit tail;
            tail.values = {a, b, c};
            extrapolate_tail(tail, rep.rows[n - 2].r / rep.rows[n - 1].r);
            rep.H_limit = tail.limit;
            rep.extrapolated = true;
        }
    }
    rep.N0_estimate = nearest_order(rep.H_limit);
    return rep;
}

struct FrequencyCheckRow {
    double r = 0.0;
    double finite_difference = 0.0;
    double formula = 0.0;
};

struct FrequencyCheck {
    std::vector<FrequencyCheckRow> rows;
    double max_discrepancy = 0.0;
    int negative_formula_count = 0; // radii where the right-hand side is negative
    bool degenerate = false;
};

/// dH/dr by fourth-order differences against
///   (2/r) int_{dB_r} (r d_nu u-/sqrt T - H u-/sqrt T)^2 + (2/r) V (H - 3/2).
inline FrequencyCheck freq_derivative_check(const PhasedField& pf, Vec2 x0, double r_lo, double r_hi, int n_radii = 5) {
    if (!(r_lo > 0 && r_hi > r_lo) || n_radii < 2) throw error(errc::invalid_argument, "bad radius window");
    const double delta = std::max(0.05 * r_lo, 2 * pf.h());
    detail::require_inside(pf.field(), x0, r_hi + 2 * delta, "derivative window");
    const QuadratureSpec q{std::max(64, static_cast<int>(std::ceil(2 * (r_hi + 2 * delta) / pf.h()))), 1152};
    FrequencyCheck out;
    try {
        for (int k = 0; k < n_radii; ++k) {
            const double r = r_lo + (r_hi - r_lo) * k / (n_radii - 1);
            auto H = [&](double s) { return freq_D(pf, x0, s, q) - freq_V(pf, x0, s, q); };
            const double fd = (8 * (H(r + delta) - H(r - delta)) - (H(r + 2 * delta) - H(r - 2 * delta))) / (12 * delta);
            const double t = detail::negative_trace(pf, x0, r, q.n_theta);
            const double hr = H(r);
            const double v = freq_V(pf, x0, r, q);
            const double flux = phase_circle_integral(
                pf, Phase::negative,
                [&](Vec2 p) {
                    const Vec2 nu = (p - x0) * (1.0 / r);
                    const double d = r * dot(pf.gradient(Phase::negative, p), nu) - hr * pf.part(Phase::negative, p);
                    return d * d;
                },
                x0, r, q.n_theta);
            const double rhs = 2.0 / r * flux / t + 2.0 / r * v * (hr - 1.5);
            out.rows.push_back({r, fd, rhs});
            out.max_discrepancy = std::max(out.max_discrepancy, std::abs(fd - rhs));
            if (rhs < 0) ++out.negative_formula_count;
        }
    } catch (const error& e) {
        if (e.code() != errc::degenerate_trace) throw;
        out.degenerate = true;
    }
    return out;
}

inline void write_frequency_csv(std::ostream& os, const FrequencyReport& rep) {
    os << "r,D,V,H,trace\n";
    char buf[200];
    for (const auto& w : rep.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", w.r, w.D, w.V, w.H, w.trace);
        os << buf;
    }
}

} // namespace ehd
