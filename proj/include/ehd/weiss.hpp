#pragma once
//
// weiss.hpp
//
// Boundary-adjusted Weiss energies
//     M_kappa(r) = r^{-2 kappa} I(r) - kappa r^{-2 kappa - 1} J(r)
// for homogeneity exponents kappa in [1, 3/2], the remainder K(r), the
// radial derivative identity, and density limits along blowup sequences.
//

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "energy.hpp"
#include "field.hpp"

namespace ehd {

enum class PhaseSelector { full, negative, positive };

inline const char* to_string(PhaseSelector s) {
    switch (s) {
    case PhaseSelector::full: return "full";
    case PhaseSelector::negative: return "negative";
    case PhaseSelector::positive: return "positive";
    }
    return "?";
}

namespace detail {
inline bool selects(PhaseSelector s, Phase p) {
    return s == PhaseSelector::full || (s == PhaseSelector::negative) == (p == Phase::negative);
}

inline void require_kappa(double kappa) {
    if (!(kappa >= 1.0 && kappa <= 1.5)) throw error(errc::invalid_exponent, "kappa must lie in [1, 3/2]");
}
} // namespace detail

/// Quadrature resolution; zero n_rho means about one ring per cell.
struct QuadratureSpec {
    int n_rho = 0;
    int n_theta = default_n_theta;
};

/// I(r): Dirichlet energy plus gravity weights over B_r(x0).
inline double weiss_I(const PhasedField& pf, Vec2 x0, double r, PhaseSelector sel = PhaseSelector::full,
                      QuadratureSpec q = {}) {
    const double x20 = pf.datum();
    double total = 0.0;
    for (Phase ph : {Phase::negative, Phase::positive}) {
        if (!detail::selects(sel, ph)) continue;
        total += phase_ball_integral(
            pf, ph, [&](Vec2 p) { return pf.grad_sq(ph, p) + phase_weight(ph, p, x20); }, x0, r, q.n_rho, q.n_theta);
    }
    return total;
}

/// J(r): trace integral of u^2 over the circle of radius r.
inline double weiss_J(const PhasedField& pf, Vec2 x0, double r, PhaseSelector sel = PhaseSelector::full,
                      int n_theta = default_n_theta) {
    detail::require_inside(pf.field(), x0, r, "circle");
    return circle_quadrature(
        [&](Vec2 p) {
            double s = 0.0;
            for (Phase ph : {Phase::negative, Phase::positive})
                if (detail::selects(sel, ph)) {
                    const double v = pf.part(ph, p);
                    s += v * v;
                }
            return s;
        },
        x0, r, n_theta);
}

inline double weiss_M_from(double I, double J, double r, double kappa) {
    return std::pow(r, -2 * kappa) * I - kappa * std::pow(r, -2 * kappa - 1) * J;
}

inline double weiss_M(const PhasedField& pf, Vec2 x0, double r, double kappa, PhaseSelector sel = PhaseSelector::full,
                      QuadratureSpec q = {}) {
    detail::require_kappa(kappa);
    return weiss_M_from(weiss_I(pf, x0, r, sel, q), weiss_J(pf, x0, r, sel, q.n_theta), r, kappa);
}

/// Gravity-weight integral over the selected phases, weights relative to `height`.
inline double weight_integral(const PhasedField& pf, Vec2 x0, double r, double height, PhaseSelector sel,
                              QuadratureSpec q = {}) {
    double total = 0.0;
    for (Phase ph : {Phase::negative, Phase::positive})
        if (detail::selects(sel, ph))
            total += phase_ball_integral(pf, ph, [&](Vec2 p) { return phase_weight(ph, p, height); }, x0, r, q.n_rho,
                                         q.n_theta);
    return total;
}

/// K(r) = (3 - 2 alpha) r^{-2 alpha - 1} int_{B_r} weights, for 1 < alpha < 3/2.
inline double weiss_K(const PhasedField& pf, Vec2 x0, double r, double alpha, QuadratureSpec q = {}) {
    if (!(alpha > 1.0 && alpha < 1.5)) throw error(errc::invalid_exponent, "alpha must lie in (1, 3/2)");
    return (3 - 2 * alpha) * std::pow(r, -2 * alpha - 1) *
           weight_integral(pf, x0, r, pf.datum(), PhaseSelector::full, q);
}

/// Right-hand side of the derivative identity:
///   2 r^{-2k} int_{dB_r} (grad u+ . nu - k u+/r)^2 + (grad u- . nu - k u-/r)^2
///   + (3 - 2k) r^{-2k-1} int_{B_r} weights
/// (the last term is K(r) for k = alpha and vanishes for k = 3/2).
inline double weiss_dM_formula(const PhasedField& pf, Vec2 x0, double r, double kappa, QuadratureSpec q = {}) {
    detail::require_kappa(kappa);
    double surface = 0.0;
    for (Phase ph : {Phase::negative, Phase::positive})
        surface += phase_circle_integral(
            pf, ph,
            [&](Vec2 p) {
                const Vec2 nu = (p - x0) * (1.0 / r);
                const double d = dot(pf.gradient(ph, p), nu) - kappa * pf.part(ph, p) / r;
                return d * d;
            },
            x0, r, q.n_theta);
    double out = 2 * std::pow(r, -2 * kappa) * surface;
    if (kappa < 1.5)
        out += (3 - 2 * kappa) * std::pow(r, -2 * kappa - 1) * weight_integral(pf, x0, r, pf.datum(), PhaseSelector::full, q);
    return out;
}

struct DerivativeCheckRow {
    double r = 0.0;
    double finite_difference = 0.0;
    double formula = 0.0;
};

struct DerivativeCheck {
    std::vector<DerivativeCheckRow> rows;
    double max_discrepancy = 0.0;
};

/// Fourth-order centered differences of M against the surface formula at
/// n_radii points of [r_lo, r_hi]. Quadrature sizes stay fixed across radii
/// so that M(r) is a smooth function of r.
inline DerivativeCheck weiss_derivative_check(const PhasedField& pf, Vec2 x0, double kappa, double r_lo, double r_hi,
                                              int n_radii = 5) {
    detail::require_kappa(kappa);
    if (!(r_lo > 0 && r_hi > r_lo) || n_radii < 2) throw error(errc::invalid_argument, "bad radius window");
    const double delta = std::max(0.05 * r_lo, 2 * pf.h());
    detail::require_inside(pf.field(), x0, r_hi + 2 * delta, "derivative window");
    QuadratureSpec q{std::max(64, static_cast<int>(std::ceil(2 * (r_hi + 2 * delta) / pf.h()))), 1152};
    DerivativeCheck out;
    for (int k = 0; k < n_radii; ++k) {
        const double r = r_lo + (r_hi - r_lo) * k / (n_radii - 1);
        auto m = [&](double s) { return weiss_M(pf, x0, s, kappa, PhaseSelector::full, q); };
        const double fd = (8 * (m(r + delta) - m(r - delta)) - (m(r + 2 * delta) - m(r - 2 * delta))) / (12 * delta);
        const double rhs = weiss_dM_formula(pf, x0, r, kappa, q);
        out.rows.push_back({r, fd, rhs});
        out.max_discrepancy = std::max(out.max_discrepancy, std::abs(fd - rhs));
    }
    return out;
}

// ---------------------------------------------------------------------------
// radii and density limits

/// Log-spaced radii r_max * 2^{-k/2}, k = 0..count-1 (descending).
inline std::vector<double> log_radii(double r_max, int count = 13) {
    std::vector<double> r;
    for (int k = 0; k < count; ++k) r.push_back(r_max * std::pow(2.0, -0.5 * k));
    return r;
}

struct DensityLimit {
    std::vector<double> radii;   // descending, radii below min_cells * h dropped
    std::vector<double> values;  // density at each radius
    double limit = 0.0;
    double order = 0.0;          // estimated convergence order in r (0 when the tail is flat)
    bool converged = true;       // false: spread of last three above tolerance ("no-limit")
    double spread = 0.0;
};

inline constexpr double density_spread_tolerance = 0.05;

/// Limit of the last three values of a sequence sampled at radii shrinking by `ratio`.
inline void extrapolate_tail(DensityLimit& d, double ratio) {
    const std::size_t n = d.values.size();
    if (n == 0) throw error(errc::no_limit, "no admissible radius");
    if (n < 3) {
        d.limit = d.values.back();
        d.converged = false;
        d.spread = n == 2 ? std::abs(d.values[0] - d.values[1]) : 0.0;
        return;
    }
    const double a = d.values[n - 3], b = d.values[n - 2], c = d.values[n - 1];
    d.spread = std::max({a, b, c}) - std::min({a, b, c});
    d.converged = d.spread <= density_spread_tolerance;
    if (d.spread <= 1e-4 + 1e-3 * std::abs(c)) {
        d.limit = (a + b + c) / 3.0;
        d.order = 0.0;
        return;
    }
    const double rho = (a - b) / (b - c);
    double p = 1.0;
    if (rho > 1.0) {
        const double est = std::log(rho) / std::log(ratio);
        if (est >= 0.25 && est <= 4.0) p = est;
    }
    d.order = p;
    d.limit = c - (b - c) / (std::pow(ratio, p) - 1.0);
    // limits of nonnegative sequences are nonnegative; overshoot means "zero"
    if (a >= 0 && b >= 0 && c >= 0) d.limit = std::max(d.limit, 0.0);
}

/// Density along the blowup sequence: r^{-2 kappa} int_{B_r(x0)} w chi over the
/// selected phases, which equals the rescaled integral over B_1 for kappa = 3/2
/// and carries the extra factor r^{3 - 2 kappa} otherwise. Weights are measured
/// from the height of x0 for kappa > 1 (blowup coordinates) and from the datum
/// for kappa = 1. Radii under min_cells lattice cells are skipped: below that
/// the lattice error, which grows like (h/r)^2, swamps the r -> 0 trend.
inline DensityLimit density_limit(const PhasedField& pf, Vec2 x0, double kappa,
                                  PhaseSelector sel = PhaseSelector::negative, std::vector<double> radii = {},
                                  double min_cells = 16.0) {
    detail::require_kappa(kappa);
    if (radii.empty()) {
        const ScalarField& u = pf.field();
        const double room = std::min({x0.x - u.lo().x, u.hi().x - x0.x, x0.y - u.lo().y, u.hi().y - x0.y});
        radii = log_radii(room * (1 - 1e-9));
    }
    const double height = kappa > 1.0 ? x0.y : pf.datum();
    DensityLimit d;
    for (double r : radii) {
        if (r < min_cells * pf.h()) continue;
        const double integral = weight_integral(pf, x0, r, height, sel);
        d.radii.push_back(r);
        d.values.push_back(std::pow(r, -2 * kappa) * integral);
    }
    if (d.radii.size() < 4) throw error(errc::out_of_domain, "fewer than four radii fit in the hull");
    const double ratio = d.radii[0] / d.radii[1];
    extrapolate_tail(d, ratio);
    return d;
}

// ---------------------------------------------------------------------------
// report

struct WeissRow {
    double r = 0.0;
    double I = 0.0, J = 0.0, M = 0.0, K = 0.0;
    double M_plus = 0.0, M_minus = 0.0;
};

struct WeissReport {
    Vec2 center{};
    double kappa = 1.5;
    std::vector<WeissRow> rows; // descending radii
    double density_estimate = 0.0;
    bool density_converged = true;
    int monotone_violations = 0;
    double max_violation = 0.0;
};

/// Fills I, J, M (and its phase split), K for every radius, the negative-phase
/// density limit, and the monotonicity audit (M nondecreasing in r up to
/// 1e-3 (1 + |M|)).
inline WeissReport weiss_report(const PhasedField& pf, Vec2 x0, double kappa, const std::vector<double>& radii) {
    detail::require_kappa(kappa);
    WeissReport rep;
    rep.center = x0;
    rep.kappa = kappa;
    for (double r : radii) {
        WeissRow row;
        row.r = r;
        const double In = weiss_I(pf, x0, r, PhaseSelector::negative), Ip = weiss_I(pf, x0, r, PhaseSelector::positive);
        const double Jn = weiss_J(pf, x0, r, PhaseSelector::negative), Jp = weiss_J(pf, x0, r, PhaseSelector::positive);
        row.I = In + Ip;
        row.J = Jn + Jp;
        row.M = weiss_M_from(row.I, row.J, r, kappa);
        row.M_minus = weiss_M_from(In, Jn, r, kappa);
        row.M_plus = weiss_M_from(Ip, Jp, r, kappa);
        // generic remainder (3 - 2k) r^{-2k-1} int weights: K(r) for k = alpha, zero for k = 3/2
        row.K = kappa < 1.5 ? (3 - 2 * kappa) * std::pow(r, -2 * kappa - 1) *
                                  weight_integral(pf, x0, r, pf.datum(), PhaseSelector::full)
                            : 0.0;
        rep.rows.push_back(row);
    }
    for (std::size_t k = 1; k < rep.rows.size(); ++k) {
        // rows descend in r: M at the smaller radius must not exceed M at the larger one
        const double drop = rep.rows[k].M - rep.rows[k - 1].M;
        if (drop > 1e-3 * (1 + std::abs(rep.rows[k - 1].M))) {
            ++rep.monotone_violations;
            rep.max_violation = std::max(rep.max_violation, drop);
        }
    }
    try {
        const auto d = density_limit(pf, x0, kappa, PhaseSelector::negative, radii);
        rep.density_estimate = d.limit;
        rep.density_converged = d.converged;
    } catch (const error&) {
        rep.density_converged = false;
    }
    return rep;
}

inline void write_weiss_csv(std::ostream& os, const WeissReport& rep) {
    os << "r,I,J,M,K,M_plus,M_minus\n";
    char buf[256];
    for (const auto& w : rep.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", w.r, w.I, w.J, w.M, w.K, w.M_plus,
                      w.M_minus);
        os << buf;
    }
}

} // namespace ehd
