#pragma once
//
// corner_solver.hpp
//
// Algebraic systems for degree-3/2 corners whose negative phase is the
// 2pi/3 sector (theta1, theta1 + 2pi/3), theta1 in [-pi, -2pi/3]. For fixed
// theta1 the free boundary conditions are linear in the squared amplitudes,
// so the system is solvable exactly when the right-hand side is orthogonal
// to the left null space of the amplitude matrix. That compatibility scalar
// is scanned for sign changes and polished to machine precision.
//

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "geometry.hpp"
#include "profiles.hpp"

namespace ehd {

enum class CornerVariant { unilateral_config_1, unilateral_config_2, bilateral };

inline const char* to_string(CornerVariant v) {
    switch (v) {
    case CornerVariant::unilateral_config_1: return "unilateral-config-1";
    case CornerVariant::unilateral_config_2: return "unilateral-config-2";
    case CornerVariant::bilateral: return "bilateral";
    }
    return "?";
}

inline std::optional<CornerVariant> parse_corner_variant(const std::string& s) {
    if (s == "unilateral-config-1") return CornerVariant::unilateral_config_1;
    if (s == "unilateral-config-2") return CornerVariant::unilateral_config_2;
    if (s == "bilateral") return CornerVariant::bilateral;
    return std::nullopt;
}

struct CornerSystem {
    CornerVariant variant = CornerVariant::unilateral_config_1;
    /// scale of the gravity right-hand side; 0 gives the degenerate system
    double gravity = 1.0;

    static constexpr double theta_min = -pi;
    static constexpr double theta_max = -2 * pi / 3;

    /// Unknown squared amplitudes: (C-^2, C+^2) or (C1^2, C2^2, C3^2).
    int amplitude_count() const { return variant == CornerVariant::bilateral ? 3 : 2; }

    /// Coefficients of the squared amplitudes, one row per equation.
    Eigen::MatrixXd matrix() const {
        const double k = 9.0 / 4.0;
        if (variant == CornerVariant::bilateral) {
            Eigen::MatrixXd a(4, 3);
            a << k, 0, -k,  //
                k, -k, 0,   //
                0, k, 0,    //
                0, 0, k;
            return a;
        }
        Eigen::MatrixXd a(3, 2);
        a << k, -k,  //
            k, 0,    //
            0, k;
        return a;
    }

    /// Gravity right-hand side at theta1.
    Eigen::VectorXd rhs(double t) const {
        const double s0 = std::sin(t), s1 = std::sin(t + 2 * pi / 3), s2 = std::sin(t + 4 * pi / 3);
        Eigen::VectorXd b;
        switch (variant) {
        case CornerVariant::unilateral_config_1:
            b = Eigen::Vector3d(-s0, -s1, s2);
            break;
        case CornerVariant::unilateral_config_2:
            b = Eigen::Vector3d(-s1, -s0, s2);
            break;
        case CornerVariant::bilateral:
            b = Eigen::Vector4d(-s0, -s1, s2, s2);
            break;
        }
        return gravity * b;
    }
};

/// Assignment of squared amplitudes and opening position.
struct CornerAssignment {
    std::vector<double> squared; // size amplitude_count()
    double theta1 = 0.0;
};

/// Componentwise residual (left side minus right side) of the displayed equations.
inline std::vector<double> residual(const CornerSystem& sys, const CornerAssignment& x) {
    if (static_cast<int>(x.squared.size()) != sys.amplitude_count())
        throw error(errc::invalid_argument, "assignment does not match the variant");
    const Eigen::Map<const Eigen::VectorXd> c(x.squared.data(), static_cast<Eigen::Index>(x.squared.size()));
    const Eigen::VectorXd r = sys.matrix() * c - sys.rhs(x.theta1);
    return {r.data(), r.data() + r.size()};
}

struct CornerRoot {
    CornerVariant variant{};
    double theta1 = 0.0;
    std::vector<double> squared;
    std::vector<double> amplitudes;
    double residual_norm = 0.0;
};

struct CornerSolution {
    CornerVariant variant{};
    std::vector<CornerRoot> roots;
    bool degenerate_family = false; // every theta1 is compatible (zero right-hand side)
    int grid_points = 0;
};

namespace detail {

inline Eigen::VectorXd left_null_vector(const Eigen::MatrixXd& a) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU);
    const Eigen::Index rank = svd.rank();
    if (rank >= a.rows()) throw error(errc::numerical_failure, "amplitude matrix has no left null space");
    return svd.matrixU().col(rank);
}

inline double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace detail

/// All admissible roots of the system on [-pi, -2pi/3].
inline CornerSolution solve(const CornerSystem& sys, double step = 1e-3) {
    const Eigen::MatrixXd a = sys.matrix();
    const Eigen::VectorXd n = detail::left_null_vector(a);
    auto g = [&](double t) { return n.dot(sys.rhs(t)); };

    CornerSolution out;
    out.variant = sys.variant;
    const int steps = static_cast<int>(std::ceil((CornerSystem::theta_max - CornerSystem::theta_min) / step));
    std::vector<double> grid(steps + 1);
    for (int i = 0; i <= steps; ++i) grid[i] = std::min(CornerSystem::theta_min + i * step, CornerSystem::theta_max);
    out.grid_points = static_cast<int>(grid.size());

    std::vector<double> gv(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) gv[i] = g(grid[i]);

    const double zero_tol = 1e-12;
    std::size_t zeros = 0;
    for (double v : gv)
        if (std::abs(v) <= zero_tol) ++zeros;
    if (zeros == grid.size()) {
        out.degenerate_family = true;
        return out;
    }

    std::vector<double> candidates;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (std::abs(gv[i]) <= zero_tol) {
            candidates.push_back(grid[i]);
            continue;
        }
        if (i + 1 < grid.size() && std::abs(gv[i + 1]) > zero_tol && (gv[i] < 0) != (gv[i + 1] < 0)) {
            double lo = grid[i], hi = grid[i + 1], glo = gv[i];
            for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double gm = g(mid);
                if (gm == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if ((gm < 0) == (glo < 0)) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            candidates.push_back(0.5 * (lo + hi));
        }
    }

    for (double t : candidates) {
        // Newton polish on the compatibility scalar
        for (int it = 0; it < 8; ++it) {
            const double e = 1e-7;
            const double d = (g(t + e) - g(t - e)) / (2 * e);
            if (d == 0.0) break;
            const double next = t - g(t) / d;
            if (std::abs(next - t) < 1e-17) break;
            t = next;
        }
        t = std::clamp(t, CornerSystem::theta_min, CornerSystem::theta_max);
        const Eigen::VectorXd b = sys.rhs(t);
        Eigen::VectorXd c = a.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(b);
        bool admissible = true;
        for (Eigen::Index k = 0; k < c.size(); ++k) {
            if (c(k) < -1e-12) admissible = false;
            c(k) = std::max(c(k), 0.0);
        }
        if (!admissible) continue;
        CornerRoot root;
        root.variant = sys.variant;
        root.theta1 = t;
        root.squared.assign(c.data(), c.data() + c.size());
        for (double s : root.squared) root.amplitudes.push_back(std::sqrt(s));
        root.residual_norm = detail::inf_norm(residual(sys, {root.squared, t}));
        if (root.residual_norm >= 1e-12) continue;
        const bool dup = std::any_of(out.roots.begin(), out.roots.end(),
                                     [&](const CornerRoot& r) { return std::abs(r.theta1 - t) < 1e-6; });
        if (!dup) out.roots.push_back(root);
    }
    if (out.roots.empty()) throw error(errc::no_solution, std::string("no admissible root for ") + to_string(sys.variant));
    return out;
}

/// Union of the roots of both unilateral configurations, sorted by theta1.
inline std::vector<CornerRoot> solve_unilateral() {
    std::vector<CornerRoot> all;
    for (auto v : {CornerVariant::unilateral_config_1, CornerVariant::unilateral_config_2})
        for (auto& r : solve(CornerSystem{v}).roots) all.push_back(r);
    std::sort(all.begin(), all.end(), [](const CornerRoot& a, const CornerRoot& b) { return a.theta1 < b.theta1; });
    return all;
}

namespace detail {

/// Appends the sector [a, a + 2pi/3) as one or two pieces inside [-pi, pi).
inline void push_sector(std::vector<SectorProfile>& out, double amplitude, double a, Phase sign) {
    a = wrap_angle(a);
    SectorProfile s = corner_piece(amplitude, a, sign);
    if (s.theta_hi <= pi) {
        out.push_back(s);
        return;
    }
    SectorProfile tail = s;
    s.theta_hi = pi;
    tail.theta_lo = -pi;
    tail.theta_hi = s.theta_lo + 2 * pi / 3 - 2 * pi;
    tail.phase = wrap_angle(s.phase + 3 * pi); // same function after theta -> theta + 2pi
    out.push_back(s);
    out.push_back(tail);
}

} // namespace detail

/// Closed-form profile reconstructed from a root.
inline PiecewiseProfile profile_from_root(const CornerRoot& root) {
    PiecewiseProfile p;
    const double t = root.theta1;
    switch (root.variant) {
    case CornerVariant::unilateral_config_1:
        p.name = "A4L";
        p.tag = CatalogTag::A4L;
        detail::push_sector(p.pieces, root.amplitudes[0], t, Phase::negative);
        detail::push_sector(p.pieces, root.amplitudes[1], t + 4 * pi / 3, Phase::positive);
        break;
    case CornerVariant::unilateral_config_2:
        p.name = "A4R";
        p.tag = CatalogTag::A4R;
        detail::push_sector(p.pieces, root.amplitudes[0], t, Phase::negative);
        detail::push_sector(p.pieces, root.amplitudes[1], t + 2 * pi / 3, Phase::positive);
        break;
    case CornerVariant::bilateral:
        p.name = "A3";
        p.tag = CatalogTag::A3;
        detail::push_sector(p.pieces, root.amplitudes[0], t, Phase::negative);
        detail::push_sector(p.pieces, root.amplitudes[1], t + 2 * pi / 3, Phase::positive);
        detail::push_sector(p.pieces, root.amplitudes[2], t + 4 * pi / 3, Phase::positive);
        break;
    }
    std::sort(p.pieces.begin(), p.pieces.end(),
              [](const SectorProfile& a, const SectorProfile& b) { return a.theta_lo < b.theta_lo; });
    return p;
}

inline void write_roots_csv(std::ostream& os, const CornerSolution& sol) {
    os << "variant,theta1,squared_amplitudes,amplitudes,residual\n";
    char buf[96];
    auto join = [&](const std::vector<double>& v) {
        std::string s;
        for (std::size_t k = 0; k < v.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%s%.17g", k ? ";" : "", v[k]);
            s += buf;
        }
        return s;
    };
    for (const auto& r : sol.roots) {
        std::snprintf(buf, sizeof buf, "%.17g", r.theta1);
        os << to_string(r.variant) << ',' << buf << ',' << join(r.squared) << ',' << join(r.amplitudes) << ',';
        std::snprintf(buf, sizeof buf, "%.17g", r.residual_norm);
        os << buf << '\n';
    }
}

} // namespace ehd
