#pragma once
//
// profiles.hpp
//
// Closed-form catalog of homogeneous blowup profiles
//
//     u(rho, theta) = C rho^kappa cos(m theta + phi)   on [theta_lo, theta_hi)
//
// (m = kappa for every harmonic catalog piece) together with their exact
// gradients, free boundary residuals and negative-phase densities. Every
// numerical module is checked against these.
//

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"

namespace ehd {

enum class Phase { negative, positive };

inline const char* to_string(Phase p) { return p == Phase::negative ? "negative" : "positive"; }

namespace constants {
// exact catalog amplitudes and densities, evaluated once
inline const double sqrt3 = std::sqrt(3.0);
inline const double stokes_amplitude = std::sqrt(2.0) / 3.0;            // A1, A2
inline const double asymmetric_amplitude = std::sqrt(2.0 * sqrt3) / 3.0; // A4
inline const double bilateral_positive_amplitude = 2.0 / 3.0;          // A3, positive pieces
inline const double bilateral_negative_amplitude = std::sqrt(6.0) / 3.0; // A3, negative piece
inline const double stokes_density = sqrt3 / 3.0;
inline const double asymmetric_density = 0.5;
inline const double halfplane_density = 2.0 / 3.0;
} // namespace constants

struct SectorProfile {
    double amplitude = 0.0;
    double kappa = 1.5;
    double phase = 0.0;
    double theta_lo = -pi;
    double theta_hi = pi;
    Phase sign = Phase::negative;
    /// angular frequency; equals kappa for harmonic pieces
    double frequency = 1.5;

    static SectorProfile harmonic(double c, double kappa, double phi, double lo, double hi, Phase s) {
        return {c, kappa, phi, lo, hi, s, kappa};
    }

    bool contains(double theta) const { return theta >= theta_lo && theta < theta_hi; }
    bool is_harmonic() const { return frequency == kappa; }
    double angular(double theta) const { return std::cos(frequency * theta + phase); }
    double angular_derivative(double theta) const { return -frequency * std::sin(frequency * theta + phase); }
};

enum class CatalogTag { A1, A2, A3, A4L, A4R, W, LINEAR, CUSTOM };

struct PiecewiseProfile {
    std::string name;
    CatalogTag tag = CatalogTag::CUSTOM;
    std::vector<SectorProfile> pieces;
};

enum class DensityKind { stokes, asymmetric, halfplane, zero };

inline double exact_density(DensityKind k) {
    switch (k) {
    case DensityKind::stokes: return constants::stokes_density;
    case DensityKind::asymmetric: return constants::asymmetric_density;
    case DensityKind::halfplane: return constants::halfplane_density;
    case DensityKind::zero: return 0.0;
    }
    return 0.0;
}

inline const char* to_string(DensityKind k) {
    switch (k) {
    case DensityKind::stokes: return "stokes";
    case DensityKind::asymmetric: return "asymmetric";
    case DensityKind::halfplane: return "halfplane";
    case DensityKind::zero: return "zero";
    }
    return "?";
}

struct DensityValue {
    double value = 0.0;
    DensityKind kind = DensityKind::zero;
};

// ---------------------------------------------------------------------------
// catalog

inline PiecewiseProfile a1_profile() {
    using namespace constants;
    return {"A1", CatalogTag::A1,
            {SectorProfile::harmonic(stokes_amplitude, 1.5, -pi / 4, -5 * pi / 6, -pi / 6, Phase::negative)}};
}

inline PiecewiseProfile a2_profile() {
    using namespace constants;
    return {"A2", CatalogTag::A2,
            {SectorProfile::harmonic(stokes_amplitude, 1.5, -pi / 4, -5 * pi / 6, -pi / 6, Phase::negative),
             SectorProfile::harmonic(stokes_amplitude, 1.5, -3 * pi / 4, pi / 6, 5 * pi / 6, Phase::positive)}};
}

inline PiecewiseProfile a3_profile() {
    using namespace constants;
    // the positive piece on [pi/2, 7pi/6) is split at the branch cut
    return {"A3", CatalogTag::A3,
            {SectorProfile::harmonic(bilateral_positive_amplitude, 1.5, -pi / 4, -pi, -5 * pi / 6, Phase::positive),
             SectorProfile::harmonic(bilateral_negative_amplitude, 1.5, -pi / 4, -5 * pi / 6, -pi / 6, Phase::negative),
             SectorProfile::harmonic(bilateral_positive_amplitude, 1.5, -pi / 4, -pi / 6, pi / 2, Phase::positive),
             SectorProfile::harmonic(bilateral_positive_amplitude, 1.5, 3 * pi / 4, pi / 2, pi, Phase::positive)}};
}

inline PiecewiseProfile a4l_profile() {
    using namespace constants;
    return {"A4L", CatalogTag::A4L,
            {SectorProfile::harmonic(asymmetric_amplitude, 1.5, 0.0, -pi, -pi / 3, Phase::negative),
             SectorProfile::harmonic(asymmetric_amplitude, 1.5, -pi, pi / 3, pi, Phase::positive)}};
}

inline PiecewiseProfile a4r_profile() {
    using namespace constants;
    return {"A4R", CatalogTag::A4R,
            {SectorProfile::harmonic(asymmetric_amplitude, 1.5, -pi / 2, -2 * pi / 3, 0.0, Phase::negative),
             SectorProfile::harmonic(asymmetric_amplitude, 1.5, -pi / 2, 0.0, 2 * pi / 3, Phase::positive)}};
}

/// Normalized frequency blowup -rho^N |sin(N theta)| / sqrt(pi/2) on the lower
/// half plane; its trace on the unit circle has unit L2 norm.
inline PiecewiseProfile w_profile(int n0) {
    if (n0 < 2 || n0 > 4) throw error(errc::invalid_argument, "W(N0) is catalogued for N0 in {2,3,4}");
    const double c = 1.0 / std::sqrt(pi / 2.0);
    PiecewiseProfile p{"W" + std::to_string(n0), CatalogTag::W, {}};
    for (int k = 0; k < n0; ++k) {
        const double lo = -pi + k * pi / n0;
        const double hi = -pi + (k + 1) * pi / n0;
        // sign of sin(N theta) on this piece
        const bool sin_positive = ((n0 + k) % 2) == 0;
        p.pieces.push_back(SectorProfile::harmonic(c, n0, sin_positive ? pi / 2 : -pi / 2, lo, hi, Phase::negative));
    }
    return p;
}

/// u = x2, as two degree-1 pieces so each piece keeps a single sign.
inline PiecewiseProfile linear_profile() {
    return {"LINEAR", CatalogTag::LINEAR,
            {SectorProfile::harmonic(1.0, 1.0, -pi / 2, -pi, 0.0, Phase::negative),
             SectorProfile::harmonic(1.0, 1.0, -pi / 2, 0.0, pi, Phase::positive)}};
}

inline std::vector<PiecewiseProfile> corner_catalog() {
    return {a1_profile(), a2_profile(), a3_profile(), a4l_profile(), a4r_profile()};
}

/// Looks up a catalog entry by tag string (A1, A2, A3, A4L, A4R, W2, W3, W4, LINEAR).
inline PiecewiseProfile catalog_profile(const std::string& name) {
    if (name == "A1") return a1_profile();
    if (name == "A2") return a2_profile();
    if (name == "A3") return a3_profile();
    if (name == "A4L") return a4l_profile();
    if (name == "A4R") return a4r_profile();
    if (name == "LINEAR") return linear_profile();
    if (name.size() == 2 && name[0] == 'W' && name[1] >= '2' && name[1] <= '4') return w_profile(name[1] - '0');
    throw error(errc::invalid_argument, "unknown catalog profile '" + name + "'");
}

// ---------------------------------------------------------------------------
// evaluation

inline const SectorProfile* find_piece(const PiecewiseProfile& p, double theta) {
    for (const auto& piece : p.pieces)
        if (piece.contains(theta)) return &piece;
    return nullptr;
}

inline double eval(const SectorProfile& s, Polar pt) {
    if (pt.rho == 0.0) return 0.0;
    return s.amplitude * std::pow(pt.rho, s.kappa) * s.angular(pt.theta);
}

inline double eval(const PiecewiseProfile& p, Polar pt) {
    if (pt.rho <= 0.0) return 0.0;
    const SectorProfile* s = find_piece(p, wrap_angle(pt.theta));
    return s ? eval(*s, {pt.rho, wrap_angle(pt.theta)}) : 0.0;
}

inline double eval(const PiecewiseProfile& p, Vec2 x) { return eval(p, to_polar(x)); }

namespace detail {
inline bool near_angle(double a, double b, double tol = 1e-12) {
    return std::abs(wrap_angle(a - b + tol * 0.5) - tol * 0.5) <= tol;
}

inline void require_off_rays(const PiecewiseProfile& p, Polar pt) {
    if (pt.rho <= 0.0) throw error(errc::on_boundary, "gradient requested at the vertex");
    for (const auto& s : p.pieces)
        if (near_angle(pt.theta, s.theta_lo) || near_angle(pt.theta, s.theta_hi))
            throw error(errc::on_boundary, "point lies on a sector ray");
}
} // namespace detail

/// Cartesian gradient of the closed form away from rays and the vertex.
inline Vec2 gradient(const PiecewiseProfile& p, Polar pt) {
    pt.theta = wrap_angle(pt.theta);
    detail::require_off_rays(p, pt);
    const SectorProfile* s = find_piece(p, pt.theta);
    if (!s) return {0.0, 0.0};
    const double rk1 = s->amplitude * std::pow(pt.rho, s->kappa - 1.0);
    const double u_rho = s->kappa * rk1 * s->angular(pt.theta);
    const double u_th_over_rho = rk1 * s->angular_derivative(pt.theta);
    const double c = std::cos(pt.theta), sn = std::sin(pt.theta);
    return {u_rho * c - u_th_over_rho * sn, u_rho * sn + u_th_over_rho * c};
}

inline Vec2 gradient(const PiecewiseProfile& p, Vec2 x) { return gradient(p, to_polar(x)); }

/// u_rr + u_r / r + u_tt / r^2 of the closed form: C r^(k-2) (k^2 - m^2) cos(m t + phi).
inline double laplacian_residual(const PiecewiseProfile& p, Polar pt) {
    pt.theta = wrap_angle(pt.theta);
    detail::require_off_rays(p, pt);
    const SectorProfile* s = find_piece(p, pt.theta);
    if (!s) return 0.0;
    const double k = s->kappa, m = s->frequency;
    return s->amplitude * std::pow(pt.rho, k - 2.0) * (k * k - m * m) * s->angular(pt.theta);
}

// ---------------------------------------------------------------------------
// free boundary conditions

enum class RayKind { two_phase, one_phase_negative, one_phase_positive };

inline const char* to_string(RayKind k) {
    switch (k) {
    case RayKind::two_phase: return "two-phase";
    case RayKind::one_phase_negative: return "one-phase-negative";
    case RayKind::one_phase_positive: return "one-phase-positive";
    }
    return "?";
}

struct RayResidual {
    double theta = 0.0;
    RayKind kind = RayKind::two_phase;
    double residual = 0.0;
};

/// Residuals of the blowup free boundary conditions on every ray of a degree-3/2
/// profile, evaluated at rho = 1 (they scale linearly in rho):
///   two-phase:           |grad u-|^2 - |grad u+|^2 - (x2^0 - x2)
///   one-phase negative:  |grad u-|^2 - (x2^0 - x2)
///   one-phase positive:  |grad u+|^2 - (x2 - x2^0)
/// Rays where the adjacent traces are nonzero are seams, not free boundaries.
inline std::vector<RayResidual> fb_residual(const PiecewiseProfile& p, double x2_0 = 0.0) {
    for (const auto& s : p.pieces)
        if (s.kappa != 1.5 || !s.is_harmonic())
            throw error(errc::unsupported_exponent, "free boundary conditions are stated for degree-3/2 blowups");

    std::vector<double> rays;
    for (const auto& s : p.pieces) {
        for (double t : {s.theta_lo, s.theta_hi}) {
            const double w = wrap_angle(t);
            bool seen = false;
            for (double r : rays) seen = seen || detail::near_angle(r, w);
            if (!seen) rays.push_back(w);
        }
    }
    std::sort(rays.begin(), rays.end());

    std::vector<RayResidual> out;
    for (double ray : rays) {
        const SectorProfile* below = nullptr; // sector ending at the ray
        const SectorProfile* above = nullptr; // sector starting at the ray
        for (const auto& s : p.pieces) {
            if (detail::near_angle(s.theta_hi, ray)) below = &s;
            if (detail::near_angle(s.theta_lo, ray)) above = &s;
        }
        // endpoint traces are evaluated with the piece's own formula
        auto trace_at = [&](const SectorProfile* s, double t) { return s ? s->amplitude * s->angular(t) : 0.0; };
        const double tb = below ? trace_at(below, below->theta_hi) : 0.0;
        const double ta = above ? trace_at(above, above->theta_lo) : 0.0;
        if (std::abs(tb) > 1e-12 || std::abs(ta) > 1e-12) continue;

        const double x2 = std::sin(ray);
        auto grad_sq = [](const SectorProfile* s) { return s ? s->kappa * s->kappa * s->amplitude * s->amplitude : 0.0; };
        const SectorProfile* neg = nullptr;
        const SectorProfile* pos = nullptr;
        std::vector<const SectorProfile*> sides;
        for (const SectorProfile* s : {below, above}) {
            if (!s) continue;
            sides.push_back(s);
            (s->sign == Phase::negative ? neg : pos) = s;
        }
        const bool has_neg = std::any_of(sides.begin(), sides.end(), [](auto s) { return s->sign == Phase::negative; });
        const bool has_pos = std::any_of(sides.begin(), sides.end(), [](auto s) { return s->sign == Phase::positive; });

        RayResidual rr{ray, RayKind::two_phase, 0.0};
        if (has_neg && has_pos) {
            rr.residual = grad_sq(neg) - grad_sq(pos) - (x2_0 - x2);
        } else {
            rr.kind = has_neg ? RayKind::one_phase_negative : RayKind::one_phase_positive;
            const double target = has_neg ? (x2_0 - x2) : (x2 - x2_0);
            double worst = 0.0;
            for (const SectorProfile* s : sides) {
                const double r = grad_sq(s) - target;
                if (std::abs(r) >= std::abs(worst)) worst = r;
            }
            rr.residual = worst;
        }
        out.push_back(rr);
    }
    return out;
}

// ---------------------------------------------------------------------------
// densities

/// Negative-phase density: integral over B_1 of (-x2)^+ on the negative sectors,
/// (1/3)[cos theta_hi - cos theta_lo] per sector clipped to the lower half plane.
inline double density_value(const PiecewiseProfile& p) {
    double total = 0.0;
    for (const auto& s : p.pieces) {
        if (s.sign != Phase::negative) continue;
        const double lo = std::max(s.theta_lo, -pi);
        const double hi = std::min(s.theta_hi, 0.0);
        if (hi > lo) total += (std::cos(hi) - std::cos(lo)) / 3.0;
    }
    return total;
}

inline DensityValue density(const PiecewiseProfile& p) {
    const double v = density_value(p);
    DensityKind best = DensityKind::zero;
    double best_gap = std::abs(v);
    for (DensityKind k : {DensityKind::stokes, DensityKind::asymmetric, DensityKind::halfplane}) {
        const double gap = std::abs(v - exact_density(k));
        if (gap < best_gap) {
            best_gap = gap;
            best = k;
        }
    }
    // catalog entries land on the symbolic constant exactly
    return {best_gap < 1e-12 ? exact_density(best) : v, best};
}

// ---------------------------------------------------------------------------
// invariants and text schema

/// Checks sector ordering, disjointness and sign consistency; throws invalid-argument.
inline void validate(const PiecewiseProfile& p) {
    for (std::size_t i = 0; i < p.pieces.size(); ++i) {
        const auto& s = p.pieces[i];
        if (!(s.theta_lo < s.theta_hi) || s.theta_hi - s.theta_lo > 2 * pi + 1e-12 || s.theta_lo < -pi - 1e-12 ||
            s.theta_hi > pi + 1e-12)
            throw error(errc::invalid_argument, p.name + ": malformed sector");
        if (s.amplitude < 0.0) throw error(errc::invalid_argument, p.name + ": negative amplitude");
        if (s.kappa < 1.0 || s.kappa > 4.0) throw error(errc::invalid_argument, p.name + ": exponent out of range");
        for (std::size_t j = i + 1; j < p.pieces.size(); ++j) {
            const auto& o = p.pieces[j];
            if (s.theta_lo < o.theta_hi - 1e-12 && o.theta_lo < s.theta_hi - 1e-12)
                throw error(errc::invalid_argument, p.name + ": overlapping sectors");
        }
        for (int k = 1; k < 16; ++k) {
            const double t = s.theta_lo + (s.theta_hi - s.theta_lo) * k / 16.0;
            const double v = s.angular(t);
            if ((s.sign == Phase::negative && v > 1e-12) || (s.sign == Phase::positive && v < -1e-12))
                throw error(errc::invalid_argument, p.name + ": piece sign does not match its formula");
        }
    }
}

namespace detail {
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
} // namespace detail

/// One record per piece: name C kappa phi theta_lo theta_hi sign
inline void write_catalog(std::ostream& os, const std::vector<PiecewiseProfile>& profiles) {
    os << "# name C kappa phi theta_lo theta_hi sign\n";
    for (const auto& p : profiles)
        for (const auto& s : p.pieces)
            os << p.name << ' ' << detail::fmt17(s.amplitude) << ' ' << detail::fmt17(s.kappa) << ' '
               << detail::fmt17(s.phase) << ' ' << detail::fmt17(s.theta_lo) << ' ' << detail::fmt17(s.theta_hi)
               << ' ' << to_string(s.sign) << '\n';
}

inline std::vector<PiecewiseProfile> read_catalog(std::istream& is) {
    std::vector<PiecewiseProfile> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string name, sign;
        SectorProfile s;
        if (!(ls >> name >> s.amplitude >> s.kappa >> s.phase >> s.theta_lo >> s.theta_hi >> sign))
            throw error(errc::parse_error, "catalog line " + std::to_string(lineno));
        if (sign != "negative" && sign != "positive")
            throw error(errc::parse_error, "catalog line " + std::to_string(lineno) + ": bad sign");
        s.sign = sign == "negative" ? Phase::negative : Phase::positive;
        s.frequency = s.kappa;
        if (out.empty() || out.back().name != name) {
            PiecewiseProfile p{name, CatalogTag::CUSTOM, {}};
            try {
                p.tag = catalog_profile(name).tag;
            } catch (const error&) {
            }
            out.push_back(std::move(p));
        }
        out.back().pieces.push_back(s);
    }
    for (const auto& p : out) validate(p);
    return out;
}

/// Degree-3/2 piece on the 2pi/3 sector [lo, lo + 2pi/3) vanishing on both rays.
inline SectorProfile corner_piece(double amplitude, double lo, Phase sign) {
    const double phi = (sign == Phase::negative ? pi / 2 : -pi / 2) - 1.5 * lo;
    return SectorProfile::harmonic(amplitude, 1.5, wrap_angle(phi), lo, lo + 2 * pi / 3, sign);
}

} // namespace ehd
