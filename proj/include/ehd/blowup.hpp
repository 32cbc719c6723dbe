#pragma once
//
// blowup.hpp
//
// Stagnation points of the negative phase, blowup diagnostics at a point
// (homogeneity of rescalings, tangent slopes of the free boundary, area
// fraction of the negative phase below the point) and the classification of
// the singular profile from its degree-3/2 density.
//

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "field.hpp"
#include "profiles.hpp"
#include "weiss.hpp"

namespace ehd {

// ---------------------------------------------------------------------------
// stagnation points

struct StagnationCandidate {
    Vec2 location{};
    double grad_minus = 0.0; // estimated |grad u-|
    double height_gap = 0.0; // x2 - x2^0
};

struct StagnationReport {
    std::vector<StagnationCandidate> candidates;
    std::vector<StagnationCandidate> anomalous; // small gradient, above the datum by more than tol_h
    double tol_g = 0.0, tol_h = 0.0;
};

namespace detail {

/// max over 16 directions of u-(p + h d) / h.
inline double grad_minus_estimate(const ScalarField& u, Vec2 p) {
    double g = 0.0;
    for (int k = 0; k < 16; ++k) {
        const Vec2 q = p + from_polar(u.h(), 2 * pi * k / 16);
        g = std::max(g, std::max(-sample(u, q), 0.0) / u.h());
    }
    return g;
}

/// Single-linkage clusters at distance link; keeps the smallest-gradient member.
inline std::vector<StagnationCandidate> cluster(std::vector<StagnationCandidate> pts, double link) {
    std::vector<int> label(pts.size(), -1);
    int next = 0;
    for (std::size_t s = 0; s < pts.size(); ++s) {
        if (label[s] >= 0) continue;
        label[s] = next;
        std::vector<std::size_t> stack{s};
        while (!stack.empty()) {
            const std::size_t a = stack.back();
            stack.pop_back();
            for (std::size_t b = 0; b < pts.size(); ++b)
                if (label[b] < 0 && norm(pts[a].location - pts[b].location) <= link) {
                    label[b] = next;
                    stack.push_back(b);
                }
        }
        ++next;
    }
    std::vector<StagnationCandidate> out;
    for (int c = 0; c < next; ++c) {
        const StagnationCandidate* best = nullptr;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            if (label[k] != c) continue;
            const auto& p = pts[k];
            if (!best || p.grad_minus < best->grad_minus ||
                (p.grad_minus == best->grad_minus && std::abs(p.height_gap) < std::abs(best->height_gap)))
                best = &p;
        }
        out.push_back(*best);
    }
    std::sort(out.begin(), out.end(), [](const StagnationCandidate& a, const StagnationCandidate& b) {
        return a.location.x != b.location.x ? a.location.x < b.location.x : a.location.y < b.location.y;
    });
    return out;
}

} // namespace detail

/// Gradient tolerance: three times the |grad u-| a degree-3/2 vertex shows one cell away.
inline double stagnation_tol_g(double h) { return 3 * 1.5 * std::sqrt(2 * h); }
inline double stagnation_tol_h(double h) { return 3 * h; }

// ---------------------------------------------------------------------------
// homogeneity of rescalings

struct HomogeneityDeviation {
    double deviation = 0.0;
    bool degenerate = false;
};

/// L2(B_1) distance between two rescalings, relative to the larger norm.
inline HomogeneityDeviation homogeneity_deviation(const ScalarField& u, Vec2 x0, double kappa, double r1, double r2,
                                                  int n = 129) {
    const ScalarField a = rescale(u, x0, r1, kappa, n);
    const ScalarField b = rescale(u, x0, r2, kappa, n);
    double d2 = 0.0, na = 0.0, nb = 0.0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const Vec2 x = a.node(i, j);
            if (dot(x, x) > 1.0) continue;
            const double va = a.at(i, j), vb = b.at(i, j);
            d2 += (va - vb) * (va - vb);
            na += va * va;
            nb += vb * vb;
        }
    const double big = std::sqrt(std::max(na, nb));
    if (big == 0.0) return {0.0, true};
    return {std::sqrt(d2) / big, false};
}

// ---------------------------------------------------------------------------
// tangent slopes

/// Open polyline of the negative-phase boundary passing nearest to x0, if any lies within dist.
inline std::optional<Polyline> nearest_polyline(const std::vector<Polyline>& lines, Vec2 x0, double dist) {
    std::optional<Polyline> best;
    double bd = dist;
    for (const auto& pl : lines)
        for (const Vec2& p : pl.vertices)
            if (norm(p - x0) <= bd) {
                bd = norm(p - x0);
                best = pl;
            }
    return best;
}

struct FitWindow {
    double r_in = 0.0;
    double r_out = 0.0;
};

struct TangentSlopes {
    double l_minus = 0.0, l_plus = 0.0;         // slopes (x2 - x2^0)/(x1 - x1^0) of the two branches
    double angle_minus = 0.0, angle_plus = 0.0; // mean branch directions in [-pi, pi)
    int count_minus = 0, count_plus = 0;
};

namespace detail {

struct Branch {
    double angle = 0.0;
    double mean_x = 0.0;
    int count = 0;
};

inline Branch fit_branch(const std::vector<Vec2>& pts, Vec2 x0, FitWindow w) {
    Vec2 dir{0, 0};
    double sx = 0.0;
    int n = 0;
    for (const Vec2& p : pts) {
        const double d = norm(p - x0);
        if (d < w.r_in || d > w.r_out || d == 0.0) continue;
        dir = dir + (p - x0) * (1.0 / d);
        sx += p.x;
        ++n;
    }
    if (n < 4) throw error(errc::insufficient_arc, "fewer than four free boundary vertices in the fit window");
    return {wrap_angle(std::atan2(dir.y, dir.x)), sx / n, n};
}

/// The two branches of a polyline on either side of its vertex nearest x0.
inline std::pair<std::vector<Vec2>, std::vector<Vec2>> split_at_nearest(const Polyline& fb, Vec2 x0) {
    const auto& v = fb.vertices;
    std::size_t k = 0;
    for (std::size_t m = 1; m < v.size(); ++m)
        if (norm(v[m] - x0) < norm(v[k] - x0)) k = m;
    std::vector<Vec2> a, b;
    if (fb.closed) {
        const std::size_t n = v.size(), half = n / 2;
        for (std::size_t s = 1; s <= half; ++s) b.push_back(v[(k + s) % n]);
        for (std::size_t s = 1; s < n - half; ++s) a.push_back(v[(k + n - s) % n]);
    } else {
        a.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k));
        b.assign(v.begin() + static_cast<std::ptrdiff_t>(k) + 1, v.end());
    }
    return {a, b};
}

/// Total least squares line through the branch vertices in the window: centroid and unit direction.
inline bool fit_line(const std::vector<Vec2>& pts, Vec2 x0, FitWindow w, Vec2& centroid, Vec2& dir) {
    Vec2 m{0, 0};
    int n = 0;
    for (const Vec2& p : pts)
        if (double d = norm(p - x0); d >= w.r_in && d <= w.r_out) {
            m = m + p;
            ++n;
        }
    if (n < 4) return false;
    m = m * (1.0 / n);
    double sxx = 0, sxy = 0, syy = 0;
    for (const Vec2& p : pts)
        if (double d = norm(p - x0); d >= w.r_in && d <= w.r_out) {
            const Vec2 q = p - m;
            sxx += q.x * q.x;
            sxy += q.x * q.y;
            syy += q.y * q.y;
        }
    const double angle = 0.5 * std::atan2(2 * sxy, sxx - syy);
    centroid = m;
    dir = from_polar(1.0, angle);
    return true;
}

/// Moves a stagnation estimate onto the kink of the free boundary: the
/// intersection of straight-line fits to the two branches over [2h, 12h].
/// Kept unchanged when the branches are nearly parallel (flat or cusp
/// geometry) or when the intersection lies more than 3h away.
inline Vec2 refine_corner(const std::vector<Polyline>& lines, Vec2 p, double h) {
    for (int pass = 0; pass < 2; ++pass) {
        const auto pl = nearest_polyline(lines, p, 2 * h);
        if (!pl) return p;
        const auto [a, b] = split_at_nearest(*pl, p);
        Vec2 ma, da, mb, db;
        const FitWindow w{2 * h, 12 * h};
        if (!fit_line(a, p, w, ma, da) || !fit_line(b, p, w, mb, db)) return p;
        const double det = da.x * db.y - da.y * db.x;
        if (std::abs(det) < std::sin(0.2)) return p;
        const Vec2 r = mb - ma;
        const double t = (r.x * db.y - r.y * db.x) / det;
        const Vec2 q = ma + da * t;
        if (norm(q - p) > 3 * h) return p;
        p = q;
    }
    return p;
}

} // namespace detail

/// Splits the polyline at its vertex nearest x0 and fits one direction per branch.
inline TangentSlopes tangent_slopes(const Polyline& fb, Vec2 x0, FitWindow w) {
    if (fb.vertices.size() < 2) throw error(errc::insufficient_arc, "polyline too short");
    if (!(w.r_out > w.r_in && w.r_in >= 0)) throw error(errc::invalid_argument, "bad fit window");
    auto [a, b] = detail::split_at_nearest(fb, x0);
    detail::Branch ba = detail::fit_branch(a, x0, w), bb = detail::fit_branch(b, x0, w);
    if (bb.mean_x < ba.mean_x) std::swap(ba, bb);
    TangentSlopes t;
    t.angle_minus = ba.angle;
    t.angle_plus = bb.angle;
    t.l_minus = std::tan(ba.angle);
    t.l_plus = std::tan(bb.angle);
    t.count_minus = ba.count;
    t.count_plus = bb.count;
    return t;
}

// ---------------------------------------------------------------------------
// stagnation detection

/// Lattice stagnation candidates and anomalous points above the datum. Each
/// cluster's smallest-gradient vertex is moved onto the corner of the free
/// boundary when the two branches meet at an angle.
inline StagnationReport find_stagnation(const ScalarField& u) {
    const PhasedField pf(u);
    const double h = u.h(), x20 = u.datum();
    StagnationReport rep;
    rep.tol_g = stagnation_tol_g(h);
    rep.tol_h = stagnation_tol_h(h);
    std::vector<StagnationCandidate> near, above;
    const auto lines = extract_level_set(pf, Phase::negative);
    for (const auto& pl : lines)
        for (const Vec2& v : pl.vertices) {
            if (!u.contains(v, 2 * h)) continue;
            const double g = detail::grad_minus_estimate(u, v);
            if (g > rep.tol_g) continue;
            const StagnationCandidate c{v, g, v.y - x20};
            if (std::abs(c.height_gap) <= rep.tol_h)
                near.push_back(c);
            else if (c.height_gap > rep.tol_h)
                above.push_back(c);
        }
    rep.candidates = detail::cluster(near, 3 * h);
    rep.anomalous = detail::cluster(above, 3 * h);
    for (auto* set : {&rep.candidates, &rep.anomalous})
        for (auto& c : *set) {
            const Vec2 q = detail::refine_corner(lines, c.location, h);
            if (q == c.location || !u.contains(q, 2 * h)) continue;
            const double g = detail::grad_minus_estimate(u, q);
            if (g > rep.tol_g) continue;
            c = {q, g, q.y - x20};
        }
    return rep;
}

// ---------------------------------------------------------------------------
// area fraction below the point

/// |{u<0} cap B_r(x0) cap {x2 < x0_2}| / (pi r^2 / 2).
inline double chi_minus_fraction(const PhasedField& pf, Vec2 x0, double r) {
    const double area =
        phase_ball_integral_clipped(pf, Phase::negative, [](Vec2) { return 1.0; }, x0, r, -1, x0.y);
    return std::clamp(area / (pi * r * r / 2), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// classification

enum class Label { StokesCorner, AsymmetricLeft, AsymmetricRight, Cusp, HorizontalPoint, NonStagnation, Unclassified };

inline const char* to_string(Label l) {
    switch (l) {
    case Label::StokesCorner: return "StokesCorner";
    case Label::AsymmetricLeft: return "AsymmetricLeft";
    case Label::AsymmetricRight: return "AsymmetricRight";
    case Label::Cusp: return "Cusp";
    case Label::HorizontalPoint: return "HorizontalPoint";
    case Label::NonStagnation: return "NonStagnation";
    case Label::Unclassified: return "Unclassified";
    }
    return "?";
}

struct Band {
    double lo, hi;
    constexpr bool contains(double v) const { return v >= lo && v <= hi; }
};

namespace bands {
inline constexpr Band zero{0.0, 0.12};
// 1/2 and sqrt3/3 are only 0.077 apart, so their bands meet at the midpoint
inline constexpr Band asymmetric{0.44, 0.538};
inline constexpr Band stokes{0.539, 0.6374};
inline constexpr Band sigma_u{0.6467, 0.6867};
inline constexpr double slope_tol = 0.15;  // Stokes branch slopes
inline constexpr double angle_tol = 0.2;   // asymmetric branch directions (rad)

constexpr bool disjoint(Band a, Band b) { return a.hi < b.lo || b.hi < a.lo; }
static_assert(disjoint(zero, asymmetric) && disjoint(zero, stokes) && disjoint(zero, sigma_u) &&
                  disjoint(asymmetric, stokes) && disjoint(asymmetric, sigma_u) && disjoint(stokes, sigma_u),
              "classification bands overlap");
} // namespace bands

struct EvidenceRow {
    double r = 0.0;
    double density = 0.0;
    double chi_minus_fraction = 0.0;
};

struct ClassificationResult {
    Label label = Label::Unclassified;
    Vec2 center{};
    double density = std::numeric_limits<double>::quiet_NaN();
    bool density_converged = false;
    std::optional<TangentSlopes> slopes;
    double chi_minus_fraction = std::numeric_limits<double>::quiet_NaN();
    bool sigma_u_candidate = false;
    std::optional<double> positive_decay_exponent; // fitted exponent of sup |grad u+| against r
    std::vector<EvidenceRow> evidence;
    std::vector<std::string> reasons;
};

struct ClassifyOptions {
    double fit_in_cells = 4.0;   // slope window [4h, 16h]
    double fit_out_cells = 16.0;
    double min_cells = 16.0;     // smallest density radius in cells
};

namespace detail {

inline double angle_distance(double a, double b) { return std::abs(wrap_angle(a - b)); }

/// Exponent p in sup_{dB_r} |grad u+| ~ r^p over the radii where the positive phase is seen.
inline std::optional<double> positive_decay(const PhasedField& pf, Vec2 x0, const std::vector<double>& radii) {
    std::vector<double> lx, ly;
    for (double r : radii) {
        double m = 0.0;
        for (int k = 0; k < default_n_theta; ++k) {
            const Vec2 p = x0 + from_polar(r, -pi + 2 * pi * k / default_n_theta);
            if (pf.inside(Phase::positive, p)) m = std::max(m, std::sqrt(pf.grad_sq(Phase::positive, p)));
        }
        if (m > 0) {
            lx.push_back(std::log(r));
            ly.push_back(std::log(m));
        }
    }
    if (lx.size() < 3) return std::nullopt;
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sx += lx[k];
        sy += ly[k];
        sxx += lx[k] * lx[k];
        sxy += lx[k] * ly[k];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace detail

inline ClassificationResult classify(const ScalarField& u, const StagnationCandidate& cand, ClassifyOptions opt = {}) {
    const PhasedField pf(u);
    const double h = u.h();
    const Vec2 x0 = cand.location;
    ClassificationResult res;
    res.center = x0;

    std::optional<DensityLimit> dl;
    try {
        dl = density_limit(pf, x0, 1.5, PhaseSelector::negative, {}, opt.min_cells);
        res.density = dl->limit;
        res.density_converged = dl->converged;
        for (std::size_t k = 0; k < dl->radii.size(); ++k)
            res.evidence.push_back({dl->radii[k], dl->values[k], chi_minus_fraction(pf, x0, dl->radii[k])});
        res.chi_minus_fraction = res.evidence.back().chi_minus_fraction;
        res.positive_decay_exponent = detail::positive_decay(pf, x0, dl->radii);
    } catch (const error& e) {
        res.reasons.push_back(std::string("density: ") + e.what());
    }

    const double room = std::min({x0.x - u.lo().x, u.hi().x - x0.x, x0.y - u.lo().y, u.hi().y - x0.y});
    const FitWindow win{opt.fit_in_cells * h, std::min(opt.fit_out_cells * h, room)};
    if (auto pl = nearest_polyline(extract_level_set(pf, Phase::negative), x0, 2 * h)) {
        try {
            res.slopes = tangent_slopes(*pl, x0, win);
        } catch (const error& e) {
            res.reasons.push_back(std::string("slopes: ") + e.what());
        }
    } else {
        res.reasons.push_back("slopes: no free boundary within 2h of the point");
    }

    if (!dl) return res;
    const double d = res.density;
    const double s3 = constants::sqrt3;
    if (bands::stokes.contains(d)) {
        if (!res.slopes) {
            res.reasons.push_back("Stokes density without slopes");
        } else if (std::abs(res.slopes->l_minus - s3 / 3) <= bands::slope_tol &&
                   std::abs(res.slopes->l_plus + s3 / 3) <= bands::slope_tol) {
            res.label = Label::StokesCorner;
        } else {
            res.reasons.push_back("Stokes density but slopes differ from (sqrt3/3, -sqrt3/3)");
        }
    } else if (bands::asymmetric.contains(d)) {
        if (!res.slopes) {
            res.reasons.push_back("asymmetric density without slopes");
        } else {
            const auto& t = *res.slopes;
            const double left =
                std::max(detail::angle_distance(t.angle_minus, -pi), detail::angle_distance(t.angle_plus, -pi / 3));
            const double right = std::max(detail::angle_distance(t.angle_minus, -2 * pi / 3),
                                          detail::angle_distance(t.angle_plus, 0.0));
            if (std::min(left, right) <= bands::angle_tol)
                res.label = left < right ? Label::AsymmetricLeft : Label::AsymmetricRight;
            else
                res.reasons.push_back("asymmetric density but branch directions match neither side");
        }
    } else if (bands::zero.contains(d)) {
        res.label = res.chi_minus_fraction < 0.5 ? Label::Cusp : Label::HorizontalPoint;
    } else if (bands::sigma_u.contains(d)) {
        res.sigma_u_candidate = true;
        res.reasons.push_back("density in the 2/3 band (sigma-u candidate)");
    } else {
        res.reasons.push_back("density outside every band");
    }
    return res;
}

/// Classification of the candidate nearest to x0, or NonStagnation if there is none within radius.
inline ClassificationResult classify_near(const ScalarField& u, Vec2 x0, double radius, ClassifyOptions opt = {}) {
    const StagnationReport rep = find_stagnation(u);
    const StagnationCandidate* best = nullptr;
    for (const auto& c : rep.candidates)
        if (norm(c.location - x0) <= radius && (!best || norm(c.location - x0) < norm(best->location - x0)))
            best = &c;
    if (!best) {
        ClassificationResult res;
        res.label = Label::NonStagnation;
        res.center = x0;
        res.reasons.push_back("no stagnation candidate near the point");
        return res;
    }
    return classify(u, *best, opt);
}

// ---------------------------------------------------------------------------
// synthetic fields

/// u = |x1| - (x2^-)^2: negative only in the thin cusp |x1| < x2^2, x2 < 0.
inline ScalarField thin_cusp_field(double h, double half = 1.125) {
    return ScalarField::square(half, h, [](Vec2 p) {
        const double m = std::min(p.y, 0.0);
        return std::abs(p.x) - m * m;
    });
}

/// u = -(x2^-)^2: negative on the whole lower half plane.
inline ScalarField lower_half_plane_field(double h, double half = 1.125) {
    return ScalarField::square(half, h, [](Vec2 p) {
        const double m = std::min(p.y, 0.0);
        return -m * m;
    });
}

// ---------------------------------------------------------------------------
// serialization

inline std::string to_summary(const ClassificationResult& r) {
    char buf[160];
    std::string s = std::string("label=") + to_string(r.label);
    auto put = [&](const char* key, double v) {
        std::snprintf(buf, sizeof buf, " %s=%.17g", key, v);
        s += buf;
    };
    put("x1", r.center.x);
    put("x2", r.center.y);
    put("density", r.density);
    s += std::string(" density_converged=") + (r.density_converged ? "1" : "0");
    if (r.slopes) {
        put("l_minus", r.slopes->l_minus);
        put("l_plus", r.slopes->l_plus);
        put("angle_minus", r.slopes->angle_minus);
        put("angle_plus", r.slopes->angle_plus);
    }
    put("chi_minus_fraction", r.chi_minus_fraction);
    if (r.positive_decay_exponent) put("positive_decay_exponent", *r.positive_decay_exponent);
    s += std::string(" sigma_u_candidate=") + (r.sigma_u_candidate ? "1" : "0");
    for (const auto& why : r.reasons) {
        std::string q = why;
        std::replace(q.begin(), q.end(), ' ', '_');
        s += " reason=" + q;
    }
    return s;
}

inline void write_evidence_csv(std::ostream& os, const ClassificationResult& r) {
    os << "r,density,chi_minus_fraction\n";
    char buf[128];
    for (const auto& e : r.evidence) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", e.r, e.density, e.chi_minus_fraction);
        os << buf;
    }
}

} // namespace ehd
