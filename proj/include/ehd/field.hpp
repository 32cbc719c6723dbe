#pragma once
//
// field.hpp
//
// Scalar fields on uniform lattices: bilinear sampling, finite differences,
// polar quadrature, zero level set extraction and blowup rescaling.
//
// Diagnostics near a free boundary go through PhasedField, which keeps one
// level function per phase. Inside the phase it equals u (sign-adjusted so
// the phase is where it is negative); in a three-cell band outside it holds a
// least-squares linear continuation. Bilinear interpolation of that function
// locates the interface to second order even where u vanishes identically on
// the other side, which plain interpolation of min(u,0) cannot do.
//

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <concepts>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "geometry.hpp"
#include "profiles.hpp"

namespace ehd {

inline constexpr int default_n_theta = 576;

class ScalarField {
public:
    ScalarField() = default;

    ScalarField(Vec2 origin, double h, int nx, int ny, std::vector<double> values, double datum = 0.0)
        : origin_(origin), h_(h), nx_(nx), ny_(ny), datum_(datum), values_(std::move(values)) {
        if (!(h > 0.0) || !std::isfinite(h)) throw error(errc::invalid_field, "spacing must be positive");
        if (nx < 8 || ny < 8) throw error(errc::invalid_field, "lattice must be at least 8x8");
        if (values_.size() != static_cast<std::size_t>(nx) * ny)
            throw error(errc::invalid_field, "value count does not match lattice");
        for (double v : values_)
            if (!std::isfinite(v)) throw error(errc::invalid_field, "non-finite value");
    }

    /// Samples f on the lattice with lower-left corner lo and n nodes per side.
    template <class F>
    static ScalarField from_function(Vec2 lo, double h, int nx, int ny, F&& f, double datum = 0.0) {
        std::vector<double> v(static_cast<std::size_t>(nx) * ny);
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) v[static_cast<std::size_t>(j) * nx + i] = f(Vec2{lo.x + i * h, lo.y + j * h});
        return ScalarField(lo, h, nx, ny, std::move(v), datum);
    }

    /// Square lattice on [-half, half]^2 with spacing h (half/h rounded to an integer).
    template <class F>
        requires std::invocable<F, Vec2>
    static ScalarField square(double half, double h, F&& f, double datum = 0.0) {
        const int cells = static_cast<int>(std::lround(2.0 * half / h));
        return from_function(Vec2{-half, -half}, h, cells + 1, cells + 1, std::forward<F>(f), datum);
    }

    static ScalarField square(double half, double h, const PiecewiseProfile& p, double datum = 0.0) {
        return square(half, h, [&](Vec2 x) { return eval(p, x); }, datum);
    }

    Vec2 origin() const { return origin_; }
    double h() const { return h_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double datum() const { return datum_; }
    void set_datum(double d) { datum_ = d; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    double at(int i, int j) const { return values_[static_cast<std::size_t>(j) * nx_ + i]; }
    double& at(int i, int j) { return values_[static_cast<std::size_t>(j) * nx_ + i]; }
    Vec2 node(int i, int j) const { return {origin_.x + i * h_, origin_.y + j * h_}; }
    Vec2 lo() const { return origin_; }
    Vec2 hi() const { return {origin_.x + (nx_ - 1) * h_, origin_.y + (ny_ - 1) * h_}; }

    /// True when p lies at least `margin` inside the lattice hull.
    bool contains(Vec2 p, double margin = 0.0) const {
        const double tol = 1e-9 * h_;
        const Vec2 a = lo(), b = hi();
        return p.x >= a.x + margin - tol && p.x <= b.x - margin + tol && p.y >= a.y + margin - tol &&
               p.y <= b.y - margin + tol;
    }

    bool contains_ball(Vec2 c, double r) const { return contains(c, r); }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    Vec2 origin_{};
    double h_ = 1.0;
    int nx_ = 0, ny_ = 0;
    double datum_ = 0.0;
    std::vector<double> values_;
};

namespace detail {

/// Cell index and local coordinates of p; assumes p is inside the hull.
struct CellCoord {
    int i, j;
    double s, t;
};

inline CellCoord locate(const ScalarField& f, Vec2 p) {
    const double gx = (p.x - f.origin().x) / f.h();
    const double gy = (p.y - f.origin().y) / f.h();
    int i = std::clamp(static_cast<int>(std::floor(gx)), 0, f.nx() - 2);
    int j = std::clamp(static_cast<int>(std::floor(gy)), 0, f.ny() - 2);
    return {i, j, std::clamp(gx - i, 0.0, 1.0), std::clamp(gy - j, 0.0, 1.0)};
}

inline double bilinear(double v00, double v10, double v01, double v11, double s, double t) {
    return (1 - s) * (1 - t) * v00 + s * (1 - t) * v10 + (1 - s) * t * v01 + s * t * v11;
}

inline void require_inside(const ScalarField& f, Vec2 p, double margin, const char* what) {
    if (!f.contains(p, margin)) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s at (%.6g, %.6g) leaves the lattice hull", what, p.x, p.y);
        throw error(errc::out_of_domain, buf);
    }
}

} // namespace detail

/// Bilinear interpolation; exact on bilinear functions.
inline double sample(const ScalarField& f, Vec2 p) {
    detail::require_inside(f, p, 0.0, "sample point");
    const auto c = detail::locate(f, p);
    return detail::bilinear(f.at(c.i, c.j), f.at(c.i + 1, c.j), f.at(c.i, c.j + 1), f.at(c.i + 1, c.j + 1), c.s, c.t);
}

/// Central differences of the interpolated field with step h.
inline Vec2 grad(const ScalarField& f, Vec2 p) {
    detail::require_inside(f, p, f.h(), "gradient point");
    const double h = f.h();
    return {(sample(f, {p.x + h, p.y}) - sample(f, {p.x - h, p.y})) / (2 * h),
            (sample(f, {p.x, p.y + h}) - sample(f, {p.x, p.y - h})) / (2 * h)};
}

// ---------------------------------------------------------------------------
// quadrature

/// Trapezoid rule in theta starting at theta = -pi; includes the arc length factor.
template <class F>
double circle_quadrature(F&& integrand, Vec2 center, double r, int n_theta = default_n_theta) {
    if (n_theta < 64) throw error(errc::invalid_argument, "n_theta must be at least 64");
    const double dt = 2 * pi / n_theta;
    double sum = 0.0;
    for (int k = 0; k < n_theta; ++k) {
        const double th = -pi + k * dt;
        sum += integrand(center + from_polar(r, th));
    }
    return sum * dt * r;
}

/// Tensor trapezoid in theta times composite midpoint in rho, with the rho weight.
template <class F>
double ball_quadrature(F&& integrand, Vec2 center, double r, int n_rho, int n_theta = default_n_theta) {
    if (n_rho < 1) throw error(errc::invalid_argument, "n_rho must be positive");
    const double dr = r / n_rho;
    double sum = 0.0;
    for (int k = 0; k < n_rho; ++k) {
        const double rho = (k + 0.5) * dr;
        sum += circle_quadrature(integrand, center, rho, n_theta);
    }
    return sum * dr;
}

inline int default_n_rho(double r, double h) { return std::max(16, static_cast<int>(std::ceil(r / h))); }

template <class F>
double circle_integral(const ScalarField& f, F&& integrand, Vec2 center, double r, int n_theta = default_n_theta) {
    detail::require_inside(f, center, r, "circle");
    return circle_quadrature(std::forward<F>(integrand), center, r, n_theta);
}

template <class F>
double ball_integral(const ScalarField& f, F&& integrand, Vec2 center, double r, int n_rho = 0,
                     int n_theta = default_n_theta) {
    detail::require_inside(f, center, r, "ball");
    if (n_rho <= 0) n_rho = default_n_rho(r, f.h());
    return ball_quadrature(std::forward<F>(integrand), center, r, n_rho, n_theta);
}

// ---------------------------------------------------------------------------
// phase-aware view

class PhasedField {
public:
    PhasedField(const ScalarField& u) : u_(u) { build(); } // NOLINT: implicit by design

    const ScalarField& field() const { return u_; }
    double h() const { return u_.h(); }
    double datum() const { return u_.datum(); }

    /// Level function of the phase: negative inside, NaN far outside.
    double level(Phase ph, Vec2 p) const {
        const auto& q = lv_[idx(ph)];
        const auto c = detail::locate(u_, p);
        const double a = q[lin(c.i, c.j)], b = q[lin(c.i + 1, c.j)];
        const double d = q[lin(c.i, c.j + 1)], e = q[lin(c.i + 1, c.j + 1)];
        return detail::bilinear(a, b, d, e, c.s, c.t);
    }

    bool inside(Phase ph, Vec2 p) const {
        const double v = level(ph, p);
        return std::isfinite(v) && v < 0.0;
    }

    /// u^+ or u^- (signed: u^- <= 0) reconstructed from the phase level function.
    double part(Phase ph, Vec2 p) const {
        const double v = level(ph, p);
        if (!std::isfinite(v) || v >= 0.0) return 0.0;
        return ph == Phase::negative ? v : -v;
    }

    /// Gradient of u restricted to the phase (its smooth continuation near the interface).
    Vec2 gradient(Phase ph, Vec2 p) const {
        const auto& g = g_[idx(ph)];
        const auto c = detail::locate(u_, p);
        auto comp = [&](auto get) {
            return detail::bilinear(get(g[lin(c.i, c.j)]), get(g[lin(c.i + 1, c.j)]), get(g[lin(c.i, c.j + 1)]),
                                    get(g[lin(c.i + 1, c.j + 1)]), c.s, c.t);
        };
        Vec2 out{comp([](Vec2 v) { return v.x; }), comp([](Vec2 v) { return v.y; })};
        return ph == Phase::negative ? out : -out;
    }

    /// Squared gradient magnitude, interpolated from nodal values.
    double grad_sq(Phase ph, Vec2 p) const {
        const auto& g = g2_[idx(ph)];
        const auto c = detail::locate(u_, p);
        return detail::bilinear(g[lin(c.i, c.j)], g[lin(c.i + 1, c.j)], g[lin(c.i, c.j + 1)], g[lin(c.i + 1, c.j + 1)],
                                c.s, c.t);
    }

    /// Nodal snapped value of u (|u| below 1e-12 max|u| set to 0).
    double snapped(int i, int j) const { return us_[lin(i, j)]; }
    double level_node(Phase ph, int i, int j) const { return lv_[idx(ph)][lin(i, j)]; }

private:
    static constexpr int band = 3;

    static int idx(Phase ph) { return ph == Phase::negative ? 0 : 1; }
    std::size_t lin(int i, int j) const { return static_cast<std::size_t>(j) * u_.nx() + i; }

    void build() {
        const int nx = u_.nx(), ny = u_.ny();
        const double floor = 1e-12 * u_.max_abs();
        us_.resize(u_.values().size());
        for (std::size_t k = 0; k < us_.size(); ++k) us_[k] = std::abs(u_.values()[k]) <= floor ? 0.0 : u_.values()[k];

        for (int ph = 0; ph < 2; ++ph) {
            const double s = ph == 0 ? 1.0 : -1.0; // q = s*u inside the phase
            auto& q = q_[ph];
            q.assign(us_.size(), std::numeric_limits<double>::quiet_NaN());
            std::vector<char> in(us_.size(), 0);
            for (std::size_t k = 0; k < us_.size(); ++k)
                if (s * us_[k] < 0.0) {
                    in[k] = 1;
                    q[k] = s * us_[k];
                }
            // a zero node flanked by the phase on opposite sides sits on an
            // interior nodal line (a V-shaped kink), not on the free boundary
            std::vector<std::size_t> flanked;
            for (int j = 1; j + 1 < ny; ++j)
                for (int i = 1; i + 1 < nx; ++i) {
                    if (us_[lin(i, j)] != 0.0) continue;
                    auto both = [&](int di, int dj) { return in[lin(i - di, j - dj)] && in[lin(i + di, j + dj)]; };
                    if (both(1, 0) || both(0, 1) || both(1, 1) || both(1, -1)) flanked.push_back(lin(i, j));
                }
            for (std::size_t k : flanked) {
                in[k] = 1;
                q[k] = -DBL_MIN;
            }
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    if (in[lin(i, j)]) continue;
                    extend(in, q, i, j);
                }
            nodal_gradients(q, g_[ph], g2_[ph]);
            // the indicator keeps the extension only at zero nodes; where u has
            // the opposite sign its own value places the crossing, which stays
            // exact when the phase is thinner than the extension stencil
            auto& lv = lv_[ph];
            lv = q;
            for (std::size_t k = 0; k < us_.size(); ++k)
                if (s * us_[k] > 0.0) lv[k] = s * us_[k];
        }
    }

    /// Least-squares plane through the phase nodes of the 7x7 window, clamped
    /// to stay outside the phase. NaN when the window holds no phase node.
    void extend(const std::vector<char>& in, std::vector<double>& q, int i, int j) const {
        Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
        Eigen::Vector3d atb = Eigen::Vector3d::Zero();
        int count = 0;
        for (int dj = -band; dj <= band; ++dj)
            for (int di = -band; di <= band; ++di) {
                const int a = i + di, b = j + dj;
                if (a < 0 || b < 0 || a >= u_.nx() || b >= u_.ny() || !in[lin(a, b)]) continue;
                const Eigen::Vector3d row(1.0, di, dj);
                ata += row * row.transpose();
                atb += row * q[lin(a, b)];
                ++count;
            }
        if (count == 0) return;
        // tiny ridge on the slopes keeps collinear stencils solvable
        ata(1, 1) += 1e-9;
        ata(2, 2) += 1e-9;
        const Eigen::Vector3d c = ata.ldlt().solve(atb);
        const double v = c(0);
        q[lin(i, j)] = std::isfinite(v) ? std::max(v, DBL_MIN) : DBL_MIN;
    }

    /// Nodal gradients with ENO stencil choice: central unless the central
    /// second difference signals a kink, then the smoother one-sided formula.
    void nodal_gradients(const std::vector<double>& q, std::vector<Vec2>& g, std::vector<double>& g2) const {
        const int nx = u_.nx(), ny = u_.ny();
        const double h = u_.h();
        g.assign(q.size(), Vec2{0.0, 0.0});
        g2.assign(q.size(), 0.0);
        auto deriv = [&](int i, int j, int di, int dj) {
            auto val = [&](int k, double& out) {
                const int a = i + k * di, b = j + k * dj;
                if (a < 0 || b < 0 || a >= nx || b >= ny) return false;
                out = q[lin(a, b)];
                return std::isfinite(out);
            };
            double q0 = 0, m1 = 0, p1 = 0, m2 = 0, p2 = 0;
            val(0, q0);
            const bool hm1 = val(-1, m1), hp1 = val(1, p1);
            const bool hm2 = hm1 && val(-2, m2), hp2 = hp1 && val(2, p2);
            if (hm1 && hp1) {
                const double dc = std::abs(p1 - 2 * q0 + m1);
                const double db = hm2 ? std::abs(q0 - 2 * m1 + m2) : std::numeric_limits<double>::infinity();
                const double df = hp2 ? std::abs(p2 - 2 * p1 + q0) : std::numeric_limits<double>::infinity();
                if (!(hm2 || hp2) || dc <= 2 * std::min(db, df)) return (p1 - m1) / (2 * h);
                if (db <= df) return (3 * q0 - 4 * m1 + m2) / (2 * h);
                return (-3 * q0 + 4 * p1 - p2) / (2 * h);
            }
            if (hm1) return hm2 ? (3 * q0 - 4 * m1 + m2) / (2 * h) : (q0 - m1) / h;
            if (hp1) return hp2 ? (-3 * q0 + 4 * p1 - p2) / (2 * h) : (p1 - q0) / h;
            return 0.0;
        };
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                if (!std::isfinite(q[lin(i, j)])) continue;
                const Vec2 v{deriv(i, j, 1, 0), deriv(i, j, 0, 1)};
                g[lin(i, j)] = v;
                g2[lin(i, j)] = dot(v, v);
            }
    }

    ScalarField u_;
    std::vector<double> us_;
    std::vector<double> q_[2];  // extended level, drives the gradients
    std::vector<double> lv_[2]; // level for the indicator
    std::vector<Vec2> g_[2];
    std::vector<double> g2_[2];
};

namespace detail {

/// Trapezoid over one closed ring of n samples of (level, integrand) where
/// the region is {level < 0}; crossings are located by linear interpolation.
inline double ring_sum(const std::vector<double>& qv, const std::vector<double>& fv, int n, double dt) {
    double sum = 0.0;
    for (int m = 0; m < n; ++m) {
        const int m1 = m + 1 == n ? 0 : m + 1;
        const double qa = qv[m], qb = qv[m1];
        const bool ia = qa < 0.0, ib = qb < 0.0;
        if (ia && ib) {
            sum += 0.5 * (fv[m] + fv[m1]) * dt;
        } else if (ia != ib) {
            const double t = qa / (qa - qb);
            double fa = fv[m], fb = fv[m1];
            if (!std::isfinite(fa)) fa = fb;
            if (!std::isfinite(fb)) fb = fa;
            const double fc = fa + t * (fb - fa);
            sum += ia ? 0.5 * (fa + fc) * t * dt : 0.5 * (fc + fb) * (1 - t) * dt;
        }
    }
    return sum;
}

} // namespace detail

/// Integral of f over {level < 0} on the circle of radius r (arc length included).
/// NaN levels count as outside.
template <class L, class F>
double level_circle_quadrature(L&& level, F&& f, Vec2 center, double r, int n_theta = default_n_theta) {
    const double dt = 2 * pi / n_theta;
    std::vector<double> qv(n_theta), fv(n_theta);
    for (int m = 0; m < n_theta; ++m) {
        const Vec2 p = center + from_polar(r, -pi + m * dt);
        const double q = level(p);
        qv[m] = std::isfinite(q) ? q : 1.0;
        fv[m] = std::isfinite(q) ? f(p) : std::numeric_limits<double>::quiet_NaN();
    }
    return detail::ring_sum(qv, fv, n_theta, dt) * r;
}

/// Integral of f over {level < 0} inside B_r(center). Each quadrature ring
/// locates the region boundary between theta nodes, so an indicator jump is
/// integrated to second order instead of contributing an O(dtheta) error.
template <class L, class F>
double level_ball_quadrature(L&& level, F&& f, Vec2 center, double r, int n_rho, int n_theta = default_n_theta) {
    const double dr = r / n_rho;
    double total = 0.0;
    for (int k = 0; k < n_rho; ++k) total += level_circle_quadrature(level, f, center, (k + 0.5) * dr, n_theta);
    return total * dr;
}

/// Integral over the phase region inside B_r(center) of an integrand f that
/// is smooth up to the interface.
template <class F>
double phase_ball_integral(const PhasedField& pf, Phase ph, F&& f, Vec2 center, double r, int n_rho = 0,
                           int n_theta = default_n_theta) {
    detail::require_inside(pf.field(), center, r, "ball");
    if (n_rho <= 0) n_rho = default_n_rho(r, pf.h());
    return level_ball_quadrature([&](Vec2 p) { return pf.level(ph, p); }, f, center, r, n_rho, n_theta);
}

/// Same, restricted further to the half plane below (side < 0) or above (side > 0) height.
template <class F>
double phase_ball_integral_clipped(const PhasedField& pf, Phase ph, F&& f, Vec2 center, double r, int side,
                                   double height, int n_rho = 0, int n_theta = default_n_theta) {
    detail::require_inside(pf.field(), center, r, "ball");
    if (n_rho <= 0) n_rho = default_n_rho(r, pf.h());
    const double s = side < 0 ? 1.0 : -1.0;
    auto level = [&](Vec2 p) { return std::max(pf.level(ph, p), s * (p.y - height)); };
    return level_ball_quadrature(level, f, center, r, n_rho, n_theta);
}

/// Trapezoid circle integral of f over the phase arc (same crossing treatment).
template <class F>
double phase_circle_integral(const PhasedField& pf, Phase ph, F&& f, Vec2 center, double r,
                             int n_theta = default_n_theta) {
    detail::require_inside(pf.field(), center, r, "circle");
    return level_circle_quadrature([&](Vec2 p) { return pf.level(ph, p); }, f, center, r, n_theta);
}

/// Gravity weights of the functional relative to a reference height.
inline double weight_above(Vec2 p, double height) { return std::max(p.y - height, 0.0); }
inline double weight_below(Vec2 p, double height) { return std::max(height - p.y, 0.0); }

/// Weight of a phase: (x2 - height)^+ for the positive phase, (height - x2)^+ for the negative one.
inline double phase_weight(Phase ph, Vec2 p, double height) {
    return ph == Phase::positive ? weight_above(p, height) : weight_below(p, height);
}

// ---------------------------------------------------------------------------
// level sets

struct Polyline {
    std::vector<Vec2> vertices;
    bool closed = false;
};

/// Marching squares on the phase level function: the boundary of {u<0}
/// (negative) or {u>0} (positive). Each polyline is one connected component.
inline std::vector<Polyline> extract_level_set(const PhasedField& pf, Phase ph) {
    const ScalarField& u = pf.field();
    const int nx = u.nx(), ny = u.ny();
    // edge ids: horizontal edge (i,j)-(i+1,j) -> 2*(j*nx+i); vertical (i,j)-(i,j+1) -> 2*(j*nx+i)+1
    auto hid = [&](int i, int j) { return 2L * (static_cast<long>(j) * nx + i); };
    auto vid = [&](int i, int j) { return 2L * (static_cast<long>(j) * nx + i) + 1; };
    std::map<long, Vec2> point;
    std::map<long, std::vector<long>> adj;
    auto q = [&](int i, int j) { return pf.level_node(ph, i, j); };
    auto in = [&](double v) { return std::isfinite(v) && v < 0.0; };
    auto crossing = [&](int i0, int j0, int i1, int j1) {
        double a = q(i0, j0), b = q(i1, j1);
        if (!std::isfinite(a)) a = 1.0;
        if (!std::isfinite(b)) b = 1.0;
        const double t = std::clamp(a / (a - b), 0.0, 1.0);
        const Vec2 pa = u.node(i0, j0), pb = u.node(i1, j1);
        return pa + (pb - pa) * t;
    };
    auto link = [&](long a, long b) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    };
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            const double v00 = q(i, j), v10 = q(i + 1, j), v11 = q(i + 1, j + 1), v01 = q(i, j + 1);
            const bool b00 = in(v00), b10 = in(v10), b11 = in(v11), b01 = in(v01);
            // edges in counterclockwise order: bottom, right, top, left
            const long e[4] = {hid(i, j), vid(i + 1, j), hid(i, j + 1), vid(i, j)};
            const bool cut[4] = {b00 != b10, b10 != b11, b01 != b11, b00 != b01};
            std::vector<int> c;
            for (int k = 0; k < 4; ++k)
                if (cut[k]) {
                    c.push_back(k);
                    if (!point.count(e[k])) {
                        if (k == 0) point[e[k]] = crossing(i, j, i + 1, j);
                        if (k == 1) point[e[k]] = crossing(i + 1, j, i + 1, j + 1);
                        if (k == 2) point[e[k]] = crossing(i, j + 1, i + 1, j + 1);
                        if (k == 3) point[e[k]] = crossing(i, j, i, j + 1);
                    }
                }
            if (c.size() == 2) {
                link(e[c[0]], e[c[1]]);
            } else if (c.size() == 4) {
                // saddle: decide by the cell-center value
                const double center = 0.25 * ((std::isfinite(v00) ? v00 : 1) + (std::isfinite(v10) ? v10 : 1) +
                                              (std::isfinite(v11) ? v11 : 1) + (std::isfinite(v01) ? v01 : 1));
                if ((center < 0.0) == b00) {
                    link(e[0], e[1]);
                    link(e[2], e[3]);
                } else {
                    link(e[0], e[3]);
                    link(e[1], e[2]);
                }
            }
        }

    std::vector<Polyline> out;
    std::map<long, bool> used;
    auto walk = [&](long start) {
        Polyline pl;
        long prev = -1, cur = start;
        while (true) {
            used[cur] = true;
            const Vec2 p = point[cur];
            if (pl.vertices.empty() || norm(p - pl.vertices.back()) > 1e-12 * u.h()) pl.vertices.push_back(p);
            long next = -1;
            for (long n : adj[cur])
                if (n != prev && !used[n]) {
                    next = n;
                    break;
                }
            if (next < 0) {
                for (long n : adj[cur])
                    if (n == start && n != prev && pl.vertices.size() > 2) pl.closed = true;
                break;
            }
            prev = cur;
            cur = next;
        }
        if (pl.closed && pl.vertices.size() > 1 && norm(pl.vertices.front() - pl.vertices.back()) <= 1e-12 * u.h())
            pl.vertices.pop_back();
        return pl;
    };
    for (const auto& [id, nb] : adj)
        if (nb.size() == 1 && !used[id]) out.push_back(walk(id));
    for (const auto& [id, nb] : adj)
        if (!used[id]) out.push_back(walk(id));
    out.erase(std::remove_if(out.begin(), out.end(), [](const Polyline& p) { return p.vertices.size() < 2; }),
              out.end());
    return out;
}

// ---------------------------------------------------------------------------
// rescaling

/// Blowup rescaling u(x0 + r x) / r^kappa on a lattice over [-1,1]^2. The
/// whole bounding box of the unit ball must map inside the hull.
inline ScalarField rescale(const ScalarField& u, Vec2 x0, double r, double kappa, int n = 129) {
    if (!(kappa >= 1.0 && kappa <= 1.5)) throw error(errc::invalid_exponent, "rescale exponent must lie in [1, 3/2]");
    if (!(r > 0.0)) throw error(errc::invalid_argument, "rescale radius must be positive");
    if (n < 8) throw error(errc::invalid_argument, "rescale lattice too small");
    detail::require_inside(u, x0 + Vec2{-r, -r}, 0.0, "rescale box corner");
    detail::require_inside(u, x0 + Vec2{r, r}, 0.0, "rescale box corner");
    const double scale = std::pow(r, -kappa);
    const double hs = 2.0 / (n - 1);
    std::vector<double> v(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            Vec2 x{-1.0 + i * hs, -1.0 + j * hs};
            Vec2 y = x0 + x * r;
            y.x = std::clamp(y.x, u.lo().x, u.hi().x);
            y.y = std::clamp(y.y, u.lo().y, u.hi().y);
            v[static_cast<std::size_t>(j) * n + i] = sample(u, y) * scale;
        }
    return ScalarField({-1.0, -1.0}, hs, n, n, std::move(v), (u.datum() - x0.y) / r);
}

// ---------------------------------------------------------------------------
// I/O

/// Header line "nx ny h origin_x origin_y x2_0", then one row of values per line (row j = y index).
inline void write_field(std::ostream& os, const ScalarField& f) {
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    os << f.nx() << ' ' << f.ny() << ' ' << put(f.h()) << ' ' << put(f.origin().x) << ' ' << put(f.origin().y) << ' '
       << put(f.datum()) << '\n';
    for (int j = 0; j < f.ny(); ++j) {
        for (int i = 0; i < f.nx(); ++i) os << (i ? " " : "") << put(f.at(i, j));
        os << '\n';
    }
}

inline ScalarField read_field(std::istream& is) {
    // leading '#' lines are comments
    while (is >> std::ws && is.peek() == '#') is.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
    int nx = 0, ny = 0;
    double h = 0, ox = 0, oy = 0, d = 0;
    if (!(is >> nx >> ny >> h >> ox >> oy >> d)) throw error(errc::parse_error, "field header");
    if (nx <= 0 || ny <= 0 || static_cast<long>(nx) * ny > 100'000'000L)
        throw error(errc::parse_error, "field dimensions");
    std::vector<double> v(static_cast<std::size_t>(nx) * ny);
    for (auto& x : v)
        if (!(is >> x)) throw error(errc::parse_error, "field values truncated");
    return ScalarField({ox, oy}, h, nx, ny, std::move(v), d);
}

inline void write_polylines_csv(std::ostream& os, const std::vector<Polyline>& lines) {
    os << "polyline,closed,vertex,x,y\n";
    char buf[128];
    for (std::size_t k = 0; k < lines.size(); ++k)
        for (std::size_t m = 0; m < lines[k].vertices.size(); ++m) {
            std::snprintf(buf, sizeof buf, "%zu,%d,%zu,%.17g,%.17g\n", k, lines[k].closed ? 1 : 0, m,
                          lines[k].vertices[m].x, lines[k].vertices[m].y);
            os << buf;
        }
}

} // namespace ehd
