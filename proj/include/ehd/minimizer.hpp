#pragma once
//
// minimizer.hpp
//
// Discrete local minimization of the two-phase functional on a rectangle
// with fixed boundary values. The smoothed lattice energy is
//     E_eps(u) = sum_edges (u_a - u_b)^2 + h^2 sum_nodes (w+ S_eps(u) + w- S_eps(-u))
// with S_eps(t) = clamp(t/eps, 0, 1), w+ = (x2 - x2^0)^+, w- = (x2^0 - x2)^+.
// Each node update minimizes the energy exactly in that node's value (the
// local energy is piecewise quadratic), so every sweep is monotone. An
// over-relaxed step is kept only when it does not raise the local energy.
//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <vector>

#include "error.hpp"
#include "field.hpp"

namespace ehd {

enum class StepRule { fixed, backtracking };

struct MinimizeParams {
    std::vector<double> eps_schedule; // empty: default_eps_schedule(h)
    int max_sweeps = 4000;  // per eps stage
    double tol = 1e-10;     // largest nodal update that counts as stationary
    StepRule step_rule = StepRule::backtracking;
    double omega = 0.0;     // over-relaxation; 0 picks the optimal Laplace value
    std::uint64_t seed = 1;
    double noise = -1.0;    // initial noise amplitude; negative means h
};

/// Lattice for the minimizer.
struct Grid {
    Vec2 lo{};
    double h = 1.0;
    int nx = 0, ny = 0;

    /// [-half, half]^2 with the given number of cells per side.
    static Grid square(double half, int cells) { return {{-half, -half}, 2 * half / cells, cells + 1, cells + 1}; }
    Vec2 node(int i, int j) const { return {lo.x + i * h, lo.y + j * h}; }
};

struct MinimizeResult {
    ScalarField field;
    std::vector<double> energy_history; // one entry per sweep, plus the initial energy of each stage
    std::vector<std::size_t> stage_start; // index of each stage's first entry
    std::vector<int> stage_sweeps;
    bool converged = false;
    std::vector<Polyline> fb; // boundary of the negative phase
};

/// Minimization failure carrying the history up to the failure.
class minimize_error : public error {
public:
    minimize_error(errc c, const std::string& what, std::vector<double> history)
        : error(c, what), history_(std::move(history)) {}
    const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

/// 0.1, 0.1/sqrt(10), ... down to the floor h^2.
inline std::vector<double> default_eps_schedule(double h) {
    std::vector<double> s;
    const double floor = h * h;
    for (double e = 0.1; e > floor * 1.5; e /= std::sqrt(10.0)) s.push_back(e);
    s.push_back(floor);
    return s;
}

namespace detail {

inline double smooth_step(double t, double eps) { return std::clamp(t / eps, 0.0, 1.0); }

/// Lattice values with the node-local energy machinery.
struct Lattice {
    Grid g;
    double x20 = 0.0;
    std::vector<double> u;
    std::vector<double> wp, wm; // h^2 w+, h^2 w-

    Lattice(const Grid& grid, double datum) : g(grid), x20(datum) {
        const std::size_t n = static_cast<std::size_t>(g.nx) * g.ny;
        u.assign(n, 0.0);
        wp.resize(n);
        wm.resize(n);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double y = g.node(i, j).y;
                wp[lin(i, j)] = g.h * g.h * std::max(y - x20, 0.0);
                wm[lin(i, j)] = g.h * g.h * std::max(x20 - y, 0.0);
            }
    }

    std::size_t lin(int i, int j) const { return static_cast<std::size_t>(j) * g.nx + i; }
    bool boundary(int i, int j) const { return i == 0 || j == 0 || i == g.nx - 1 || j == g.ny - 1; }

    double neighbor_mean(int i, int j) const {
        return 0.25 * (u[lin(i - 1, j)] + u[lin(i + 1, j)] + u[lin(i, j - 1)] + u[lin(i, j + 1)]);
    }

    /// Node-local energy up to a constant: 4 (v - mean)^2 + h^2 (w+ S(v) + w- S(-v)).
    static double local(double v, double mean, double wp, double wm, double eps) {
        const double d = v - mean;
        double e = 4 * d * d;
        if (eps > 0) {
            e += wp * smooth_step(v, eps) + wm * smooth_step(-v, eps);
        } else {
            e += (v > 0 ? wp : 0.0) + (v < 0 ? wm : 0.0);
        }
        return e;
    }

    /// Exact minimizer of the node-local energy.
    static double argmin(double mean, double wp, double wm, double eps) {
        double best = mean, fbest = local(mean, mean, wp, wm, eps);
        auto consider = [&](double v) {
            const double f = local(v, mean, wp, wm, eps);
            if (f < fbest) {
                fbest = f;
                best = v;
            }
        };
        // stationary points of each quadratic piece, clipped to the piece
        consider(std::clamp(mean + wm / (8 * eps), -eps, 0.0));
        consider(std::clamp(mean - wp / (8 * eps), 0.0, eps));
        consider(std::min(mean, -eps));
        consider(std::max(mean, eps));
        consider(-eps);
        consider(0.0);
        consider(eps);
        return best;
    }

    /// Smoothed energy (eps > 0) or the sharp one (eps == 0).
    double energy(double eps) const {
        double e = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double v = u[lin(i, j)];
                if (i + 1 < g.nx) e += (v - u[lin(i + 1, j)]) * (v - u[lin(i + 1, j)]);
                if (j + 1 < g.ny) e += (v - u[lin(i, j + 1)]) * (v - u[lin(i, j + 1)]);
                if (eps > 0)
                    e += wp[lin(i, j)] * smooth_step(v, eps) + wm[lin(i, j)] * smooth_step(-v, eps);
                else
                    e += (v > 0 ? wp[lin(i, j)] : 0.0) + (v < 0 ? wm[lin(i, j)] : 0.0);
            }
        return e;
    }

    /// One red-black sweep; returns the largest update.
    double sweep(double eps, double omega, StepRule rule) {
        double change = 0.0;
        for (int color = 0; color < 2; ++color)
            for (int j = 1; j + 1 < g.ny; ++j)
                for (int i = 1 + ((j + 1 + color) & 1); i + 1 < g.nx; i += 2) {
                    const std::size_t k = lin(i, j);
                    const double m = neighbor_mean(i, j);
                    const double old = u[k];
                    double v = argmin(m, wp[k], wm[k], eps);
                    if (omega != 1.0) {
                        const double relaxed = old + omega * (v - old);
                        if (rule == StepRule::fixed ||
                            local(relaxed, m, wp[k], wm[k], eps) <= local(old, m, wp[k], wm[k], eps))
                            v = relaxed;
                    }
                    change = std::max(change, std::abs(v - old));
                    u[k] = v;
                }
        return change;
    }

    ScalarField to_field() const { return ScalarField(g.lo, g.h, g.nx, g.ny, u, x20); }
};

inline double optimal_omega(const Grid& g) {
    const double s = std::sin(pi / std::max(g.nx - 1, g.ny - 1));
    return 2.0 / (1.0 + s);
}

/// Discrete harmonic extension into the nodes flagged in mask (SOR sweeps).
inline void solve_laplace(std::vector<double>& u, const Grid& g, const std::vector<char>& mask, double tol,
                          int max_sweeps) {
    const double omega = optimal_omega(g);
    auto at = [&](int i, int j) -> double& { return u[static_cast<std::size_t>(j) * g.nx + i]; };
    for (int s = 0; s < max_sweeps; ++s) {
        double change = 0.0;
        for (int color = 0; color < 2; ++color)
            for (int j = 1; j + 1 < g.ny; ++j)
                for (int i = 1 + ((j + 1 + color) & 1); i + 1 < g.nx; i += 2) {
                    if (!mask[static_cast<std::size_t>(j) * g.nx + i]) continue;
                    const double m = 0.25 * (at(i - 1, j) + at(i + 1, j) + at(i, j - 1) + at(i, j + 1));
                    const double d = omega * (m - at(i, j));
                    at(i, j) += d;
                    change = std::max(change, std::abs(d));
                }
        if (!std::isfinite(change)) throw error(errc::numerical_failure, "non-finite value in Laplace solve");
        if (change <= tol) return;
    }
    throw error(errc::inner_solver_failed, "Laplace solve did not reach tolerance");
}

} // namespace detail

/// Replaces the masked values by the discrete harmonic extension of the rest.
/// The mask is row-major over the lattice and must avoid the outer ring.
inline ScalarField harmonic_replace(const ScalarField& u, const std::vector<char>& mask, double tol = 1e-12,
                                    int max_sweeps = 100000) {
    if (mask.size() != u.values().size()) throw error(errc::invalid_argument, "mask size does not match the field");
    for (int j = 0; j < u.ny(); ++j)
        for (int i = 0; i < u.nx(); ++i) {
            const bool edge = i == 0 || j == 0 || i == u.nx() - 1 || j == u.ny() - 1;
            if (edge && mask[static_cast<std::size_t>(j) * u.nx() + i])
                throw error(errc::invalid_argument, "mask touches the lattice boundary");
        }
    if (std::none_of(mask.begin(), mask.end(), [](char c) { return c != 0; })) return u;
    std::vector<double> v = u.values();
    const Grid g{u.origin(), u.h(), u.nx(), u.ny()};
    detail::solve_laplace(v, g, mask, tol * std::max(1.0, u.max_abs()), max_sweeps);
    return ScalarField(u.origin(), u.h(), u.nx(), u.ny(), std::move(v), u.datum());
}

/// Minimizes from the boundary values of `trace` (interior values ignored).
inline MinimizeResult minimize(const ScalarField& trace, const MinimizeParams& params) {
    if (trace.nx() < 64 || trace.ny() < 64) throw error(errc::invalid_argument, "minimizer needs at least 64x64 nodes");
    const double h = trace.h();
    const std::vector<double> schedule =
        params.eps_schedule.empty() ? default_eps_schedule(h) : params.eps_schedule;
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        const double e = schedule[k];
        if (!(e > 0) || (k > 0 && !(e < schedule[k - 1])))
            throw error(errc::invalid_argument, "eps schedule must be positive and strictly decreasing");
    }
    if (schedule.back() < h * h * (1 - 1e-12)) throw error(errc::invalid_argument, "eps floor below h^2");
    if (!(params.tol > 0) || params.max_sweeps < 1) throw error(errc::invalid_argument, "bad tolerances");

    const Grid g{trace.origin(), h, trace.nx(), trace.ny()};
    detail::Lattice lat(g, trace.datum());
    std::vector<char> interior(lat.u.size(), 0);
    double bmax = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (lat.boundary(i, j)) {
                lat.u[lat.lin(i, j)] = trace.at(i, j);
                bmax = std::max(bmax, std::abs(trace.at(i, j)));
            } else {
                interior[lat.lin(i, j)] = 1;
            }
        }
    detail::solve_laplace(lat.u, g, interior, 1e-12 * std::max(1.0, bmax), 200000);

    std::mt19937_64 rng(params.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const double amp = params.noise >= 0 ? params.noise : h;
    for (int j = 1; j + 1 < g.ny; ++j)
        for (int i = 1; i + 1 < g.nx; ++i) lat.u[lat.lin(i, j)] += amp * dist(rng);

    const double omega = params.omega > 0 ? params.omega : detail::optimal_omega(g);
    MinimizeResult res;
    bool stationary = false;
    for (double eps : schedule) {
        res.stage_start.push_back(res.energy_history.size());
        double prev = lat.energy(eps);
        res.energy_history.push_back(prev);
        int sweeps = 0;
        stationary = false;
        while (sweeps < params.max_sweeps) {
            const double change = lat.sweep(eps, omega, params.step_rule);
            ++sweeps;
            const double e = lat.energy(eps);
            res.energy_history.push_back(e);
            if (!std::isfinite(e) || !std::isfinite(change))
                throw minimize_error(errc::numerical_failure, "non-finite energy", res.energy_history);
            if (e > prev + 1e-10 * (1 + std::abs(prev)))
                throw minimize_error(errc::diverged, "energy increased within a stage", res.energy_history);
            prev = e;
            if (change <= params.tol * std::max(1.0, bmax)) {
                stationary = true;
                break;
            }
        }
        res.stage_sweeps.push_back(sweeps);
    }
    res.converged = stationary;
    res.field = lat.to_field();
    res.fb = extract_level_set(PhasedField(res.field), Phase::negative);
    return res;
}

/// Minimizes on a grid with boundary values from a closed-form function.
template <class F>
    requires std::invocable<F, Vec2>
MinimizeResult minimize(const Grid& g, F&& boundary, double x2_0, const MinimizeParams& params) {
    return minimize(ScalarField::from_function(g.lo, g.h, g.nx, g.ny, std::forward<F>(boundary), x2_0), params);
}

/// Sharp lattice energy (eps -> 0) of a field.
inline double lattice_energy(const ScalarField& u, double x2_0) {
    detail::Lattice lat(Grid{u.origin(), u.h(), u.nx(), u.ny()}, x2_0);
    lat.u = u.values();
    return lat.energy(0.0);
}

/// Smoothed lattice energy of a field.
inline double lattice_energy(const ScalarField& u, double x2_0, double eps) {
    detail::Lattice lat(Grid{u.origin(), u.h(), u.nx(), u.ny()}, x2_0);
    lat.u = u.values();
    return lat.energy(eps);
}

struct PerturbationReport {
    double energy = 0.0;
    double min_delta = std::numeric_limits<double>::infinity();
    std::vector<double> deltas;
};

/// Energy change under random smooth bumps a s (1 - |x-c|^2/R^2)^2 with random
/// centre, radius and sign, supported away from the lattice boundary. eps = 0
/// uses the sharp lattice energy.
inline PerturbationReport local_perturbation_test(const ScalarField& u, double x2_0, int trials, double amplitude,
                                                  std::uint64_t seed = 1, double eps = 0.0) {
    detail::Lattice lat(Grid{u.origin(), u.h(), u.nx(), u.ny()}, x2_0);
    lat.u = u.values();
    PerturbationReport rep;
    rep.energy = lat.energy(eps);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Vec2 lo = u.lo(), hi = u.hi();
    const double extent = std::min(hi.x - lo.x, hi.y - lo.y);
    const double h = u.h();
    for (int t = 0; t < trials; ++t) {
        const double r = 4 * h + (0.25 * extent - 4 * h) * unit(rng);
        const Vec2 c{lo.x + h + r + (hi.x - lo.x - 2 * (h + r)) * unit(rng),
                     lo.y + h + r + (hi.y - lo.y - 2 * (h + r)) * unit(rng)};
        const double s = unit(rng) < 0.5 ? -1.0 : 1.0;
        detail::Lattice p = lat;
        for (int j = 1; j + 1 < u.ny(); ++j)
            for (int i = 1; i + 1 < u.nx(); ++i) {
                const Vec2 d = u.node(i, j) - c;
                const double q = dot(d, d) / (r * r);
                if (q < 1) p.u[p.lin(i, j)] += s * amplitude * (1 - q) * (1 - q);
            }
        const double delta = p.energy(eps) - rep.energy;
        rep.deltas.push_back(delta);
        rep.min_delta = std::min(rep.min_delta, delta);
    }
    return rep;
}

inline void write_energy_csv(std::ostream& os, const MinimizeResult& r) {
    os << "index,stage,energy\n";
    char buf[96];
    std::size_t stage = 0;
    for (std::size_t k = 0; k < r.energy_history.size(); ++k) {
        while (stage + 1 < r.stage_start.size() && k >= r.stage_start[stage + 1]) ++stage;
        std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g\n", k, stage, r.energy_history[k]);
        os << buf;
    }
}

} // namespace ehd
