#pragma once

#include <cmath>
#include <numbers>

namespace ehd {

inline constexpr double pi = std::numbers::pi;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

/// Row-major 2x2 matrix; used for Jacobians of test vector fields.
struct Mat2 {
    double a11 = 0.0, a12 = 0.0;
    double a21 = 0.0, a22 = 0.0;

    constexpr Vec2 operator*(Vec2 v) const { return {a11 * v.x + a12 * v.y, a21 * v.x + a22 * v.y}; }
    constexpr double trace() const { return a11 + a22; }
};

/// Polar coordinates with theta in [-pi, pi).
struct Polar {
    double rho = 0.0;
    double theta = 0.0;
};

/// Maps any angle into [-pi, pi).
inline double wrap_angle(double theta) {
    double t = std::fmod(theta + pi, 2.0 * pi);
    if (t < 0.0) t += 2.0 * pi;
    double out = t - pi;
    if (out >= pi) out -= 2.0 * pi;
    return out;
}

inline Polar to_polar(Vec2 p) {
    double th = std::atan2(p.y, p.x);
    // atan2 returns +pi on the negative x axis; fold it into the half-open range
    if (th >= pi) th -= 2.0 * pi;
    return {std::hypot(p.x, p.y), th};
}

inline Vec2 from_polar(double rho, double theta) { return {rho * std::cos(theta), rho * std::sin(theta)}; }

} // namespace ehd
