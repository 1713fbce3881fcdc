#pragma once

#include <cmath>
#include <stdexcept>

namespace finsler {

// Point of the closed unit disc, coordinates (x1,x2).
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    double norm() const { return std::hypot(x, y); }
};

// Tangent vector components at some base point.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    double euclid_norm() const { return std::hypot(x, y); }
};

// Covector (linear functional on tangent vectors) components.
struct Cov2 {
    double x = 0.0;
    double y = 0.0;

    double euclid_norm() const { return std::hypot(x, y); }
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double t, Vec2 v) { return {t * v.x, t * v.y}; }
inline Vec2 operator-(Vec2 v) { return {-v.x, -v.y}; }

inline Cov2 operator+(Cov2 a, Cov2 b) { return {a.x + b.x, a.y + b.y}; }
inline Cov2 operator-(Cov2 a, Cov2 b) { return {a.x - b.x, a.y - b.y}; }
inline Cov2 operator*(double t, Cov2 u) { return {t * u.x, t * u.y}; }
inline Cov2 operator-(Cov2 u) { return {-u.x, -u.y}; }

inline Point2 operator+(Point2 p, Vec2 v) { return {p.x + v.x, p.y + v.y}; }
inline Vec2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }

// Natural pairing u(v).
inline double pair(Cov2 u, Vec2 v) { return u.x * v.x + u.y * v.y; }

inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double cross(Cov2 a, Cov2 b) { return a.x * b.y - a.y * b.x; }

inline double angle_of(Vec2 v) { return std::atan2(v.y, v.x); }
inline double angle_of(Cov2 u) { return std::atan2(u.y, u.x); }

inline Vec2 unit_dir(double theta) { return {std::cos(theta), std::sin(theta)}; }

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

// Reduce to [0, 2*pi).
inline double wrap_angle(double t) {
    t = std::fmod(t, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    return t;
}

// Signed angular separation in (-pi, pi].
inline double angle_diff(double a, double b) {
    double d = wrap_angle(a - b);
    if (d > kPi) d -= kTwoPi;
    return d;
}

constexpr double kDiscBoundaryTol = 1e-9;

inline bool in_closed_disc(Point2 p, double tol = kDiscBoundaryTol) {
    return p.x * p.x + p.y * p.y <= 1.0 + tol;
}

inline void require_in_disc(Point2 p) {
    if (!in_closed_disc(p))
        throw std::domain_error("point outside the closed unit disc");
}

}  // namespace finsler
