#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "finslerfill/distance.hpp"
#include "finslerfill/metric.hpp"

namespace finsler {

// Point of the cotangent bundle along a unit-speed geodesic:
// phi*(x,u) = 1 up to integrator drift.
struct PhaseState {
    Point2 x;
    Cov2 u;
};

enum class Termination { BoundaryHit, LengthCap };

struct Trajectory {
    std::vector<PhaseState> states;
    std::vector<double> arclength;
    Termination termination = Termination::LengthCap;

    Point2 end() const { return states.back().x; }
    double length() const { return arclength.back(); }
};

namespace detail {

// Hamiltonian H = (1/2) phi*(x,u)^2; trajectories of xdot = dH/du,
// udot = -dH/dx are unit-speed geodesics when phi*(u) = 1.
struct HamiltonianRhs {
    const Metric* m;

    void eval(Point2 x, Cov2 u, Vec2& xdot, Cov2& udot) const {
        xdot = m->legendre_inv(x, u);  // = phi* . grad_u phi*
        const double dx = 1e-5;
        double fp = m->dual({x.x + dx, x.y}, u);
        double fm = m->dual({x.x - dx, x.y}, u);
        double gp = m->dual({x.x, x.y + dx}, u);
        double gm = m->dual({x.x, x.y - dx}, u);
        double f = m->dual(x, u);
        udot = {-f * (fp - fm) / (2.0 * dx), -f * (gp - gm) / (2.0 * dx)};
    }
};

inline PhaseState rk4_step(const HamiltonianRhs& rhs, PhaseState s, double dt) {
    Vec2 k1x, k2x, k3x, k4x;
    Cov2 k1u, k2u, k3u, k4u;
    rhs.eval(s.x, s.u, k1x, k1u);
    rhs.eval(s.x + (dt / 2) * k1x, s.u + (dt / 2) * k1u, k2x, k2u);
    rhs.eval(s.x + (dt / 2) * k2x, s.u + (dt / 2) * k2u, k3x, k3u);
    rhs.eval(s.x + dt * k3x, s.u + dt * k3u, k4x, k4u);
    PhaseState out;
    out.x = s.x + (dt / 6) * (k1x + 2 * k2x + 2 * k3x + k4x);
    out.u = s.u + (dt / 6) * (k1u + 2 * k2u + 2 * k3u + k4u);
    return out;
}

}  // namespace detail

// Integrates the geodesic with initial velocity v (normalized internally)
// until it hits the boundary (crossing located by bisection) or reaches
// max_length. u is renormalized to U*_x after every step, which pins the
// trajectory to the level H = 1/2.
inline Trajectory shoot(const Metric& metric, Point2 x, Vec2 v, double step = 1e-3,
                        double max_length = 4.0) {
    require_in_disc(x);
    if (v.euclid_norm() == 0.0) throw std::invalid_argument("shoot: zero initial velocity");
    detail::HamiltonianRhs rhs{&metric};
    Trajectory traj;
    PhaseState s;
    s.x = x;
    s.u = metric.legendre(x, (1.0 / metric.phi(x, v)) * v);
    traj.states.push_back(s);
    traj.arclength.push_back(0.0);
    double t = 0.0;
    while (t < max_length) {
        double dt = std::min(step, max_length - t);
        PhaseState next = detail::rk4_step(rhs, s, dt);
        if (next.x.norm() >= 1.0) {
            // bisect the crossing in the step fraction
            double lo = 0.0, hi = dt;
            PhaseState hit = next;
            while (hi - lo > 1e-10) {
                double mid = 0.5 * (lo + hi);
                PhaseState trial = detail::rk4_step(rhs, s, mid);
                if (trial.x.norm() >= 1.0) {
                    hi = mid;
                    hit = trial;
                } else {
                    lo = mid;
                }
            }
            if (hi < 1e-13 && traj.states.size() > 1)
                throw std::runtime_error("shoot: step underflow near boundary tangency");
            double r = hit.x.norm();
            hit.x = {hit.x.x / r, hit.x.y / r};
            hit.u = (1.0 / metric.dual(hit.x, hit.u)) * hit.u;
            traj.states.push_back(hit);
            traj.arclength.push_back(t + hi);
            traj.termination = Termination::BoundaryHit;
            return traj;
        }
        next.u = (1.0 / metric.dual(next.x, next.u)) * next.u;
        t += dt;
        s = next;
        traj.states.push_back(s);
        traj.arclength.push_back(t);
    }
    traj.termination = Termination::LengthCap;
    return traj;
}

inline Vec2 velocity_at(const Metric& metric, const PhaseState& s) {
    return metric.legendre_inv(s.x, s.u);
}

// Initial unit velocity at x of the geodesic from x that hits the boundary
// at angle target (angle of the hit point). Solved by a coarse angular scan
// plus bisection on the boundary-hit angle; needs the hit angle to vary
// monotonically with the initial angle, which holds for metrics with
// minimal geodesics.
inline Vec2 aim_at_boundary(const Metric& metric, Point2 x, double target_angle,
                            double step = 4e-3, double angle_tol = 1e-4) {
    auto hit_angle = [&](double alpha) {
        Trajectory tr = shoot(metric, x, unit_dir(alpha), step, 6.0);
        Point2 e = tr.end();
        return std::atan2(e.y, e.x);
    };
    const int kScan = 24;
    double best_lo = 0.0, best_hi = 0.0;
    double prev_alpha = 0.0, prev_miss = angle_diff(hit_angle(0.0), target_angle);
    if (std::abs(prev_miss) < 1e-12) return unit_dir(0.0);
    bool found = false;
    for (int k = 1; k <= kScan && !found; ++k) {
        double alpha = kTwoPi * k / kScan;
        double miss = angle_diff(hit_angle(alpha), target_angle);
        // bracket where the signed miss changes sign through zero
        if (prev_miss <= 0.0 && miss >= 0.0 && miss - prev_miss < kPi) {
            best_lo = prev_alpha;
            best_hi = alpha;
            found = true;
        } else if (prev_miss >= 0.0 && miss <= 0.0 && prev_miss - miss < kPi) {
            best_lo = alpha;
            best_hi = prev_alpha;
            found = true;
        }
        prev_alpha = alpha;
        prev_miss = miss;
    }
    if (!found) throw std::runtime_error("aim_at_boundary: no bracket found");
    // bisection: miss(best_lo) <= 0 <= miss(best_hi)
    for (int it = 0; it < 60; ++it) {
        double mid = best_lo + 0.5 * angle_diff(best_hi, best_lo);
        double miss = angle_diff(hit_angle(mid), target_angle);
        if (std::abs(miss) < angle_tol) return unit_dir(mid);
        if (miss < 0.0)
            best_lo = mid;
        else
            best_hi = mid;
        if (std::abs(angle_diff(best_hi, best_lo)) < 1e-9) break;
    }
    return unit_dir(best_lo + 0.5 * angle_diff(best_hi, best_lo));
}

struct DirectionOptions {
    double shoot_step = 4e-3;
    bool prefer_gradient = true;
};

// Direction to y at x (initial velocity of the shortest path x -> y),
// from the gradient of the backward distance field when reliable, with
// a shooting fallback for boundary targets.
inline Vec2 direction_to(const Metric& metric, const DiscMesh& mesh, const StencilFitter& fitter,
                         int x_vertex, int y_vertex, const DirectionOptions& opt = {}) {
    Point2 x = mesh.vertices[x_vertex];
    Point2 y = mesh.vertices[y_vertex];
    if (opt.prefer_gradient) {
        auto f = backward_distance_field(mesh, y_vertex);
        Cov2 grad;
        double res;
        if (fitter.fit(f.values, x_vertex, grad, res) && res < 0.3 * mesh.h) {
            // -d(., y) is forward 1-Lipschitz with gradient L(->xy)
            Cov2 g{-grad.x, -grad.y};
            if (g.euclid_norm() > 0.0) {
                Vec2 v = metric.legendre_inv(x, g);
                return (1.0 / metric.phi(x, v)) * v;
            }
        }
    }
    if (!mesh.is_boundary(y_vertex))
        throw std::runtime_error("direction_to: gradient unreliable and target not on boundary");
    return aim_at_boundary(metric, x, std::atan2(y.y, y.x), opt.shoot_step);
}

// Direction from y at x (terminal velocity at x of the shortest path y -> x).
inline Vec2 direction_from(const Metric& metric, const DiscMesh& mesh, const StencilFitter& fitter,
                           int x_vertex, int y_vertex, const DirectionOptions& opt = {}) {
    Point2 x = mesh.vertices[x_vertex];
    if (opt.prefer_gradient) {
        auto f = forward_distance_field(mesh, y_vertex);
        Cov2 grad;
        double res;
        if (fitter.fit(f.values, x_vertex, grad, res) && res < 0.3 * mesh.h &&
            grad.euclid_norm() > 0.0) {
            Vec2 v = metric.legendre_inv(x, grad);
            return (1.0 / metric.phi(x, v)) * v;
        }
    }
    if (!metric.reversible())
        throw std::runtime_error(
            "direction_from: gradient unreliable; shooting fallback needs a reversible metric");
    if (!mesh.is_boundary(y_vertex))
        throw std::runtime_error("direction_from: gradient unreliable and source not on boundary");
    Point2 y = mesh.vertices[y_vertex];
    Vec2 to_y = aim_at_boundary(metric, x, std::atan2(y.y, y.x), opt.shoot_step);
    Vec2 v = -to_y;
    return (1.0 / metric.phi(x, v)) * v;
}

struct MinimalityAuditSample {
    Point2 start;
    Point2 end;
    double geodesic_length = 0.0;
    double graph_distance = 0.0;
    double excess = 0.0;  // geodesic_length - graph_distance - allowance
};

struct MinimalityAuditReport {
    double max_excess = -std::numeric_limits<double>::infinity();
    int samples = 0;
    int flagged = 0;
    bool passed = true;
    std::vector<MinimalityAuditSample> worst;
};

// Shoots random interior geodesics and compares their lengths with graph
// distances between their endpoints. A geodesic notably longer than the
// graph path is not minimal.
inline MinimalityAuditReport minimality_audit(const Metric& metric, const DiscMesh& mesh,
                                              int sample_budget = 40, unsigned seed = 2024,
                                              double step = 2e-3) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ur(0.0, 1.0);
    MinimalityAuditReport rep;

    auto nearest_vertex = [&](Point2 p) {
        // grid vertices are on the lattice; fall back to a scan near the boundary
        int best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (int v = 0; v < mesh.vertex_count(); ++v) {
            double d = (mesh.vertices[v] - p).euclid_norm();
            if (d < bd) {
                bd = d;
                best = v;
            }
        }
        return best;
    };

    for (int i = 0; i < sample_budget; ++i) {
        double r = 0.7 * std::sqrt(ur(rng));
        double a = kTwoPi * ur(rng);
        Point2 x{r * std::cos(a), r * std::sin(a)};
        Vec2 v = unit_dir(kTwoPi * ur(rng));
        double cap = 0.3 + 1.2 * ur(rng);
        Trajectory tr = shoot(metric, x, v, step, cap);
        Point2 y = tr.end();
        int xv = nearest_vertex(x), yv = nearest_vertex(y);
        if (xv == yv) continue;
        auto f = forward_distance_field(mesh, xv);
        double graph = f.values[yv];
        double len = tr.length();
        double allowance = mesh.distance_error(len) + 4.0 * mesh.h;
        MinimalityAuditSample s{x, y, len, graph, len - graph - allowance};
        rep.max_excess = std::max(rep.max_excess, s.excess);
        if (s.excess > 0.0) {
            ++rep.flagged;
            rep.worst.push_back(s);
        }
        ++rep.samples;
    }
    rep.passed = rep.flagged == 0;
    return rep;
}

}  // namespace finsler
