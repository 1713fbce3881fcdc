#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "finslerfill/vec.hpp"

namespace finsler {

// Gaussian multiplier bump for conformal factors:
// contributes amplitude * exp(-|x-center|^2 / (2 sigma^2)).
struct ConformalBump {
    double amplitude = 0.0;
    Point2 center;
    double sigma = 0.1;
};

enum class MetricFamily { Euclidean, Conformal, Randers, Minkowski };
enum class ConformalBase { Flat, Hemisphere };

// Parametric description of a Finsler metric family on the disc.
// All families satisfy positive 1-homogeneity, positivity and strict
// convexity of phi^2 on the closed disc; violations of the parameter
// ranges are rejected at construction.
struct MetricSpec {
    MetricFamily family = MetricFamily::Euclidean;
    double scale = 1.0;

    // Conformal family: factor(x) = scale * base(x) * (1 + sum of bumps).
    ConformalBase base = ConformalBase::Flat;
    std::vector<ConformalBump> bumps;

    // Randers family: phi(v) = scale*|v| + drift(v), |drift| < scale.
    Cov2 drift;

    // Minkowski family: phi(v) = ||frame * v||_p, p in (1, inf).
    double p = 2.0;
    double frame[2][2] = {{1.0, 0.0}, {0.0, 1.0}};

    std::string name = "euclidean";
};

inline MetricSpec euclidean_spec(double scale = 1.0) {
    MetricSpec s;
    s.family = MetricFamily::Euclidean;
    s.scale = scale;
    s.name = scale == 1.0 ? "euclidean" : "euclidean*" + std::to_string(scale);
    return s;
}

// Round hemisphere pulled back to the disc: factor 2/(1+|x|^2).
inline MetricSpec hemisphere_spec(double scale = 1.0) {
    MetricSpec s;
    s.family = MetricFamily::Conformal;
    s.base = ConformalBase::Hemisphere;
    s.scale = scale;
    s.name = "hemisphere";
    return s;
}

inline MetricSpec conformal_bump_spec(ConformalBase base, std::vector<ConformalBump> bumps,
                                      double scale = 1.0, std::string name = "conformal") {
    MetricSpec s;
    s.family = MetricFamily::Conformal;
    s.base = base;
    s.bumps = std::move(bumps);
    s.scale = scale;
    s.name = std::move(name);
    return s;
}

inline MetricSpec randers_spec(Cov2 drift, double scale = 1.0) {
    MetricSpec s;
    s.family = MetricFamily::Randers;
    s.drift = drift;
    s.scale = scale;
    s.name = "randers";
    return s;
}

inline MetricSpec minkowski_spec(double p, double f00 = 1.0, double f01 = 0.0,
                                 double f10 = 0.0, double f11 = 1.0) {
    MetricSpec s;
    s.family = MetricFamily::Minkowski;
    s.p = p;
    s.frame[0][0] = f00;
    s.frame[0][1] = f01;
    s.frame[1][0] = f10;
    s.frame[1][1] = f11;
    {
        std::ostringstream os;
        os << "minkowski-p" << p;
        s.name = os.str();
    }
    return s;
}

// A Finsler metric phi on the disc together with its dual norm phi*,
// the Legendre transform and its inverse. Evaluation formulas extend
// smoothly slightly past the boundary so that finite differences at
// boundary points stay well defined; domain checks live at the API
// entry points that take user input.
class Metric {
  public:
    explicit Metric(MetricSpec spec) : spec_(std::move(spec)) { validate_spec(); }

    const MetricSpec& spec() const { return spec_; }
    const std::string& name() const { return spec_.name; }

    bool reversible() const {
        return !(spec_.family == MetricFamily::Randers &&
                 (spec_.drift.x != 0.0 || spec_.drift.y != 0.0));
    }

    // Conformal factor lambda(x); 1 for non-conformal families.
    double factor(Point2 x) const {
        if (spec_.family != MetricFamily::Conformal) return spec_.scale;
        double f = spec_.base == ConformalBase::Hemisphere
                       ? 2.0 / (1.0 + x.x * x.x + x.y * x.y)
                       : 1.0;
        double mult = 1.0;
        for (const auto& b : spec_.bumps) {
            double dx = x.x - b.center.x, dy = x.y - b.center.y;
            mult += b.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
        }
        return spec_.scale * f * mult;
    }

    // phi_x(v), positively 1-homogeneous in v.
    double phi(Point2 x, Vec2 v) const {
        switch (spec_.family) {
            case MetricFamily::Euclidean:
                return spec_.scale * v.euclid_norm();
            case MetricFamily::Conformal:
                return factor(x) * v.euclid_norm();
            case MetricFamily::Randers:
                return spec_.scale * v.euclid_norm() + pair(spec_.drift, v);
            case MetricFamily::Minkowski: {
                double w1 = spec_.frame[0][0] * v.x + spec_.frame[0][1] * v.y;
                double w2 = spec_.frame[1][0] * v.x + spec_.frame[1][1] * v.y;
                return pnorm(w1, w2, spec_.p);
            }
        }
        return 0.0;
    }

    // Gradient of phi_x in v (0-homogeneous); v must be nonzero.
    Cov2 grad_v(Point2 x, Vec2 v) const {
        double n = v.euclid_norm();
        if (n == 0.0) throw std::invalid_argument("grad_v: zero vector");
        switch (spec_.family) {
            case MetricFamily::Euclidean:
                return {spec_.scale * v.x / n, spec_.scale * v.y / n};
            case MetricFamily::Conformal: {
                double lam = factor(x);
                return {lam * v.x / n, lam * v.y / n};
            }
            case MetricFamily::Randers:
                return {spec_.scale * v.x / n + spec_.drift.x,
                        spec_.scale * v.y / n + spec_.drift.y};
            case MetricFamily::Minkowski: {
                double w1 = spec_.frame[0][0] * v.x + spec_.frame[0][1] * v.y;
                double w2 = spec_.frame[1][0] * v.x + spec_.frame[1][1] * v.y;
                double np = pnorm(w1, w2, spec_.p);
                double g1 = psign(w1, spec_.p) / std::pow(np, spec_.p - 1.0);
                double g2 = psign(w2, spec_.p) / std::pow(np, spec_.p - 1.0);
                return {spec_.frame[0][0] * g1 + spec_.frame[1][0] * g2,
                        spec_.frame[0][1] * g1 + spec_.frame[1][1] * g2};
            }
        }
        return {};
    }

    // Dual norm phi*_x(u) = sup { u(v) : phi_x(v) = 1 }, closed form per family.
    double dual(Point2 x, Cov2 u) const {
        switch (spec_.family) {
            case MetricFamily::Euclidean:
                return u.euclid_norm() / spec_.scale;
            case MetricFamily::Conformal:
                return u.euclid_norm() / factor(x);
            case MetricFamily::Randers: {
                // maximize u(v) over |v|*s + b(v) <= 1; the multiplier mu
                // solves mu^2 (1-|B|^2) + 2 mu (U.B) - |U|^2 = 0 with
                // U = u/s, B = b/s, and phi*(u) = mu.
                double s = spec_.scale;
                double Ux = u.x / s, Uy = u.y / s;
                double Bx = spec_.drift.x / s, By = spec_.drift.y / s;
                double ub = Ux * Bx + Uy * By;
                double b2 = Bx * Bx + By * By;
                double u2 = Ux * Ux + Uy * Uy;
                return (-ub + std::sqrt(ub * ub + (1.0 - b2) * u2)) / (1.0 - b2);
            }
            case MetricFamily::Minkowski: {
                // dual of ||F v||_p is ||F^{-T} u||_q, q = p/(p-1).
                double w1 = inv_t_[0][0] * u.x + inv_t_[0][1] * u.y;
                double w2 = inv_t_[1][0] * u.x + inv_t_[1][1] * u.y;
                return pnorm(w1, w2, q());
            }
        }
        return 0.0;
    }

    // Gradient of phi*_x in u (0-homogeneous); u must be nonzero.
    Vec2 grad_u_dual(Point2 x, Cov2 u) const {
        double n = u.euclid_norm();
        if (n == 0.0) throw std::invalid_argument("grad_u_dual: zero covector");
        switch (spec_.family) {
            case MetricFamily::Euclidean:
                return {u.x / (spec_.scale * n), u.y / (spec_.scale * n)};
            case MetricFamily::Conformal: {
                double lam = factor(x);
                return {u.x / (lam * n), u.y / (lam * n)};
            }
            case MetricFamily::Randers: {
                // central differences on the closed-form dual
                double h = 1e-6 * n;
                double gx = (dual(x, {u.x + h, u.y}) - dual(x, {u.x - h, u.y})) / (2.0 * h);
                double gy = (dual(x, {u.x, u.y + h}) - dual(x, {u.x, u.y - h})) / (2.0 * h);
                return {gx, gy};
            }
            case MetricFamily::Minkowski: {
                double w1 = inv_t_[0][0] * u.x + inv_t_[0][1] * u.y;
                double w2 = inv_t_[1][0] * u.x + inv_t_[1][1] * u.y;
                double qq = q();
                double nq = pnorm(w1, w2, qq);
                double g1 = psign(w1, qq) / std::pow(nq, qq - 1.0);
                double g2 = psign(w2, qq) / std::pow(nq, qq - 1.0);
                return {inv_t_[0][0] * g1 + inv_t_[1][0] * g2,
                        inv_t_[0][1] * g1 + inv_t_[1][1] * g2};
            }
        }
        return {};
    }

    // Legendre transform, extended norm-preservingly to all of T_x D \ 0:
    // for v on the unit sphere it is the unique u with u(v)=1, phi*(u)=1.
    Cov2 legendre(Point2 x, Vec2 v) const {
        if (v.euclid_norm() == 0.0) throw std::invalid_argument("legendre: zero vector");
        return phi(x, v) * grad_v(x, v);
    }

    Vec2 legendre_inv(Point2 x, Cov2 u) const {
        if (u.euclid_norm() == 0.0) throw std::invalid_argument("legendre_inv: zero covector");
        return dual(x, u) * grad_u_dual(x, u);
    }

  private:
    static double pnorm(double a, double b, double p) {
        a = std::abs(a);
        b = std::abs(b);
        double m = std::max(a, b);
        if (m == 0.0) return 0.0;
        return m * std::pow(std::pow(a / m, p) + std::pow(b / m, p), 1.0 / p);
    }

    static double psign(double a, double p) {
        double s = a < 0.0 ? -1.0 : 1.0;
        return s * std::pow(std::abs(a), p - 1.0);
    }

    double q() const { return spec_.p / (spec_.p - 1.0); }

    void validate_spec() {
        if (!(spec_.scale > 0.0)) throw std::invalid_argument("metric scale must be positive");
        switch (spec_.family) {
            case MetricFamily::Euclidean:
                break;
            case MetricFamily::Conformal: {
                for (const auto& b : spec_.bumps)
                    if (!(b.sigma > 0.0)) throw std::invalid_argument("bump sigma must be positive");
                // the factor must stay positive on the closed disc
                for (int i = -20; i <= 20; ++i)
                    for (int j = -20; j <= 20; ++j) {
                        Point2 x{i / 20.0, j / 20.0};
                        if (!in_closed_disc(x, 1e-12)) continue;
                        if (factor(x) <= 0.0)
                            throw std::invalid_argument("conformal factor not positive on the disc");
                    }
                break;
            }
            case MetricFamily::Randers:
                if (spec_.drift.euclid_norm() >= spec_.scale)
                    throw std::invalid_argument("randers drift must satisfy |b| < scale");
                break;
            case MetricFamily::Minkowski: {
                if (!(spec_.p > 1.0) || !std::isfinite(spec_.p))
                    throw std::invalid_argument("minkowski exponent requires p > 1");
                double det = spec_.frame[0][0] * spec_.frame[1][1] -
                             spec_.frame[0][1] * spec_.frame[1][0];
                if (std::abs(det) < 1e-12)
                    throw std::invalid_argument("minkowski frame must be invertible");
                // inverse transpose of the frame
                inv_t_[0][0] = spec_.frame[1][1] / det;
                inv_t_[0][1] = -spec_.frame[1][0] / det;
                inv_t_[1][0] = -spec_.frame[0][1] / det;
                inv_t_[1][1] = spec_.frame[0][0] / det;
                break;
            }
        }
    }

    MetricSpec spec_;
    double inv_t_[2][2] = {{1.0, 0.0}, {0.0, 1.0}};
};

// ---- spec-level operations -------------------------------------------------

inline double eval_phi(const Metric& m, Point2 x, Vec2 v) {
    require_in_disc(x);
    return m.phi(x, v);
}

// 1-D maximization of u(v) over the angle parameterization of U_x.
// Coarse scan plus golden-section refinement; tolerance in theta.
inline double dual_norm_search(const Metric& m, Point2 x, Cov2 u,
                               double theta_tol = 1e-10, int max_iter = 200) {
    auto g = [&](double t) {
        Vec2 e = unit_dir(t);
        return (u.x * e.x + u.y * e.y) / m.phi(x, e);
    };
    const int kScan = 64;
    int best = 0;
    double best_val = g(0.0);
    for (int k = 1; k < kScan; ++k) {
        double val = g(kTwoPi * k / kScan);
        if (val > best_val) {
            best_val = val;
            best = k;
        }
    }
    double a = kTwoPi * (best - 1) / kScan;
    double b = kTwoPi * (best + 1) / kScan;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = g(c), fd = g(d);
    int it = 0;
    while (b - a > theta_tol) {
        if (++it > max_iter)
            throw std::runtime_error("dual_norm_search: maximizer failed to converge");
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = g(d);
        }
    }
    return g(0.5 * (a + b));
}

// Maximizing unit vector of the search above (the contact point on U_x).
inline Vec2 dual_norm_argmax(const Metric& m, Point2 x, Cov2 u, double theta_tol = 1e-10) {
    auto g = [&](double t) {
        Vec2 e = unit_dir(t);
        return (u.x * e.x + u.y * e.y) / m.phi(x, e);
    };
    const int kScan = 64;
    int best = 0;
    double best_val = g(0.0);
    for (int k = 1; k < kScan; ++k) {
        double val = g(kTwoPi * k / kScan);
        if (val > best_val) {
            best_val = val;
            best = k;
        }
    }
    double a = kTwoPi * (best - 1) / kScan;
    double b = kTwoPi * (best + 1) / kScan;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = g(c), fd = g(d);
    while (b - a > theta_tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = g(d);
        }
    }
    double t = 0.5 * (a + b);
    Vec2 e = unit_dir(t);
    double n = m.phi(x, e);
    return {e.x / n, e.y / n};
}

inline double dual_norm(const Metric& m, Point2 x, Cov2 u) {
    require_in_disc(x);
    return m.dual(x, u);
}

// Unit sphere U_x sampled at m Euclidean angles, radially solved:
// r(theta) = 1 / phi(x, e(theta)). Positively ordered by construction.
inline std::vector<Vec2> unit_sphere_polygon(const Metric& m, Point2 x, int count) {
    if (count < 4) throw std::invalid_argument("unit_sphere_polygon: need at least 4 vertices");
    std::vector<Vec2> verts(count);
    for (int k = 0; k < count; ++k) {
        Vec2 e = unit_dir(kTwoPi * k / count);
        double r = 1.0 / m.phi(x, e);
        verts[k] = {r * e.x, r * e.y};
    }
    return verts;
}

// Legendre images of the unit sphere polygon; lies on U*_x, same cyclic order.
inline std::vector<Cov2> unit_cosphere_polygon(const Metric& m, Point2 x, int count) {
    auto sphere = unit_sphere_polygon(m, x, count);
    std::vector<Cov2> verts(sphere.size());
    for (size_t k = 0; k < sphere.size(); ++k) verts[k] = m.legendre(x, sphere[k]);
    return verts;
}

template <class V>
inline double shoelace_area(const std::vector<V>& poly) {
    double s = 0.0;
    size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        const V& a = poly[i];
        const V& b = poly[(i + 1) % n];
        s += a.x * b.y - a.y * b.x;
    }
    return 0.5 * s;
}

// |B_x|: inscribed-polygon area of the unit ball (under-approximation).
inline double ball_area(const Metric& m, Point2 x, int count) {
    return shoelace_area(unit_sphere_polygon(m, x, count));
}

// |B*_x|: inscribed-polygon area of the unit co-ball (under-approximation,
// so downstream lower bounds err on the safe side).
inline double coball_area(const Metric& m, Point2 x, int count) {
    return shoelace_area(unit_cosphere_polygon(m, x, count));
}

// L_phi of the oriented straight segment a->b, Gauss-Legendre quadrature.
// Orientation matters for non-reversible metrics.
inline double segment_length(const Metric& m, Point2 a, Point2 b, int order = 5) {
    require_in_disc(a);
    require_in_disc(b);
    Vec2 d = b - a;
    if (d.euclid_norm() == 0.0) return 0.0;
    // nodes/weights on [0,1]
    static const double n3[] = {0.1127016653792583, 0.5, 0.8872983346207417};
    static const double w3[] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    static const double n5[] = {0.04691007703066800, 0.23076534494715845, 0.5,
                                0.76923465505284155, 0.95308992296933200};
    static const double w5[] = {0.11846344252809454, 0.23931433524968324, 0.28444444444444444,
                                0.23931433524968324, 0.11846344252809454};
    const double* nodes = order >= 5 ? n5 : n3;
    const double* weights = order >= 5 ? w5 : w3;
    int k = order >= 5 ? 5 : 3;
    double s = 0.0;
    for (int i = 0; i < k; ++i) {
        Point2 x{a.x + nodes[i] * d.x, a.y + nodes[i] * d.y};
        s += weights[i] * m.phi(x, d);
    }
    return s;
}

struct MetricValidationReport {
    double worst_homogeneity = 0.0;
    double worst_positivity = 1.0;     // min of phi over unit Euclidean vectors
    double worst_convexity = 1.0;      // min second difference of phi^2 along U_x
    double worst_duality = 0.0;        // max |u(v)-1| for v in U_x, u = L(v)
    int samples = 0;
    bool passed = false;
};

// Samples points and directions; checks homogeneity, positivity, strict
// convexity of phi^2 via second finite differences, and the duality pairing.
inline MetricValidationReport validate_metric(const Metric& m, int sample_budget = 2000,
                                              unsigned seed = 12345) {
    MetricValidationReport rep;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ur(0.0, 1.0);
    const double eps = 1e-4;
    for (int i = 0; i < sample_budget; ++i) {
        double r = std::sqrt(ur(rng));
        double a = kTwoPi * ur(rng);
        Point2 x{r * std::cos(a), r * std::sin(a)};
        double th = kTwoPi * ur(rng);
        Vec2 v = unit_dir(th);
        double t = 0.1 + 10.0 * ur(rng);
        double f = m.phi(x, v);
        rep.worst_positivity = std::min(rep.worst_positivity, f);
        rep.worst_homogeneity =
            std::max(rep.worst_homogeneity, std::abs(m.phi(x, t * v) - t * f) / t);
        // strict convexity of phi^2 along a chord through v on U_x
        Vec2 v0 = (1.0 / f) * v;
        Vec2 w = unit_dir(th + kPi / 2.0);
        auto phi2 = [&](Vec2 z) {
            double p = m.phi(x, z);
            return p * p;
        };
        double second = phi2(v0 + eps * w) - 2.0 * phi2(v0) + phi2(v0 - eps * w);
        rep.worst_convexity = std::min(rep.worst_convexity, second / (eps * eps));
        // duality pairing
        Cov2 u = m.legendre(x, v0);
        rep.worst_duality = std::max(
            {rep.worst_duality, std::abs(pair(u, v0) - 1.0), std::abs(m.dual(x, u) - 1.0)});
        ++rep.samples;
    }
    rep.passed = rep.worst_homogeneity < 1e-9 && rep.worst_positivity > 0.0 &&
                 rep.worst_convexity > 0.0 && rep.worst_duality < 1e-6;
    return rep;
}

}  // namespace finsler
