#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "finslerfill/distance.hpp"

namespace finsler {

// ---- circle bracket calculus ------------------------------------------------

// +1 iff (a,b,c) is positively cyclically ordered on the circle.
inline int bracket(double a, double b, double c) {
    double ab = wrap_angle(b - a);
    double ac = wrap_angle(c - a);
    if (ab < 1e-12 || ac < 1e-12 || std::abs(ab - ac) < 1e-12)
        throw std::invalid_argument("bracket: coincident points");
    return ab < ac ? 1 : -1;
}

struct BracketSuiteReport {
    int trials = 0;
    int failures = 0;
};

// Random quadruples: checks [abc]^2=1, skew-symmetry,
// [abc]=[abd][acd][bcd] and [abc][acd][abd]=[bcd].
inline BracketSuiteReport bracket_identity_suite(int trials, unsigned seed = 7) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ur(0.0, kTwoPi);
    BracketSuiteReport rep;
    for (int t = 0; t < trials; ++t) {
        double a = ur(rng), b = ur(rng), c = ur(rng), d = ur(rng);
        bool distinct = true;
        double pts[4] = {a, b, c, d};
        for (int i = 0; i < 4 && distinct; ++i)
            for (int j = i + 1; j < 4; ++j)
                if (std::abs(angle_diff(pts[i], pts[j])) < 1e-9) distinct = false;
        if (!distinct) continue;
        ++rep.trials;
        int abc = bracket(a, b, c);
        bool ok = abc * abc == 1;
        ok = ok && bracket(b, c, a) == abc && bracket(c, a, b) == abc;
        ok = ok && bracket(b, a, c) == -abc && bracket(a, c, b) == -abc &&
             bracket(c, b, a) == -abc;
        ok = ok && abc == bracket(a, b, d) * bracket(a, c, d) * bracket(b, c, d);
        ok = ok && abc * bracket(a, c, d) * bracket(a, b, d) == bracket(b, c, d);
        if (!ok) ++rep.failures;
    }
    return rep;
}

// Two labeled triples of boundary points (by angle).
struct CirclePointConfig {
    double p[3];
    double q[3];
};

struct OrderMatchVerdict {
    bool hypotheses_hold = false;
    bool orderings_match = false;
};

// Hypotheses: q_i != p_i, and {p_i,q_j} does not separate p_j from q_i
// (encoded as [p_i p_j q_j] = [p_i q_i q_j]); under them the cyclic
// orderings of the two triples must coincide.
inline OrderMatchVerdict order_match_oracle(const CirclePointConfig& cfg) {
    OrderMatchVerdict v;
    for (int i = 0; i < 3; ++i)
        if (std::abs(angle_diff(cfg.p[i], cfg.q[i])) < 1e-12) return v;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            if (i == j) continue;
            // four points involved must be distinct for the bracket encoding
            double pts[4] = {cfg.p[i], cfg.p[j], cfg.q[j], cfg.q[i]};
            for (int a = 0; a < 4; ++a)
                for (int b = a + 1; b < 4; ++b)
                    if (std::abs(angle_diff(pts[a], pts[b])) < 1e-12) return v;
            if (bracket(cfg.p[i], cfg.p[j], cfg.q[j]) != bracket(cfg.p[i], cfg.q[i], cfg.q[j]))
                return v;
        }
    v.hypotheses_hold = true;
    v.orderings_match = bracket(cfg.p[0], cfg.p[1], cfg.p[2]) ==
                        bracket(cfg.q[0], cfg.q[1], cfg.q[2]);
    return v;
}

// ---- convex hulls -----------------------------------------------------------

// Monotone-chain hull area; collinear input gives 0.
inline double convex_hull_area(std::vector<Cov2> pts) {
    size_t n = pts.size();
    if (n < 3) return 0.0;
    std::sort(pts.begin(), pts.end(), [](Cov2 a, Cov2 b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](Cov2 a, Cov2 b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    n = pts.size();
    if (n < 3) return 0.0;
    std::vector<Cov2> hull(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    size_t lower = k + 1;
    for (size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return std::abs(shoelace_area(hull));
}

// ---- cyclic map data --------------------------------------------------------

// n scalar fields on the mesh plus their boundary traces (the traces are
// captured at construction so I_boundary never reads interior values).
struct CyclicMapData {
    std::vector<std::vector<double>> fields;        // [i][vertex]
    std::vector<std::vector<double>> traces;        // [i][boundary loop index]
    std::vector<double> trace_error;                // metrication bar per field

    int n() const { return static_cast<int>(fields.size()); }
};

inline CyclicMapData make_cyclic_map_data(std::vector<std::vector<double>> fields,
                                          const DiscMesh& mesh,
                                          std::vector<double> trace_error = {}) {
    CyclicMapData d;
    d.fields = std::move(fields);
    size_t nl = mesh.boundary_loop.size();
    d.traces.resize(d.fields.size());
    for (size_t i = 0; i < d.fields.size(); ++i) {
        d.traces[i].resize(nl);
        for (size_t k = 0; k < nl; ++k) d.traces[i][k] = d.fields[i][mesh.boundary_loop[k]];
    }
    if (trace_error.empty()) trace_error.assign(d.fields.size(), 0.0);
    d.trace_error = std::move(trace_error);
    return d;
}

struct IBoundaryResult {
    double value = 0.0;
    double error_bar = 0.0;
};

// I(f) from boundary traces only: (1/2pi) * sum over i of the oriented
// shoelace area of the closed loop (f_i(s_k), f_{i+1}(s_k)). Exact for
// piecewise-linear traces.
inline IBoundaryResult I_boundary(const std::vector<std::vector<double>>& traces,
                                  const std::vector<double>& trace_error = {}) {
    int n = static_cast<int>(traces.size());
    if (n < 2) throw std::invalid_argument("I_boundary: need at least two fields");
    size_t nl = traces[0].size();
    if (nl < 3) throw std::invalid_argument("I_boundary: open or degenerate loop");
    IBoundaryResult out;
    for (int i = 0; i < n; ++i) {
        const auto& fx = traces[i];
        const auto& fy = traces[(i + 1) % n];
        if (fy.size() != nl) throw std::invalid_argument("I_boundary: trace size mismatch");
        double area = 0.0, perim = 0.0;
        for (size_t k = 0; k < nl; ++k) {
            size_t k1 = (k + 1) % nl;
            area += fx[k] * fy[k1] - fx[k1] * fy[k];
            perim += std::hypot(fx[k1] - fx[k], fy[k1] - fy[k]);
        }
        out.value += 0.5 * area;
        if (!trace_error.empty()) {
            double eps = std::max(trace_error[i], trace_error[(i + 1) % n]);
            out.error_bar += perim * eps + kPi * eps * eps;
        }
    }
    out.value /= kTwoPi;
    out.error_bar /= kTwoPi;
    return out;
}

inline IBoundaryResult I_boundary(const CyclicMapData& data) {
    return I_boundary(data.traces, data.trace_error);
}

struct IInteriorResult {
    double value = 0.0;
    double error_bar = 0.0;
    double excluded_area = 0.0;   // cell area with too few reliable gradients
    double used_area = 0.0;
    double max_norm_excess = 0.0; // max (phi*(grad) - 1)+ among used gradients
};

struct IInteriorOptions {
    GradientOptions gradient;
    int coball_count = 128;
    // a vertex participates when at least this fraction of its gradients
    // is reliable (and at least 3 of them); the hull of the reliable
    // subset under-approximates the full hull, a safe direction
    double min_reliable_fraction = 0.8;
    double max_excluded_fraction = 0.2;
};

// I(f) through the convex-hull formula: (1/pi) * sum over cells of
// |conv{d_x f_i}| * cell area, over cells whose owner vertex has enough
// reliable gradients. The bar covers excluded cells (hull <= |B*_x|)
// and the metrication inflation of gradient norms.
inline IInteriorResult I_interior(const Metric& metric, const CyclicMapData& data,
                                  const DiscMesh& mesh, const StencilFitter& fitter,
                                  const IInteriorOptions& opt = {}) {
    int n = data.n();
    if (n < 2) throw std::invalid_argument("I_interior: need at least two fields");
    std::vector<CovectorField> grads(n);
    for (int i = 0; i < n; ++i)
        grads[i] = gradient_field(data.fields[i], metric, mesh, fitter, opt.gradient);

    IInteriorResult out;
    int need = std::max(3, static_cast<int>(std::ceil(opt.min_reliable_fraction * n)));
    if (n == 2) need = 2;
    std::vector<Cov2> pts;
    double excluded_density_sum = 0.0;
    double total_area = 0.0;
    for (const auto& cell : mesh.cells) {
        total_area += cell.area;
        pts.clear();
        for (int i = 0; i < n; ++i)
            if (grads[i].reliable[cell.owner]) pts.push_back(grads[i].cov[cell.owner]);
        if (static_cast<int>(pts.size()) < need) {
            out.excluded_area += cell.area;
            excluded_density_sum += coball_area(metric, cell.eval, opt.coball_count) * cell.area;
            continue;
        }
        for (const auto& g : pts) {
            double excess = metric.dual(cell.eval, g) - 1.0;
            out.max_norm_excess = std::max(out.max_norm_excess, excess);
        }
        out.value += convex_hull_area(pts) * cell.area;
        out.used_area += cell.area;
    }
    out.value /= kPi;
    double inflation = (1.0 + std::max(out.max_norm_excess, 0.0));
    out.error_bar = excluded_density_sum / kPi + (inflation * inflation - 1.0) * out.value;
    if (out.excluded_area > opt.max_excluded_fraction * total_area)
        throw std::runtime_error("I_interior: too few reliable cells");
    return out;
}

struct CyclicCheckReport {
    int checked_vertices = 0;
    int norm_violations = 0;
    int order_violations = 0;
    int vertex_violations = 0;  // union of the two per vertex
    double violation_fraction = 1.0;
};

struct CyclicCheckOptions {
    GradientOptions gradient;           // residual gate only; norms checked here
    double distinct_angle_tol = 1e-9;   // merge covectors closer than this
    int triples_per_vertex = 300;       // sampled when C(n,3) exceeds it
    unsigned seed = 99;
};

// Checks Definitions of a cyclic map at sampled vertices:
// (1) phi*(d_x f_i) = 1 within the metrication window,
// (2) positive cyclic order on U*_x for sampled index triples i<j<k with
//     pairwise-distinct gradients.
inline CyclicCheckReport check_cyclic(const Metric& metric, const CyclicMapData& data,
                                      const DiscMesh& mesh, const StencilFitter& fitter,
                                      CyclicCheckOptions opt = {}) {
    int n = data.n();
    opt.gradient.check_unit_norm = false;  // norms are scored, not gated, here
    std::vector<CovectorField> grads(n);
    for (int i = 0; i < n; ++i)
        grads[i] = gradient_field(data.fields[i], metric, mesh, fitter, opt.gradient);

    double lo = 1.0 - norm_tol_low(mesh, opt.gradient);
    double hi = 1.0 + norm_tol_high(mesh, opt.gradient);

    long long total_triples = (long long)n * (n - 1) * (n - 2) / 6;
    bool exhaustive = total_triples <= opt.triples_per_vertex;
    std::mt19937_64 rng(opt.seed);
    std::uniform_int_distribution<int> pick(0, n - 1);

    CyclicCheckReport rep;
    std::vector<double> theta(n);
    for (int v = 0; v < mesh.interior_count; ++v) {
        bool all_reliable = true;
        for (int i = 0; i < n && all_reliable; ++i) all_reliable = grads[i].reliable[v];
        if (!all_reliable) continue;

        // a dual norm below the window marks a slope break (gradients of a
        // max of 1-Lipschitz fields average inward there), so the vertex is
        // skipped as a cut-locus point; above the window the covector left
        // the dual ball, which no kink can cause, and that is a violation
        bool norm_ok = true, at_kink = false;
        for (int i = 0; i < n; ++i) {
            double nm = metric.dual(mesh.vertices[v], grads[i].cov[v]);
            if (nm < lo) at_kink = true;
            if (nm > hi) norm_ok = false;
            theta[i] = wrap_angle(angle_of(grads[i].cov[v]));
        }
        if (at_kink) continue;
        ++rep.checked_vertices;
        if (!norm_ok) ++rep.norm_violations;

        auto distinct = [&](int a, int b) {
            return std::abs(angle_diff(theta[a], theta[b])) > opt.distinct_angle_tol;
        };
        bool order_ok = true;
        auto test_triple = [&](int i, int j, int k) {
            if (!(distinct(i, j) && distinct(j, k) && distinct(i, k))) return;
            if (bracket(theta[i], theta[j], theta[k]) != 1) order_ok = false;
        };
        if (n >= 3) {
            if (exhaustive) {
                for (int i = 0; i < n && order_ok; ++i)
                    for (int j = i + 1; j < n && order_ok; ++j)
                        for (int k = j + 1; k < n && order_ok; ++k) test_triple(i, j, k);
            } else {
                for (int t = 0; t < opt.triples_per_vertex && order_ok; ++t) {
                    int i = pick(rng), j = pick(rng), k = pick(rng);
                    if (i == j || j == k || i == k) continue;
                    int a = std::min({i, j, k}), c = std::max({i, j, k});
                    int b = i + j + k - a - c;
                    test_triple(a, b, c);
                }
            }
        }
        if (!order_ok) ++rep.order_violations;
        if (!norm_ok || !order_ok) ++rep.vertex_violations;
    }
    rep.violation_fraction = rep.checked_vertices == 0
                                 ? 1.0
                                 : double(rep.vertex_violations) / double(rep.checked_vertices);
    return rep;
}

}  // namespace finsler
