#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "finslerfill/cyclic.hpp"

namespace finsler {

// ---- round boundary data ----------------------------------------------------

struct RoundBoundaryI {
    double closed_form = 0.0;
    double numeric = 0.0;
};

// I of the map f_i = arc distance from p_i = 2*pi*i/n on the round circle.
// Closed form 2*pi*(1 - 2/n); the numeric route samples the traces on a
// grid containing every breakpoint (multiples of pi/n), where the
// piecewise-linear shoelace is exact.
inline RoundBoundaryI round_boundary_I(int n, int min_samples = 1024) {
    if (n < 3) throw std::invalid_argument("round_boundary_I: n >= 3 required");
    RoundBoundaryI out;
    out.closed_form = kTwoPi * (1.0 - 2.0 / n);
    int K = 2 * n;
    while (K < min_samples) K += 2 * n;
    auto arc_dist = [](double a, double b) {
        double d = std::abs(angle_diff(a, b));
        return d;
    };
    std::vector<std::vector<double>> traces(n, std::vector<double>(K));
    for (int i = 0; i < n; ++i) {
        double pi_angle = kTwoPi * i / n;
        for (int k = 0; k < K; ++k) traces[i][k] = arc_dist(kTwoPi * k / K, pi_angle);
    }
    out.numeric = I_boundary(traces).value;
    return out;
}

// ---- real projective plane from a disc --------------------------------------

// The projective plane here is the disc with antipodal boundary points
// identified; sigma is the boundary involution theta -> theta + pi.
// The metric descends when it is sigma-compatible along the boundary.

struct PuHypothesesReport {
    double boundary_length = 0.0;
    double antipodal_worst = 0.0;   // max |d(b_k, b_{k+nb/2}) - pi|
    double arc_worst = 0.0;         // max |d(b_j, b_k) - arc length(b_j..b_k)|
    double glue_worst = 0.0;        // worst chord-length mismatch under sigma
    bool sigma_compatible = false;
    bool passed = false;
};

namespace detail {

inline double sigma_glue_mismatch(const DiscMesh& mesh) {
    const auto& loop = mesh.boundary_loop;
    int nb = static_cast<int>(loop.size());
    int half = nb / 2;
    // chord lengths live in the ring edges; compare k -> k+s with its
    // antipodal image for every stored chord step
    double worst = 0.0;
    for (int k = 0; k < nb; ++k) {
        int a = loop[k];
        int a2 = loop[(k + half) % nb];
        for (int e = mesh.adj_start[a]; e < mesh.adj_start[a + 1]; ++e) {
            int b = mesh.adj[e].to;
            if (!mesh.is_boundary(b)) continue;
            int kb = b - mesh.interior_count;
            int step = kb - (a - mesh.interior_count);
            int b2 = mesh.interior_count + (((a2 - mesh.interior_count + step) % nb) + nb) % nb;
            for (int e2 = mesh.adj_start[a2]; e2 < mesh.adj_start[a2 + 1]; ++e2)
                if (mesh.adj[e2].to == b2)
                    worst = std::max(worst, std::abs(mesh.adj[e].len - mesh.adj[e2].len));
        }
    }
    return worst;
}

}  // namespace detail

// Checks the normalization that makes the ratio test meaningful: round
// boundary data (length 2*pi, antipodal distance pi, arcs realize the
// distance) and a sigma-compatible gluing.
inline PuHypothesesReport verify_pu_hypotheses(const Metric& metric, const DiscMesh& mesh,
                                               int probe_count = 16) {
    PuHypothesesReport rep;
    rep.boundary_length = mesh.boundary_length(metric);
    rep.glue_worst = detail::sigma_glue_mismatch(mesh);
    rep.sigma_compatible = rep.glue_worst <= 1e-6;

    const auto& loop = mesh.boundary_loop;
    int nb = static_cast<int>(loop.size());
    int half = nb / 2;
    // arc lengths accumulated along the ring
    std::vector<double> cum(nb + 1, 0.0);
    for (int k = 0; k < nb; ++k) {
        Point2 a = mesh.vertices[loop[k]];
        Point2 b = mesh.vertices[loop[(k + 1) % nb]];
        cum[k + 1] = cum[k] + segment_length(metric, a, b);
    }
    int stride = std::max(1, nb / probe_count);
    for (int k = 0; k < nb; k += stride) {
        auto f = forward_distance_field(mesh, loop[k]);
        rep.antipodal_worst =
            std::max(rep.antipodal_worst, std::abs(f.values[loop[(k + half) % nb]] - kPi));
        for (int s = 1; s <= half; s += stride) {
            double arc = cum[k + s > nb ? nb : k + s] - cum[k];
            if (k + s > nb) arc += cum[(k + s) % nb];
            double arc_cyc = std::min(arc, rep.boundary_length - arc);
            rep.arc_worst =
                std::max(rep.arc_worst, std::abs(f.values[loop[(k + s) % nb]] - arc_cyc));
        }
    }
    double tol = mesh.distance_error(kPi) + 0.05;
    rep.passed = rep.sigma_compatible && std::abs(rep.boundary_length - kTwoPi) < tol &&
                 rep.antipodal_worst < tol && rep.arc_worst < tol;
    return rep;
}

// Double cover of the projective plane: two copies of the disc glued along
// the boundary through sigma. Shared boundary node k carries sheet-0 point
// theta_k and sheet-1 point theta_k + pi; the deck involution maps shared
// node k to k + nb/2.
struct Rp2Cover {
    int nv = 0;
    int shared_base = 0;  // shared boundary nodes start here
    int nb = 0;
    std::vector<int> adj_start;
    std::vector<DirectedEdge> adj;
};

inline Rp2Cover build_rp2_cover(const DiscMesh& mesh) {
    if (detail::sigma_glue_mismatch(mesh) > 1e-6)
        throw std::runtime_error("build_rp2_cover: gluing mismatch, metric not sigma-compatible");
    Rp2Cover c;
    int ni = mesh.interior_count;
    c.nb = static_cast<int>(mesh.boundary_loop.size());
    int half = c.nb / 2;
    c.shared_base = 2 * ni;
    c.nv = 2 * ni + c.nb;
    // sheet: 0 or 1; interior v -> sheet*ni + v; boundary ring index k ->
    // shared_base + k on sheet 0, shared_base + (k + half) mod nb on sheet 1
    auto lift = [&](int sheet, int v) {
        if (v < ni) return sheet * ni + v;
        int k = v - ni;
        if (sheet == 1) k = (k + half) % c.nb;
        return c.shared_base + k;
    };
    std::vector<std::vector<DirectedEdge>> out(c.nv);
    for (int sheet = 0; sheet < 2; ++sheet)
        for (int a = 0; a < mesh.vertex_count(); ++a)
            for (int e = mesh.adj_start[a]; e < mesh.adj_start[a + 1]; ++e) {
                int la = lift(sheet, a);
                int lb = lift(sheet, mesh.adj[e].to);
                out[la].push_back({lb, mesh.adj[e].len});
            }
    c.adj_start.assign(c.nv + 1, 0);
    for (int v = 0; v < c.nv; ++v) c.adj_start[v + 1] = c.adj_start[v] + (int)out[v].size();
    c.adj.resize(c.adj_start[c.nv]);
    for (int v = 0; v < c.nv; ++v)
        std::copy(out[v].begin(), out[v].end(), c.adj.begin() + c.adj_start[v]);
    return c;
}

struct SystoleResult {
    double systole = 0.0;
    int argmin_boundary_index = -1;
};

// Shortest noncontractible loop. Every such loop meets the image of the
// boundary circle (its complement is an open disc), so it suffices to
// minimize d_cover(s, deck(s)) over shared boundary nodes s. A stride > 1
// subsamples the sources; the minimizing loop is metrication-stable, so a
// small stride loses at most one ring step of accuracy.
inline SystoleResult systole_rp2(const Metric& metric, const DiscMesh& mesh, int stride = 4) {
    if (!metric.reversible())
        throw std::invalid_argument("systole_rp2: reversible metrics only");
    Rp2Cover c = build_rp2_cover(mesh);
    int half = c.nb / 2;
    SystoleResult res;
    res.systole = std::numeric_limits<double>::infinity();
    // reversibility collapses k and k + half into the same loop
    for (int k = 0; k < half; k += stride) {
        auto dist = detail::dijkstra(c.adj_start, c.adj, c.nv, c.shared_base + k);
        double d = dist[c.shared_base + (k + half) % c.nb];
        if (d < res.systole) {
            res.systole = d;
            res.argmin_boundary_index = k;
        }
    }
    return res;
}

struct PuCheckResult {
    double area = 0.0;      // Holmes-Thompson area of the glued surface
    double systole = 0.0;
    double ratio = 0.0;     // area / ((2/pi) * systole^2); >= 1 expected
    PuHypothesesReport hypotheses;
    std::string verdict;
};

// Systolic ratio test on the projective plane built from the disc.
inline PuCheckResult pu_check(const Metric& metric, const DiscMesh& mesh, int stride = 4) {
    if (!metric.reversible())
        throw std::invalid_argument("pu_check: reversible metrics only");
    PuCheckResult res;
    res.hypotheses = verify_pu_hypotheses(metric, mesh);
    if (!res.hypotheses.sigma_compatible) {
        res.verdict = "inapplicable";
        return res;
    }
    res.area = ht_area(metric, mesh);
    res.systole = systole_rp2(metric, mesh, stride).systole;
    res.ratio = res.area / ((2.0 / kPi) * res.systole * res.systole);
    res.verdict = res.ratio >= 1.0 - 2.0 * mesh.metrication_rel - 4.0 * mesh.h ? "consistent"
                                                                               : "violated";
    return res;
}

}  // namespace finsler
