#pragma once

#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "finslerfill/mesh.hpp"

namespace finsler {

enum class FieldDirection { FromSource, ToTarget };

// Scalar field d(source,.) or d(.,target) on mesh vertices.
// Graph distances over-estimate the true d_phi (paths are restricted
// to the stencil), which keeps downstream lower bounds conservative.
struct DistanceField {
    FieldDirection direction = FieldDirection::FromSource;
    int anchor = -1;  // source or target vertex id
    std::vector<double> values;
    double error_estimate = 0.0;  // metrication bar at the largest value
};

namespace detail {

inline std::vector<double> dijkstra(const std::vector<int>& start,
                                    const std::vector<DirectedEdge>& edges, int nv, int source) {
    std::vector<double> dist(nv, std::numeric_limits<double>::infinity());
    // (distance, vertex id): ties broken lexicographically for determinism
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    dist[source] = 0.0;
    pq.push({0.0, source});
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > dist[v]) continue;
        for (int e = start[v]; e < start[v + 1]; ++e) {
            double nd = d + edges[e].len;
            int w = edges[e].to;
            if (nd < dist[w]) {
                dist[w] = nd;
                pq.push({nd, w});
            }
        }
    }
    return dist;
}

// One corrective pass over the graph distances: shortest paths may enter v
// between two stencil directions, so the value is relaxed against linear
// interpolation along each angularly adjacent upwind neighbor pair. This
// removes most of the polygonal metrication bias (and its gradient-direction
// error); values may then undershoot d_phi by O(h^2), which the additive
// term of the distance error bar absorbs.
inline void eikonal_correct(const DiscMesh& mesh, bool forward, std::vector<double>& d) {
    const Metric& metric = mesh.metric;
    const auto& start = forward ? mesh.radj_start : mesh.adj_start;
    const auto& edges = forward ? mesh.radj : mesh.adj;
    int nv = mesh.vertex_count();
    std::vector<int> order(nv);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return d[a] < d[b] || (d[a] == d[b] && a < b);
    });
    std::vector<std::pair<double, int>> nb;  // (angle around v, neighbor)
    // neighbors are paired within radius bands so interpolation chords stay
    // straight; mixing lattice radii gives crooked chords and larger error
    const double bands[4] = {1.6, 2.6, 3.7, 100.0};
    for (int v : order) {
        if (!std::isfinite(d[v]) || d[v] == 0.0) continue;
        Point2 xv = mesh.vertices[v];
        auto leg = [&](Point2 z) {
            // one midpoint evaluation; exact enough at stencil scale
            Vec2 seg = forward ? xv - z : z - xv;
            Point2 mid{0.5 * (z.x + xv.x), 0.5 * (z.y + xv.y)};
            return metric.phi(mid, seg);
        };
        double best = d[v];
        for (int band = 0; band < 4; ++band) {
            double rlo = band ? bands[band - 1] * mesh.h : 0.0;
            double rhi = bands[band] * mesh.h;
            nb.clear();
            for (int e = start[v]; e < start[v + 1]; ++e) {
                int w = edges[e].to;
                if (d[w] >= d[v]) continue;  // upwind only
                Vec2 dir = mesh.vertices[w] - xv;
                double r = dir.euclid_norm();
                if (r <= rlo || r > rhi) continue;
                nb.emplace_back(angle_of(dir), w);
            }
            if (nb.size() < 2) continue;
            std::sort(nb.begin(), nb.end());
            for (size_t i = 0; i < nb.size(); ++i) {
                size_t j = (i + 1) % nb.size();
                double gap = wrap_angle(nb[j].first - nb[i].first);
                if (gap <= 0.0 || gap > 0.9 * kPi) continue;
                Point2 a = mesh.vertices[nb[i].second], b = mesh.vertices[nb[j].second];
                double da = d[nb[i].second], db = d[nb[j].second];
                auto val = [&](double t) {
                    Point2 z{(1 - t) * a.x + t * b.x, (1 - t) * a.y + t * b.y};
                    return (1 - t) * da + t * db + leg(z);
                };
                // three samples plus one parabolic refinement
                double f0 = val(0.0), f1 = val(0.5), f2 = val(1.0);
                best = std::min({best, f0, f1, f2});
                double denom = f0 - 2 * f1 + f2;
                if (denom > 1e-300) {
                    double ts = 0.5 + 0.25 * (f0 - f2) / denom;
                    if (ts > 0.0 && ts < 1.0) best = std::min(best, val(ts));
                }
            }
        }
        d[v] = best;
    }
}

}  // namespace detail

// Directed single-source shortest paths: d_phi(source, .) up to metrication.
inline DistanceField forward_distance_field(const DiscMesh& mesh, int source) {
    DistanceField f;
    f.direction = FieldDirection::FromSource;
    f.anchor = source;
    f.values = detail::dijkstra(mesh.adj_start, mesh.adj, mesh.vertex_count(), source);
    detail::eikonal_correct(mesh, true, f.values);
    double dmax = 0.0;
    for (double v : f.values) dmax = std::max(dmax, v);
    f.error_estimate = mesh.distance_error(dmax);
    return f;
}

// Same on the reversed graph: d_phi(., target).
inline DistanceField backward_distance_field(const DiscMesh& mesh, int target) {
    DistanceField f;
    f.direction = FieldDirection::ToTarget;
    f.anchor = target;
    f.values = detail::dijkstra(mesh.radj_start, mesh.radj, mesh.vertex_count(), target);
    detail::eikonal_correct(mesh, false, f.values);
    double dmax = 0.0;
    for (double v : f.values) dmax = std::max(dmax, v);
    f.error_estimate = mesh.distance_error(dmax);
    return f;
}

// n boundary vertices, cyclically ordered, equally spaced by Finsler
// arclength of the boundary loop (snapped to loop vertices).
inline std::vector<int> boundary_samples(const Metric& metric, const DiscMesh& mesh, int n) {
    if (n < 2) throw std::invalid_argument("boundary_samples: n >= 2 required");
    const auto& loop = mesh.boundary_loop;
    size_t nl = loop.size();
    std::vector<double> cum(nl + 1, 0.0);
    for (size_t i = 0; i < nl; ++i) {
        Point2 a = mesh.vertices[loop[i]];
        Point2 b = mesh.vertices[loop[(i + 1) % nl]];
        cum[i + 1] = cum[i] + segment_length(metric, a, b);
    }
    double total = cum[nl];
    std::vector<int> samples(n);
    size_t j = 0;
    for (int k = 0; k < n; ++k) {
        double target = total * k / n;
        while (j + 1 < nl && cum[j + 1] < target) ++j;
        // nearest of loop[j], loop[j+1]
        size_t pick = (target - cum[j] <= cum[j + 1] - target) ? j : (j + 1) % nl;
        samples[k] = loop[pick];
    }
    return samples;
}

struct BoundaryDistanceMatrix {
    std::vector<int> sample_vertices;
    std::vector<std::vector<double>> d;  // d[i][j] = graph distance p_i -> p_j
};

inline BoundaryDistanceMatrix boundary_distance_matrix(const Metric& metric, const DiscMesh& mesh,
                                                       int n) {
    if (n < 3) throw std::invalid_argument("boundary_distance_matrix: n >= 3 required");
    BoundaryDistanceMatrix bd;
    bd.sample_vertices = boundary_samples(metric, mesh, n);
    bd.d.assign(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) {
        auto f = forward_distance_field(mesh, bd.sample_vertices[i]);
        for (int j = 0; j < n; ++j) bd.d[i][j] = f.values[bd.sample_vertices[j]];
    }
    return bd;
}

// Covector per vertex with a reliability flag (cut-locus proxy).
struct CovectorField {
    std::vector<Cov2> cov;
    std::vector<bool> reliable;
    std::vector<double> residual;  // rms of the affine fit
};

// Per-vertex least-squares quadratic stencils; geometry-only, so one fitter
// serves every scalar field on the mesh. The quadratic terms absorb field
// curvature that would otherwise bias the gradient on one-sided stencils
// near the boundary ring.
class StencilFitter {
  public:
    static constexpr int kBasis = 6;  // 1, dx, dy, dx^2, dxdy, dy^2 (in units of h)

    explicit StencilFitter(const DiscMesh& mesh) : mesh_(&mesh) {
        int nv = mesh.vertex_count();
        row_start_.assign(nv + 1, 0);
        ok_.assign(nv, false);
        for (int v = 0; v < nv; ++v) {
            int k = mesh.nbr_start[v + 1] - mesh.nbr_start[v] + 1;
            row_start_[v + 1] = row_start_[v] + kBasis * k;
        }
        pinv_.assign(row_start_[nv], 0.0);
        for (int v = 0; v < nv; ++v) build_vertex(v);
    }

    // Quadratic fit of the field over the stencil of v.
    // Returns the gradient + rms residual; ok=false when the stencil is rank
    // deficient (never happens on a valid mesh interior).
    bool fit(const std::vector<double>& field, int v, Cov2& grad, double& residual_rms) const {
        if (!ok_[v]) return false;
        const DiscMesh& mesh = *mesh_;
        int k = mesh.nbr_start[v + 1] - mesh.nbr_start[v] + 1;
        const double* P = &pinv_[row_start_[v]];
        double c[kBasis] = {};
        for (int i = 0; i < k; ++i) {
            int w = i == 0 ? v : mesh.nbrs[mesh.nbr_start[v] + i - 1];
            double f = field[w];
            for (int a = 0; a < kBasis; ++a) c[a] += P[a * k + i] * f;
        }
        grad = {c[1] / mesh.h, c[2] / mesh.h};
        double ss = 0.0;
        Point2 x0 = mesh.vertices[v];
        for (int i = 0; i < k; ++i) {
            int w = i == 0 ? v : mesh.nbrs[mesh.nbr_start[v] + i - 1];
            Vec2 d = (1.0 / mesh.h) * (mesh.vertices[w] - x0);
            double pred = c[0] + c[1] * d.x + c[2] * d.y + c[3] * d.x * d.x +
                          c[4] * d.x * d.y + c[5] * d.y * d.y;
            double e = field[w] - pred;
            ss += e * e;
        }
        residual_rms = std::sqrt(ss / k);
        return true;
    }

  private:
    void build_vertex(int v) {
        const DiscMesh& mesh = *mesh_;
        int k = mesh.nbr_start[v + 1] - mesh.nbr_start[v] + 1;
        if (k < kBasis + 2) return;
        Point2 x0 = mesh.vertices[v];
        double A[kBasis][kBasis] = {};
        std::vector<double> rows(kBasis * k);
        for (int i = 0; i < k; ++i) {
            int w = i == 0 ? v : mesh.nbrs[mesh.nbr_start[v] + i - 1];
            Vec2 d = (1.0 / mesh.h) * (mesh.vertices[w] - x0);
            double r[kBasis] = {1.0, d.x, d.y, d.x * d.x, d.x * d.y, d.y * d.y};
            for (int a = 0; a < kBasis; ++a) rows[a * k + i] = r[a];
            for (int a = 0; a < kBasis; ++a)
                for (int b = 0; b < kBasis; ++b) A[a][b] += r[a] * r[b];
        }
        // invert the normal matrix by Gauss-Jordan with partial pivoting
        double inv[kBasis][kBasis] = {};
        for (int a = 0; a < kBasis; ++a) inv[a][a] = 1.0;
        for (int col = 0; col < kBasis; ++col) {
            int piv = col;
            for (int r = col + 1; r < kBasis; ++r)
                if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
            if (std::abs(A[piv][col]) < 1e-10) return;
            if (piv != col)
                for (int cidx = 0; cidx < kBasis; ++cidx) {
                    std::swap(A[piv][cidx], A[col][cidx]);
                    std::swap(inv[piv][cidx], inv[col][cidx]);
                }
            double s = 1.0 / A[col][col];
            for (int cidx = 0; cidx < kBasis; ++cidx) {
                A[col][cidx] *= s;
                inv[col][cidx] *= s;
            }
            for (int r = 0; r < kBasis; ++r) {
                if (r == col) continue;
                double m = A[r][col];
                if (m == 0.0) continue;
                for (int cidx = 0; cidx < kBasis; ++cidx) {
                    A[r][cidx] -= m * A[col][cidx];
                    inv[r][cidx] -= m * inv[col][cidx];
                }
            }
        }
        double* P = &pinv_[row_start_[v]];
        for (int a = 0; a < kBasis; ++a)
            for (int i = 0; i < k; ++i) {
                double s = 0.0;
                for (int b = 0; b < kBasis; ++b) s += inv[a][b] * rows[b * k + i];
                P[a * k + i] = s;
            }
        ok_[v] = true;
    }

    const DiscMesh* mesh_;
    std::vector<int> row_start_;
    std::vector<double> pinv_;
    std::vector<bool> ok_;
};

struct GradientOptions {
    // residual threshold relative to h (cut-locus proxy); the shortest-path
    // fields carry metrication noise close to 0.1h in the bulk, so the gate
    // sits at 0.3h to reject slope breaks but keep smooth regions
    double residual_factor = 0.3;
    // accepted window for phi*(grad) around 1, relative to the
    // metrication allowance of the mesh
    double norm_slack_low = 6.0;   // times h, plus metrication_rel
    double norm_slack_high = 3.0;  // times h, plus metrication_rel
    bool check_unit_norm = true;   // distance-like fields only
};

inline double norm_tol_high(const DiscMesh& mesh, const GradientOptions& opt) {
    return mesh.metrication_rel + opt.norm_slack_high * mesh.h;
}

inline double norm_tol_low(const DiscMesh& mesh, const GradientOptions& opt) {
    return mesh.metrication_rel + opt.norm_slack_low * mesh.h;
}

// Least-squares affine fit per vertex; the reliability flag goes false
// where the fit residual exceeds the threshold or phi*(d_x f) leaves the
// window around 1 expected of a distance field.
inline CovectorField gradient_field(const std::vector<double>& values, const Metric& metric,
                                    const DiscMesh& mesh, const StencilFitter& fitter,
                                    const GradientOptions& opt = {}) {
    int nv = mesh.vertex_count();
    CovectorField g;
    g.cov.resize(nv);
    g.reliable.assign(nv, false);
    g.residual.assign(nv, std::numeric_limits<double>::infinity());
    double lo = 1.0 - norm_tol_low(mesh, opt);
    double hi = 1.0 + norm_tol_high(mesh, opt);
    for (int v = 0; v < nv; ++v) {
        Cov2 grad;
        double res;
        if (!fitter.fit(values, v, grad, res)) continue;
        g.cov[v] = grad;
        g.residual[v] = res;
        bool ok = res < opt.residual_factor * mesh.h;
        if (ok && opt.check_unit_norm) {
            double n = metric.dual(mesh.vertices[v], grad);
            ok = n >= lo && n <= hi;
        }
        g.reliable[v] = ok;
    }
    return g;
}

inline CovectorField gradient_field(const DistanceField& field, const Metric& metric,
                                    const DiscMesh& mesh, const StencilFitter& fitter,
                                    const GradientOptions& opt = {}) {
    return gradient_field(field.values, metric, mesh, fitter, opt);
}

// Worst violation of f(b) - f(a) <= length(a->b) over all directed edges.
// Negative result means the field is forward 1-Lipschitz with slack.
inline double check_forward_lipschitz(const std::vector<double>& values, const DiscMesh& mesh) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < mesh.vertex_count(); ++a)
        for (int e = mesh.adj_start[a]; e < mesh.adj_start[a + 1]; ++e)
            worst = std::max(worst, values[mesh.adj[e].to] - values[a] - mesh.adj[e].len);
    return worst;
}

}  // namespace finsler
