#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "finslerfill/metric.hpp"
#include "finslerfill/vec.hpp"

namespace finsler {

struct DirectedEdge {
    int to = -1;
    double len = 0.0;  // Finsler length of the oriented segment from->to
};

// Quadrature cell: an h x h grid square clipped to the disc.
struct Cell {
    Point2 eval;       // evaluation point (clamped into the closed disc)
    double area = 0.0; // Lebesgue area of square ∩ disc
    int owner = -1;    // nearest mesh vertex (carries gradient data)
};

// Triangulated/grid discretization of the closed unit disc:
// regular interior grid plus a boundary ring, directed edges to all
// coprime offsets within the stencil radius, and an oriented
// (positively, by shoelace) boundary vertex loop.
struct DiscMesh {
    double h = 0.05;
    int stencil_radius = 3;
    Metric metric{euclidean_spec()};  // the metric the edge lengths were built with

    std::vector<Point2> vertices;      // interior grid first, then boundary ring
    int interior_count = 0;
    std::vector<int> boundary_loop;    // vertex ids, positively oriented, closed cyclically

    // CSR adjacency, forward orientation
    std::vector<int> adj_start;
    std::vector<DirectedEdge> adj;
    // CSR adjacency of the reversed graph (edge a->b stored at b with length(a->b))
    std::vector<int> radj_start;
    std::vector<DirectedEdge> radj;

    // undirected neighbor lists used by gradient stencils
    std::vector<int> nbr_start;
    std::vector<int> nbrs;

    std::vector<Cell> cells;

    // worst-case relative over-estimation of graph distances caused by the
    // finite direction set (sec of half the largest angular gap)
    double metrication_rel = 0.0;

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    bool is_boundary(int v) const { return v >= interior_count; }

    // conservative error bar for a graph distance of magnitude d
    double distance_error(double d) const { return metrication_rel * d + 2.0 * h; }

    // total Finsler length of the boundary loop (forward orientation)
    double boundary_length(const Metric& m) const {
        double s = 0.0;
        for (size_t i = 0; i < boundary_loop.size(); ++i) {
            Point2 a = vertices[boundary_loop[i]];
            Point2 b = vertices[boundary_loop[(i + 1) % boundary_loop.size()]];
            s += segment_length(m, a, b);
        }
        return s;
    }
};

namespace detail {

inline std::vector<std::pair<int, int>> stencil_offsets(int radius) {
    std::vector<std::pair<int, int>> offs;
    for (int a = -radius; a <= radius; ++a)
        for (int b = -radius; b <= radius; ++b) {
            if (a == 0 && b == 0) continue;
            if (a * a + b * b > radius * radius) continue;
            if (std::gcd(std::abs(a), std::abs(b)) != 1) continue;
            offs.emplace_back(a, b);
        }
    return offs;
}

// largest angular gap of the stencil direction set
inline double stencil_max_gap(int radius) {
    auto offs = stencil_offsets(radius);
    std::vector<double> angles;
    angles.reserve(offs.size());
    for (auto [a, b] : offs) angles.push_back(wrap_angle(std::atan2((double)b, (double)a)));
    std::sort(angles.begin(), angles.end());
    double gap = kTwoPi - angles.back() + angles.front();
    for (size_t i = 1; i < angles.size(); ++i) gap = std::max(gap, angles[i] - angles[i - 1]);
    return gap;
}

inline double square_disc_overlap(Point2 center, double h) {
    double r = center.norm();
    double half_diag = h * 0.70710678118654752 + 1e-15;
    if (r + half_diag <= 1.0) return h * h;
    if (r - half_diag >= 1.0) return 0.0;
    const int k = 16;
    int inside = 0;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            double px = center.x + ((i + 0.5) / k - 0.5) * h;
            double py = center.y + ((j + 0.5) / k - 0.5) * h;
            if (px * px + py * py <= 1.0) ++inside;
        }
    return h * h * inside / double(k * k);
}

}  // namespace detail

// Builds the disc mesh for a given metric (edge lengths are metric-specific;
// vertex geometry depends only on h and the stencil radius).
inline DiscMesh build_mesh(const Metric& metric, double h, int stencil_radius = 3) {
    if (!(h > 0.0) || h > 0.2) throw std::invalid_argument("build_mesh: h must lie in (0, 0.2]");
    if (stencil_radius < 1 || stencil_radius > 4)
        throw std::invalid_argument("build_mesh: stencil radius must be in {1,2,3,4}");
    if (h * stencil_radius > 0.5)
        throw std::invalid_argument("build_mesh: resolution too coarse for stencil");

    DiscMesh mesh;
    mesh.h = h;
    mesh.stencil_radius = stencil_radius;
    mesh.metric = metric;
    mesh.metrication_rel = 1.0 / std::cos(detail::stencil_max_gap(stencil_radius) / 2.0) - 1.0;

    // interior grid vertices, kept clear of the boundary ring
    const int n = static_cast<int>(std::floor(1.0 / h)) + 1;
    std::unordered_map<std::int64_t, int> grid_id;
    auto key = [n](int i, int j) {
        return (std::int64_t(i + 2 * n) << 24) | std::int64_t(j + 2 * n);
    };
    for (int i = -n; i <= n; ++i)
        for (int j = -n; j <= n; ++j) {
            Point2 p{i * h, j * h};
            if (p.norm() <= 1.0 - 0.5 * h) {
                grid_id[key(i, j)] = static_cast<int>(mesh.vertices.size());
                mesh.vertices.push_back(p);
            }
        }
    mesh.interior_count = static_cast<int>(mesh.vertices.size());

    // boundary ring, even count (the RP^2 gluing needs an antipodal pairing)
    int nb = std::max(16, static_cast<int>(std::lround(kTwoPi / h)));
    if (nb % 2 != 0) ++nb;
    for (int k = 0; k < nb; ++k) {
        double t = kTwoPi * k / nb;
        mesh.vertices.push_back({std::cos(t), std::sin(t)});
        mesh.boundary_loop.push_back(mesh.interior_count + k);
    }

    const int nv = mesh.vertex_count();
    std::vector<std::vector<DirectedEdge>> out(nv);
    auto add_edge = [&](int a, int b) {
        double len = segment_length(metric, mesh.vertices[a], mesh.vertices[b], 3);
        out[a].push_back({b, len});
    };

    // grid -> grid, coprime offsets within the stencil radius
    auto offs = detail::stencil_offsets(stencil_radius);
    for (auto& [k64, a] : grid_id) {
        int i = static_cast<int>((k64 >> 24)) - 2 * n;
        int j = static_cast<int>(k64 & 0xffffff) - 2 * n;
        for (auto [di, dj] : offs) {
            auto it = grid_id.find(key(i + di, j + dj));
            if (it != grid_id.end()) add_edge(a, it->second);
        }
    }

    // boundary ring <-> nearby grid vertices, and ring chords
    const double link_r = (stencil_radius + 1.0) * h;
    for (int k = 0; k < nb; ++k) {
        int b = mesh.interior_count + k;
        Point2 pb = mesh.vertices[b];
        int imin = static_cast<int>(std::floor((pb.x - link_r) / h));
        int imax = static_cast<int>(std::ceil((pb.x + link_r) / h));
        int jmin = static_cast<int>(std::floor((pb.y - link_r) / h));
        int jmax = static_cast<int>(std::ceil((pb.y + link_r) / h));
        for (int i = imin; i <= imax; ++i)
            for (int j = jmin; j <= jmax; ++j) {
                auto it = grid_id.find(key(i, j));
                if (it == grid_id.end()) continue;
                int a = it->second;
                if ((mesh.vertices[a] - pb).euclid_norm() <= link_r) {
                    add_edge(b, a);
                    add_edge(a, b);
                }
            }
        for (int s = 1; s <= stencil_radius; ++s) {
            int c = mesh.interior_count + (k + s) % nb;
            add_edge(b, c);
            add_edge(c, b);
        }
    }

    // CSR forward and reverse
    mesh.adj_start.assign(nv + 1, 0);
    for (int v = 0; v < nv; ++v) mesh.adj_start[v + 1] = mesh.adj_start[v] + (int)out[v].size();
    mesh.adj.resize(mesh.adj_start[nv]);
    std::vector<int> rdeg(nv, 0);
    for (int v = 0; v < nv; ++v) {
        std::copy(out[v].begin(), out[v].end(), mesh.adj.begin() + mesh.adj_start[v]);
        for (auto& e : out[v]) ++rdeg[e.to];
    }
    mesh.radj_start.assign(nv + 1, 0);
    for (int v = 0; v < nv; ++v) mesh.radj_start[v + 1] = mesh.radj_start[v] + rdeg[v];
    mesh.radj.resize(mesh.adj.size());
    {
        std::vector<int> cursor(mesh.radj_start.begin(), mesh.radj_start.end() - 1);
        for (int v = 0; v < nv; ++v)
            for (auto& e : out[v]) mesh.radj[cursor[e.to]++] = {v, e.len};
    }

    // undirected neighbor sets for gradient stencils
    mesh.nbr_start.assign(nv + 1, 0);
    std::vector<std::vector<int>> und(nv);
    for (int v = 0; v < nv; ++v)
        for (auto& e : out[v]) {
            und[v].push_back(e.to);
            und[e.to].push_back(v);
        }
    for (int v = 0; v < nv; ++v) {
        std::sort(und[v].begin(), und[v].end());
        und[v].erase(std::unique(und[v].begin(), und[v].end()), und[v].end());
        mesh.nbr_start[v + 1] = mesh.nbr_start[v] + (int)und[v].size();
    }
    mesh.nbrs.resize(mesh.nbr_start[nv]);
    for (int v = 0; v < nv; ++v)
        std::copy(und[v].begin(), und[v].end(), mesh.nbrs.begin() + mesh.nbr_start[v]);

    // quadrature cells: every grid square meeting the disc, owner = nearest vertex
    for (int i = -n - 1; i <= n + 1; ++i)
        for (int j = -n - 1; j <= n + 1; ++j) {
            Point2 c{i * h, j * h};
            double area = detail::square_disc_overlap(c, h);
            if (area <= 0.0) continue;
            Cell cell;
            cell.area = area;
            double r = c.norm();
            cell.eval = r <= 1.0 - 1e-12 ? c
                                         : Point2{c.x * (1.0 - 1e-12) / r, c.y * (1.0 - 1e-12) / r};
            auto it = grid_id.find(key(i, j));
            if (it != grid_id.end()) {
                cell.owner = it->second;
            } else {
                // nearest boundary ring vertex by angle
                double t = wrap_angle(std::atan2(c.y, c.x));
                int k = static_cast<int>(std::lround(t / kTwoPi * nb)) % nb;
                cell.owner = mesh.interior_count + k;
            }
            mesh.cells.push_back(cell);
        }

    return mesh;
}

// Quadrature of the Holmes-Thompson density: (1/pi) * sum |B*_x| * cell area.
inline double ht_area(const Metric& metric, const DiscMesh& mesh, int cosphere_count = 256) {
    double s = 0.0;
    for (const auto& c : mesh.cells) s += coball_area(metric, c.eval, cosphere_count) * c.area;
    return s / kPi;
}

// Busemann quadrature: sum (pi / |B_x|) * cell area. Reversible metrics only;
// the definition is stated for symmetric norms and we reject the rest.
inline double busemann_area(const Metric& metric, const DiscMesh& mesh, int sphere_count = 256) {
    if (!metric.reversible())
        throw std::invalid_argument("busemann_area: metric must be reversible");
    double s = 0.0;
    for (const auto& c : mesh.cells) s += kPi / ball_area(metric, c.eval, sphere_count) * c.area;
    return s;
}

}  // namespace finsler
