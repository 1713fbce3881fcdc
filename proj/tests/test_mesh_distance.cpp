#include <doctest.h>

#include <cmath>

#include "finslerfill/distance.hpp"

using namespace finsler;

namespace {

int nearest_vertex(const DiscMesh& mesh, Point2 p) {
    int best = 0;
    double bd = 1e300;
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        double d = (mesh.vertices[v] - p).euclid_norm();
        if (d < bd) {
            bd = d;
            best = v;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("mesh invariants") {
    Metric m(euclidean_spec());
    DiscMesh mesh = build_mesh(m, 0.05, 3);
    CHECK(mesh.interior_count > 0);
    CHECK(mesh.boundary_loop.size() % 2 == 0);
    CHECK(mesh.boundary_loop.size() >= 16);
    for (int v : mesh.boundary_loop) CHECK(mesh.is_boundary(v));
    for (const auto& p : mesh.vertices) CHECK(p.norm() <= 1.0 + 1e-12);
    // boundary loop is positively oriented
    double s = 0.0;
    for (size_t i = 0; i < mesh.boundary_loop.size(); ++i) {
        Point2 a = mesh.vertices[mesh.boundary_loop[i]];
        Point2 b = mesh.vertices[mesh.boundary_loop[(i + 1) % mesh.boundary_loop.size()]];
        s += a.x * b.y - a.y * b.x;
    }
    CHECK(s > 0.0);
    // every edge length is the segment length of its chord
    for (int a = 0; a < mesh.vertex_count(); ++a)
        for (int e = mesh.adj_start[a]; e < mesh.adj_start[a + 1]; ++e) {
            const auto& ed = mesh.adj[e];
            CHECK(ed.len ==
                  doctest::Approx(segment_length(m, mesh.vertices[a], mesh.vertices[ed.to], 3)));
        }
    // reverse CSR mirrors the forward one
    size_t fwd = mesh.adj.size();
    CHECK(mesh.radj.size() == fwd);
    CHECK(mesh.metrication_rel > 0.0);
    CHECK(mesh.metrication_rel < 0.03);  // R = 3: largest gap ~ atan(1/3) - atan(1/2) scale

    CHECK_THROWS_AS(build_mesh(m, 0.3, 3), std::invalid_argument);
    CHECK_THROWS_AS(build_mesh(m, 0.05, 5), std::invalid_argument);
    CHECK_THROWS_AS(build_mesh(m, 0.2, 4), std::invalid_argument);
}

TEST_CASE("quadrature cells cover the disc") {
    Metric m(euclidean_spec());
    DiscMesh mesh = build_mesh(m, 0.04, 3);
    double total = 0.0;
    for (const auto& c : mesh.cells) {
        total += c.area;
        CHECK(c.owner >= 0);
        CHECK(c.owner < mesh.vertex_count());
        CHECK(in_closed_disc(c.eval));
    }
    CHECK(total == doctest::Approx(kPi).epsilon(2e-3));
}

TEST_CASE("ht and busemann areas match closed forms") {
    DiscMesh mesh = build_mesh(Metric(euclidean_spec()), 0.04, 3);
    // areas only read the cells, which are metric-independent
    CHECK(ht_area(Metric(euclidean_spec()), mesh, 256) == doctest::Approx(kPi).epsilon(3e-3));
    CHECK(busemann_area(Metric(euclidean_spec()), mesh, 256) ==
          doctest::Approx(kPi).epsilon(3e-3));
    CHECK(ht_area(Metric(hemisphere_spec()), mesh, 256) ==
          doctest::Approx(2.0 * kPi).epsilon(3e-3));
    CHECK(ht_area(Metric(randers_spec({0.3, 0.0})), mesh, 256) ==
          doctest::Approx(kPi).epsilon(3e-3));
    CHECK_THROWS_AS(busemann_area(Metric(randers_spec({0.3, 0.0})), mesh, 256),
                    std::invalid_argument);
}

TEST_CASE("graph distances approximate the metric") {
    SUBCASE("euclidean: distance to the antipode is near 2") {
        Metric m(euclidean_spec());
        DiscMesh mesh = build_mesh(m, 0.05, 3);
        int a = nearest_vertex(mesh, {-1.0, 0.0});
        int b = nearest_vertex(mesh, {1.0, 0.0});
        auto f = forward_distance_field(mesh, a);
        CHECK(f.values[b] == doctest::Approx(2.0).epsilon(0.01));
        CHECK(f.values[b] >= 2.0 - 2.0 * mesh.h);  // graph paths cannot beat the metric by much
        CHECK(f.error_estimate > 0.0);
    }
    SUBCASE("hemisphere: boundary antipodes are pi apart") {
        Metric m(hemisphere_spec());
        DiscMesh mesh = build_mesh(m, 0.05, 3);
        int a = mesh.boundary_loop[0];
        int b = mesh.boundary_loop[mesh.boundary_loop.size() / 2];
        auto f = forward_distance_field(mesh, a);
        CHECK(f.values[b] == doctest::Approx(kPi).epsilon(0.02));
    }
    SUBCASE("forward and backward fields are adjoint") {
        Metric m(randers_spec({0.4, 0.1}));
        DiscMesh mesh = build_mesh(m, 0.08, 2);
        int a = nearest_vertex(mesh, {-0.5, 0.2});
        int b = nearest_vertex(mesh, {0.6, -0.3});
        auto fwd = forward_distance_field(mesh, a);
        auto bwd = backward_distance_field(mesh, b);
        CHECK(fwd.values[b] == doctest::Approx(bwd.values[a]).epsilon(1e-12));
        // drift makes left-to-right cheaper than right-to-left
        auto fwd_b = forward_distance_field(mesh, b);
        CHECK(fwd.values[b] > fwd_b.values[a]);
    }
    SUBCASE("graph distance is at least the straight-chord length minus slack") {
        Metric m(euclidean_spec());
        DiscMesh mesh = build_mesh(m, 0.05, 3);
        int a = nearest_vertex(mesh, {-0.4, -0.4});
        auto f = forward_distance_field(mesh, a);
        for (int v = 0; v < mesh.vertex_count(); v += 17) {
            double chord = (mesh.vertices[v] - mesh.vertices[a]).euclid_norm();
            CHECK(f.values[v] >= chord - 2.0 * mesh.h);
        }
    }
}

TEST_CASE("boundary samples are cyclically ordered and nested") {
    Metric m(euclidean_spec());
    DiscMesh mesh = build_mesh(m, 0.05, 3);
    auto s8 = boundary_samples(m, mesh, 8);
    auto s16 = boundary_samples(m, mesh, 16);
    CHECK(s8.size() == 8);
    // doubling keeps every coarse sample
    for (int v : s8) CHECK(std::count(s16.begin(), s16.end(), v) == 1);
    // cyclic by angle
    for (size_t i = 0; i + 1 < s8.size(); ++i) {
        Point2 a = mesh.vertices[s8[i]], b = mesh.vertices[s8[i + 1]];
        CHECK(wrap_angle(std::atan2(b.y, b.x) - std::atan2(a.y, a.x)) < kPi);
    }
    CHECK_THROWS_AS(boundary_samples(m, mesh, 1), std::invalid_argument);
}

TEST_CASE("boundary distance matrix is consistent with single fields") {
    Metric m(euclidean_spec());
    DiscMesh mesh = build_mesh(m, 0.1, 2);
    auto bd = boundary_distance_matrix(m, mesh, 6);
    CHECK(bd.d.size() == 6);
    for (int i = 0; i < 6; ++i) CHECK(bd.d[i][i] == 0.0);
    auto f = forward_distance_field(mesh, bd.sample_vertices[0]);
    for (int j = 0; j < 6; ++j)
        CHECK(bd.d[0][j] == doctest::Approx(f.values[bd.sample_vertices[j]]));
}

TEST_CASE("stencil fitter reproduces quadratics exactly") {
    Metric m(euclidean_spec());
    DiscMesh mesh = build_mesh(m, 0.1, 3);
    StencilFitter fitter(mesh);
    std::vector<double> field(mesh.vertex_count());
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        Point2 p = mesh.vertices[v];
        field[v] = 0.3 + 1.2 * p.x - 0.7 * p.y + 0.5 * p.x * p.x - 0.4 * p.x * p.y;
    }
    int checked = 0;
    for (int v = 0; v < mesh.vertex_count(); v += 7) {
        Cov2 grad;
        double res;
        if (!fitter.fit(field, v, grad, res)) continue;
        Point2 p = mesh.vertices[v];
        CHECK(grad.x == doctest::Approx(1.2 + 1.0 * p.x - 0.4 * p.y).epsilon(1e-8));
        CHECK(grad.y == doctest::Approx(-0.7 - 0.4 * p.x).epsilon(1e-8));
        CHECK(res < 1e-10);
        ++checked;
    }
    CHECK(checked > 50);
}

TEST_CASE("gradient of a distance field has unit dual norm") {
    Metric m(euclidean_spec());
    DiscMesh mesh = build_mesh(m, 0.05, 3);
    StencilFitter fitter(mesh);
    int src = mesh.boundary_loop[0];
    auto f = forward_distance_field(mesh, src);
    auto g = gradient_field(f, m, mesh, fitter);
    int reliable = 0, total = 0;
    for (int v = 0; v < mesh.interior_count; ++v) {
        ++total;
        if (!g.reliable[v]) continue;
        ++reliable;
        double n = m.dual(mesh.vertices[v], g.cov[v]);
        CHECK(n == doctest::Approx(1.0).epsilon(0.2));
    }
    CHECK(reliable > 0.7 * total);
}

TEST_CASE("distance fields are forward 1-Lipschitz") {
    Metric m(randers_spec({0.3, -0.2}));
    DiscMesh mesh = build_mesh(m, 0.08, 2);
    auto f = forward_distance_field(mesh, mesh.boundary_loop[3]);
    // the corrective pass may undershoot by O(h^2) per edge
    CHECK(check_forward_lipschitz(f.values, mesh) < 0.5 * mesh.h * mesh.h);
}
