#include <doctest.h>

#include <cmath>

#include "finslerfill/filling.hpp"

using namespace finsler;

TEST_CASE("distance cyclic map fields are distances from boundary samples") {
    Metric m(euclidean_spec());
    DiscMesh mesh = build_mesh(m, 0.08, 2);
    auto map = distance_cyclic_map(m, mesh, 4);
    CHECK(map.data.n() == 4);
    CHECK(map.samples.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(map.data.fields[i][map.samples[i]] == 0.0);
        CHECK(map.data.trace_error[i] > 0.0);
    }
    CHECK_THROWS_AS(distance_cyclic_map(m, mesh, 1), std::invalid_argument);
}

TEST_CASE("lower_bound certifies a bound below the area") {
    Metric m(euclidean_spec());
    DiscMesh mesh = build_mesh(m, 0.05, 3);
    StencilFitter fitter(mesh);
    LowerBoundOptions opt;
    opt.audit_budget = 6;
    auto res = lower_bound(m, mesh, fitter, {4, 8, 16}, opt);
    CHECK(res.entries.size() == 3);
    // I increases with n toward the area
    CHECK(res.entries[0].I_int < res.entries[1].I_int);
    CHECK(res.entries[1].I_int < res.entries[2].I_int);
    const auto& cert = res.certificate;
    CHECK(cert.n == 16);
    CHECK(cert.verdict == "bound-holds");
    CHECK(cert.I - cert.error_bar <= cert.ht + 1e-9);
    CHECK(cert.I > 0.5 * cert.ht);  // non-vacuous at n = 16
    CHECK(cert.ht == doctest::Approx(kPi).epsilon(0.01));
    CHECK(cert.h == mesh.h);
    CHECK(cert.provenance == "distance-cyclic-map");
}

TEST_CASE("transplanting euclidean data into the euclidean disc is the identity") {
    Metric m(euclidean_spec());
    DiscMesh mesh = build_mesh(m, 0.05, 3);
    int n = 6;
    auto p_samples = boundary_samples(m, mesh, n);
    auto q_samples = mesh.boundary_loop;
    std::vector<std::vector<double>> bd0(n, std::vector<double>(q_samples.size()));
    for (int i = 0; i < n; ++i) {
        auto f = forward_distance_field(mesh, p_samples[i]);
        for (size_t j = 0; j < q_samples.size(); ++j) bd0[i][j] = f.values[q_samples[j]];
    }
    auto t = transplant_fields(bd0, m, mesh, p_samples, q_samples);
    CHECK(t.q_spacing < 3.0 * mesh.h);
    // f_p recovers d(p, .) up to the mesh scale
    for (int i = 0; i < n; ++i) {
        auto f = forward_distance_field(mesh, p_samples[i]);
        double worst = 0.0;
        for (int v = 0; v < mesh.vertex_count(); ++v)
            worst = std::max(worst, std::abs(t.data.fields[i][v] - f.values[v]));
        CHECK(worst < 2.0 * mesh.h);
    }
    // the maximizing boundary sample is a valid vertex id
    int q = point_of_maximum(t, 0, mesh.interior_count / 2);
    CHECK(mesh.is_boundary(q));
    CHECK_THROWS_AS(transplant_fields(bd0, m, mesh, p_samples, {q_samples[0], q_samples[1]}),
                    std::invalid_argument);
}

TEST_CASE("verify_filling accepts a true filling and flags a false one") {
    Metric e(euclidean_spec());
    SUBCASE("scaling up the metric keeps the hypothesis and the bound") {
        Metric big(euclidean_spec(1.5));
        auto rep = verify_filling(e, big, 0.05, 3, 8);
        CHECK(rep.hypothesis_holds);
        CHECK(rep.certificate.verdict == "bound-holds");
        CHECK(rep.boundary_agreement < 2.0 * 0.05);
        CHECK(rep.lipschitz_worst < 1e-6);
        CHECK(rep.certificate.ht == doctest::Approx(kPi * 1.5 * 1.5).epsilon(0.01));
        CHECK(rep.I_f0 > 0.0);
    }
    SUBCASE("shrinking the metric violates the boundary-distance hypothesis") {
        Metric small(euclidean_spec(0.5));
        auto rep = verify_filling(e, small, 0.05, 3, 8);
        CHECK_FALSE(rep.hypothesis_holds);
        CHECK(rep.certificate.verdict == "inapplicable");
        CHECK(rep.hypothesis_worst > 0.5);
    }
}
