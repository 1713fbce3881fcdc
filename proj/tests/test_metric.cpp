#include <doctest.h>

#include <cmath>

#include "finslerfill/metric.hpp"

using namespace finsler;

namespace {

// |B| of the unit ball of ||.||_p in the plane: 4 Gamma(1+1/p)^2 / Gamma(1+2/p)
double pball_area(double p) {
    return 4.0 * std::tgamma(1.0 + 1.0 / p) * std::tgamma(1.0 + 1.0 / p) /
           std::tgamma(1.0 + 2.0 / p);
}

}  // namespace

TEST_CASE("validate_metric passes for every family") {
    std::vector<MetricSpec> specs = {
        euclidean_spec(),
        euclidean_spec(1.7),
        hemisphere_spec(),
        conformal_bump_spec(ConformalBase::Flat, {{3.0, {0.3, 0.0}, 0.15}}),
        randers_spec({0.5, 0.0}),
        randers_spec({0.2, -0.3}, 1.3),
        minkowski_spec(4.0),
        minkowski_spec(1.5, 1.2, 0.3, -0.1, 0.9),
    };
    for (const auto& s : specs) {
        Metric m(s);
        auto rep = validate_metric(m);
        INFO(s.name, ": homog ", rep.worst_homogeneity, " pos ", rep.worst_positivity,
             " conv ", rep.worst_convexity, " dual ", rep.worst_duality);
        CHECK(rep.passed);
        CHECK(rep.samples == 2000);
    }
}

TEST_CASE("spec validation rejects bad parameters") {
    CHECK_THROWS_AS(Metric(euclidean_spec(0.0)), std::invalid_argument);
    CHECK_THROWS_AS(Metric(euclidean_spec(-1.0)), std::invalid_argument);
    CHECK_THROWS_AS(Metric(conformal_bump_spec(ConformalBase::Flat, {{1.0, {0, 0}, 0.0}})),
                    std::invalid_argument);
    // deep negative bump makes the factor vanish on the disc
    CHECK_THROWS_AS(Metric(conformal_bump_spec(ConformalBase::Flat, {{-1.5, {0, 0}, 0.5}})),
                    std::invalid_argument);
    CHECK_THROWS_AS(Metric(randers_spec({1.0, 0.0})), std::invalid_argument);
    CHECK_THROWS_AS(Metric(randers_spec({0.8, 0.8})), std::invalid_argument);
    CHECK_THROWS_AS(Metric(minkowski_spec(1.0)), std::invalid_argument);
    CHECK_THROWS_AS(Metric(minkowski_spec(0.5)), std::invalid_argument);
    CHECK_THROWS_AS(Metric(minkowski_spec(2.0, 1.0, 1.0, 1.0, 1.0)), std::invalid_argument);
}

TEST_CASE("closed-form duals agree with the golden-section search") {
    std::vector<MetricSpec> specs = {
        euclidean_spec(2.0),
        hemisphere_spec(),
        conformal_bump_spec(ConformalBase::Flat, {{0.8, {-0.2, 0.4}, 0.3}}),
        randers_spec({0.4, -0.2}),
        minkowski_spec(3.0, 1.1, 0.2, 0.0, 0.8),
    };
    Point2 pts[] = {{0.0, 0.0}, {0.5, 0.1}, {-0.3, -0.6}};
    for (const auto& s : specs) {
        Metric m(s);
        for (Point2 x : pts)
            for (int k = 0; k < 12; ++k) {
                double t = kTwoPi * k / 12.0 + 0.13;
                Cov2 u{1.7 * std::cos(t), 1.7 * std::sin(t)};
                double searched = dual_norm_search(m, x, u);
                INFO(s.name, " x=(", x.x, ",", x.y, ") k=", k);
                CHECK(m.dual(x, u) == doctest::Approx(searched).epsilon(1e-7));
            }
    }
}

TEST_CASE("legendre transform round-trips and pairs to one") {
    std::vector<MetricSpec> specs = {euclidean_spec(), hemisphere_spec(),
                                     randers_spec({0.3, 0.1}), minkowski_spec(4.0)};
    for (const auto& s : specs) {
        Metric m(s);
        Point2 x{0.2, -0.4};
        for (int k = 0; k < 16; ++k) {
            Vec2 e = unit_dir(kTwoPi * k / 16.0 + 0.05);
            Vec2 v = (1.0 / m.phi(x, e)) * e;  // on U_x
            Cov2 u = m.legendre(x, v);
            CHECK(m.dual(x, u) == doctest::Approx(1.0).epsilon(1e-6));
            CHECK(pair(u, v) == doctest::Approx(1.0).epsilon(1e-6));
            Vec2 w = m.legendre_inv(x, u);
            CHECK(w.x == doctest::Approx(v.x).epsilon(1e-5));
            CHECK(w.y == doctest::Approx(v.y).epsilon(1e-5));
        }
    }
    CHECK_THROWS_AS(Metric(euclidean_spec()).legendre({0, 0}, {0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(Metric(euclidean_spec()).legendre_inv({0, 0}, {0, 0}), std::invalid_argument);
}

TEST_CASE("ball and coball areas match closed forms") {
    const int count = 4096;
    SUBCASE("euclidean") {
        Metric m(euclidean_spec());
        CHECK(ball_area(m, {0, 0}, count) == doctest::Approx(kPi).epsilon(1e-5));
        CHECK(coball_area(m, {0, 0}, count) == doctest::Approx(kPi).epsilon(1e-5));
        Metric m2(euclidean_spec(2.0));
        CHECK(ball_area(m2, {0.1, 0.2}, count) == doctest::Approx(kPi / 4.0).epsilon(1e-5));
        CHECK(coball_area(m2, {0.1, 0.2}, count) == doctest::Approx(4.0 * kPi).epsilon(1e-5));
    }
    SUBCASE("p-norm, p = 4") {
        Metric m(minkowski_spec(4.0));
        CHECK(ball_area(m, {0, 0}, count) == doctest::Approx(pball_area(4.0)).epsilon(1e-5));
        // dual ball is the q-ball, q = 4/3
        CHECK(coball_area(m, {0, 0}, count) ==
              doctest::Approx(pball_area(4.0 / 3.0)).epsilon(1e-5));
    }
    SUBCASE("randers coball is a shifted disc of area pi") {
        Metric m(randers_spec({0.4, -0.1}));
        CHECK(coball_area(m, {0.3, 0.3}, count) == doctest::Approx(kPi).epsilon(1e-4));
        // ... centered at the drift: phi*(u) = 1 iff |u - b| = 1
        for (int k = 0; k < 8; ++k) {
            Cov2 u{0.4 + std::cos(kTwoPi * k / 8.0), -0.1 + std::sin(kTwoPi * k / 8.0)};
            CHECK(m.dual({0, 0}, u) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    SUBCASE("santalo: |B| |B*| <= pi^2 for symmetric norms, equality for ellipses") {
        // the origin-centered volume product can exceed pi^2 for asymmetric
        // balls (randers), so the inequality is only tested on reversible ones
        std::vector<MetricSpec> specs = {euclidean_spec(1.3), minkowski_spec(4.0),
                                         minkowski_spec(1.7, 1.0, 0.4, 0.0, 0.7)};
        for (const auto& s : specs) {
            Metric m(s);
            double prod = ball_area(m, {0.2, -0.1}, count) * coball_area(m, {0.2, -0.1}, count);
            INFO(s.name);
            CHECK(prod <= kPi * kPi + 1e-6);
        }
        Metric ell(minkowski_spec(2.0, 2.0, 0.0, 0.0, 0.5));
        double prod = ball_area(ell, {0, 0}, count) * coball_area(ell, {0, 0}, count);
        CHECK(prod == doctest::Approx(kPi * kPi).epsilon(1e-4));
        // randers exceeds pi^2 by the closed-form factor (1 - |b|^2)^{-3/2}
        Metric r(randers_spec({0.35, 0.2}));
        double b2 = 0.35 * 0.35 + 0.2 * 0.2;
        double rprod = ball_area(r, {0, 0}, count) * coball_area(r, {0, 0}, count);
        CHECK(rprod == doctest::Approx(kPi * kPi / std::pow(1.0 - b2, 1.5)).epsilon(1e-4));
    }
}

TEST_CASE("segment_length basics") {
    Metric e(euclidean_spec());
    CHECK(segment_length(e, {-0.5, 0.0}, {0.5, 0.0}) == doctest::Approx(1.0));
    CHECK(segment_length(e, {0.3, 0.3}, {0.3, 0.3}) == 0.0);
    // hemisphere: any diameter is a half great circle of length pi
    Metric hs(hemisphere_spec());
    double len = 0.0;
    const int steps = 2000;
    for (int i = 0; i < steps; ++i) {
        double a = -1.0 + 2.0 * i / steps, b = -1.0 + 2.0 * (i + 1) / steps;
        len += segment_length(hs, {a, 0.0}, {b, 0.0});
    }
    CHECK(len == doctest::Approx(kPi).epsilon(1e-8));
    // orientation matters for randers
    Metric r(randers_spec({0.5, 0.0}));
    CHECK(segment_length(r, {-0.5, 0}, {0.5, 0}) == doctest::Approx(1.5));
    CHECK(segment_length(r, {0.5, 0}, {-0.5, 0}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(segment_length(e, {2.0, 0.0}, {0.0, 0.0}), std::domain_error);
}

TEST_CASE("unit sphere polygon solves phi = 1 radially") {
    Metric m(minkowski_spec(4.0, 1.2, 0.1, 0.0, 0.9));
    Point2 x{0.1, 0.1};
    auto poly = unit_sphere_polygon(m, x, 64);
    for (const auto& v : poly) CHECK(m.phi(x, v) == doctest::Approx(1.0).epsilon(1e-12));
    auto copoly = unit_cosphere_polygon(m, x, 64);
    for (const auto& u : copoly) CHECK(m.dual(x, u) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(unit_sphere_polygon(m, x, 3), std::invalid_argument);
}

TEST_CASE("dual_norm_argmax returns the contact point") {
    Metric m(minkowski_spec(3.0));
    Point2 x{0.0, 0.0};
    Cov2 u{0.7, 0.4};
    Vec2 v = dual_norm_argmax(m, x, u);
    CHECK(m.phi(x, v) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(pair(u, v) == doctest::Approx(m.dual(x, u)).epsilon(1e-8));
}
