#include <catch_amalgamated.hpp>
#include <cavheat/laplace_bem.hpp>
#include <cavheat/tri_mesh.hpp>
#include <cmath>

#include "oracles.hpp"

using namespace cavheat;

TEST_CASE("analytic triangle potential") {
    const Vec3 a{0, 0, 0}, b{1, 0, 0}, c{0.5, std::sqrt(3.0) / 2.0, 0};  // equilateral

    SECTION("self entry at the centroid matches the Duffy oracle") {
        const Vec3 p = (a + b + c) / 3.0;
        const long double ref = oracles::tri_potential_inside(p, a, b, c);
        CHECK(tri_potential(p, a, b, c) ==
              Catch::Approx(static_cast<double>(ref)).epsilon(1e-8));
    }
    SECTION("interior off-center point") {
        const Vec3 p{0.4, 0.2, 0.0};
        const long double ref = oracles::tri_potential_inside(p, a, b, c);
        CHECK(tri_potential(p, a, b, c) ==
              Catch::Approx(static_cast<double>(ref)).epsilon(1e-8));
    }
    SECTION("off-plane point matches subdivision quadrature") {
        const Vec3 p{0.2, 0.3, 0.8};
        CHECK(tri_potential(p, a, b, c) ==
              Catch::Approx(oracles::tri_potential_far(p, a, b, c, 7)).epsilon(1e-5));
    }
    SECTION("far field tends to area / (4 pi distance)") {
        const Vec3 p{40.0, -25.0, 60.0};
        const double area = 0.5 * (b - a).cross(c - a).norm();
        const double dist = (p - (a + b + c) / 3.0).norm();
        CHECK(tri_potential(p, a, b, c) ==
              Catch::Approx(area / (kFourPi * dist)).epsilon(1e-3));
    }
    SECTION("independent of vertex order") {
        const Vec3 p{0.1, 0.05, 0.4};
        CHECK(tri_potential(p, a, b, c) == Catch::Approx(tri_potential(p, c, a, b)));
        CHECK(tri_potential(p, a, b, c) == Catch::Approx(tri_potential(p, b, a, c)));
    }
}

TEST_CASE("single-layer matrix") {
    const TriMesh m = make_icosphere(1);
    const Eigen::MatrixXd a = assemble_single_layer(m);
    SECTION("entrywise positive") {
        CHECK(a.minCoeff() > 0.0);
    }
    SECTION("distant panels behave like monopoles") {
        // compare two panels on opposite sides of the sphere
        int p = 0, q = 0;
        double best = 0.0;
        for (int i = 0; i < m.panel_count(); ++i)
            for (int j = 0; j < m.panel_count(); ++j) {
                const double d = distance(m.centroids[i], m.centroids[j]);
                if (d > best) {
                    best = d;
                    p = i;
                    q = j;
                }
            }
        const double mono = m.areas[q] / (kFourPi * best);
        CHECK(a(p, q) == Catch::Approx(mono).epsilon(1e-3));
    }
}

TEST_CASE("sphere capacitance") {
    SECTION("unit sphere tends to 4 pi from below") {
        double prev_err = 1.0;
        for (int r = 0; r <= 3; ++r) {
            const auto [c, density] = capacitance(make_icosphere(r));
            const double err = std::abs(c.value - 4.0 * M_PI);
            CHECK(err < prev_err);
            prev_err = err;
        }
        // refinement 3: well within 1%
        const auto [c3, d3] = capacitance(make_icosphere(3));
        CHECK(std::abs(c3.value - 4.0 * M_PI) / (4.0 * M_PI) < 5e-3);
    }
    SECTION("radius-0.5 sphere gives 2 pi at matching accuracy") {
        TriMesh m = make_icosphere(3);
        for (auto& v : m.vertices) v = v * 0.5;
        m.finalize();
        const auto [c, density] = capacitance(m);
        CHECK(std::abs(c.value - 2.0 * M_PI) / (2.0 * M_PI) < 5e-3);
    }
    SECTION("dilation covariance to 1e-12 relative") {
        const TriMesh base = make_icosphere(2);
        const auto [cb, db] = capacitance(base);
        const double eps = 0.37;
        TriMesh scaled = base;
        for (auto& v : scaled.vertices) v = v * eps;
        scaled.finalize();
        const auto [cs, ds] = capacitance(scaled);
        CHECK(std::abs(cs.value - eps * cb.value) <= 1e-12 * cs.value);
    }
    SECTION("translation and rotation invariance to 1e-12 relative") {
        const TriMesh base = make_icosphere(2);
        const auto [cb, db] = capacitance(base);
        TriMesh moved = base;
        const double ang = 0.7;
        for (auto& v : moved.vertices) {
            const Vec3 r{v.x * std::cos(ang) - v.y * std::sin(ang),
                         v.x * std::sin(ang) + v.y * std::cos(ang), v.z};
            v = r + Vec3{5.0, -3.0, 11.0};
        }
        moved.finalize();
        const auto [cm, dm] = capacitance(moved);
        CHECK(std::abs(cm.value - cb.value) <= 1e-12 * cb.value);
    }
    SECTION("density positive on convex shapes") {
        const auto [c, density] = capacitance(make_icosphere(2));
        for (double v : density.values) CHECK(v > 0.0);
        const auto [ce, de] =
            capacitance(triangulate(ReferenceShape::ellipsoid({1.5, 1.0, 0.7}), 2));
        for (double v : de.values) CHECK(v > 0.0);
    }
    SECTION("density of the unit sphere is about 1/(4 pi R^2) * 4 pi R = 1/R") {
        // constant equilibrium density sigma = 1/R on a sphere of radius R
        const auto [c, density] = capacitance(make_icosphere(3));
        for (double v : density.values) CHECK(v == Catch::Approx(1.0).margin(0.05));
    }
}
