#include <doctest.h>

#include <cmath>

#include "torusbif/averaging.hpp"
#include "torusbif/expr.hpp"
#include "torusbif/paperlab.hpp"

using namespace torusbif;

TEST_CASE("closed-form g1/g2 fixtures") {
    for (double mu : {-0.3, 0.0, 0.4})
        for (double a : {-1.0, 0.0, 2.0}) {
            const Vec2 v = paperlab::g1_closed(1.0, 0.0, mu, a);
            CHECK(v.x == 0.0);
            CHECK(v.y == 0.0);
        }
    const Vec2 g1 = paperlab::g1_closed(1.1, 0.2, 0.0, 1.0);
    CHECK(g1.x == doctest::Approx(30 * M_PI * -0.195).epsilon(1e-12));
    CHECK(g1.y == doctest::Approx(30 * M_PI * 0.11).epsilon(1e-12));
    const Vec2 g2 = paperlab::g2_closed(1.1, 0.2, 1.0);
    CHECK(g2.x == doctest::Approx(30 * M_PI * 0.005).epsilon(1e-12));
    CHECK(g2.y == doctest::Approx(30 * M_PI * 0.01).epsilon(1e-12));
}

TEST_CASE("expression fixtures agree with the native evaluators") {
    for (double a : {-1.0, 0.7}) {
        const auto [e1x, e1y] = paperlab::g1_expression(a);
        const auto ex = expr::parse(e1x);
        const auto ey = expr::parse(e1y);
        for (double r : {0.85, 1.0, 1.15})
            for (double z : {-0.15, 0.0, 0.2})
                for (double mu : {-0.05, 0.02}) {
                    const Vec2 native = paperlab::g1_closed(r, z, mu, a);
                    CHECK(std::fabs(ex.eval(0, r, z, mu) - native.x) <=
                          1e-12 * (1.0 + std::fabs(native.x)));
                    CHECK(std::fabs(ey.eval(0, r, z, mu) - native.y) <=
                          1e-12 * (1.0 + std::fabs(native.y)));
                }
    }
    const auto [e2x, e2y] = paperlab::g2_expression(-80.0);
    const auto fx = expr::parse(e2x);
    const auto fy = expr::parse(e2y);
    const Vec2 native = paperlab::g2_closed(1.08, -0.12, -80.0);
    CHECK(fx.eval(0, 1.08, -0.12, 0) == doctest::Approx(native.x).epsilon(1e-12));
    CHECK(fy.eval(0, 1.08, -0.12, 0) == doctest::Approx(native.y).epsilon(1e-12));
}

TEST_CASE("3D field basics") {
    paperlab::PaperParams p;
    p.a = -1.0;
    const auto f3 = paperlab::field_3d(p);

    // eps = 0 reduces to the harmonic rotation (-y, x, 0).
    double x[3] = {0.3, -0.8, 0.5}, dy[3];
    f3.rhs(0.0, x, 0.17, 0.0, dy);
    CHECK(dy[0] == 0.8);
    CHECK(dy[1] == 0.3);
    CHECK(dy[2] == 0.0);

    // The rho singularity on the z-axis is a domain error.
    double origin[3] = {0.0, 0.0, 1.0};
    CHECK_THROWS_AS(f3.rhs(0.0, origin, 0.0, 1e-3, dy), paperlab::DomainError);
}

TEST_CASE("unit circle is invariant at eps = 0") {
    paperlab::PaperParams p;
    const auto f3 = paperlab::field_3d(p);
    for (double th = 0.0; th < 6.28; th += 0.7) {
        double x[3] = {std::cos(th), std::sin(th), 0.0}, dy[3];
        f3.rhs(0.0, x, 0.0, 0.0, dy);
        // Radial and vertical components vanish on the circle.
        CHECK(std::fabs(x[0] * dy[0] + x[1] * dy[1]) < 1e-15);
        CHECK(dy[2] == 0.0);
    }
}

TEST_CASE("reduced field F1 equals (cos(th) P1~, R1~) at a spot check") {
    paperlab::PaperParams p;
    p.a = 1.0;
    const auto fr = paperlab::reduce_cylindrical(p);
    const double th = 0.0, r = 1.1, z = 0.2;
    // Independent evaluation of the composed printed formulas at theta = 0:
    // x = r, y = 0, rho = 1/r.
    const double P1 = 10 * r * (3 * 0.0 + 1.0 * (9 + 4 * r * r + 3 * z * z)) -
                      30 * r * (1.0 / r) * (z + 0.0 + 1.0 * (1 + 4 * r * r + z * z));
    const double R1 = 30 * r * r * (1 - 2 * 1.0 * z) * (1.0 / r) +
                      15 * (1.0 * (2 * r * r * z + z * z * z + z) + 0.0 * z - 1);
    double in[2] = {r, z}, out[2];
    fr.terms[0](th, in, 0.0, out);
    CHECK(out[0] == doctest::Approx(std::cos(th) * P1).epsilon(1e-14));
    CHECK(out[1] == doctest::Approx(R1).epsilon(1e-14));

    // At eps = 0 the reduced RHS vanishes: standard form achieved.
    double rhs0[2];
    fr.rhs(0.3, in, 0.05, 0.0, rhs0);
    CHECK(rhs0[0] == 0.0);
    CHECK(rhs0[1] == 0.0);

    // r <= 0 is rejected.
    double bad[2] = {-0.2, 0.0};
    CHECK_THROWS_AS(fr.terms[0](0.0, bad, 0.0, out), paperlab::DomainError);
}

TEST_CASE("reduced field with remainder matches the 3D flow across one turn") {
    paperlab::PaperParams p;
    p.a = -1.0;
    const auto f3 = paperlab::field_3d(p);
    const auto fr = paperlab::reduce_cylindrical(p);
    const double eps = 1e-3;

    // 3D: integrate from theta0 = 0 until y crosses 0 with x > 0 again
    // (theta advances by 2 pi in slightly more than 2 pi time units).
    double x3[3] = {1.05, 0.0, 0.1};
    std::vector<std::pair<double, std::array<double, ode::kMaxDim>>> dense;
    ode::integrate(f3, x3, 0.0, 10.0, 0.0, eps, 1e-12, &dense);
    double r3 = 0.0, z3 = 0.0;
    bool found = false;
    for (size_t i = 1; i < dense.size(); ++i) {
        const auto& [t0, y0] = dense[i - 1];
        const auto& [t1, y1] = dense[i];
        if (t0 > 3.0 && y0[1] < 0.0 && y1[1] >= 0.0 && y1[0] > 0.0) {
            // Linear interpolation of the crossing.
            const double w = -y0[1] / (y1[1] - y0[1]);
            const double xx = y0[0] + w * (y1[0] - y0[0]);
            const double zz = y0[2] + w * (y1[2] - y0[2]);
            r3 = std::hypot(xx, y0[1] + w * (y1[1] - y0[1]));
            z3 = zz;
            found = true;
            break;
        }
    }
    REQUIRE(found);

    double xr[2] = {1.05, 0.1};
    const auto rr = ode::integrate(fr, xr, 0.0, 2.0 * M_PI, 0.0, eps, 1e-12);
    // The crossing is located by linear interpolation of the dense output,
    // which limits the agreement to ~1e-5 here.
    CHECK(rr.state[0] == doctest::Approx(r3).epsilon(1e-4));
    CHECK(rr.state[1] == doctest::Approx(z3).epsilon(1e-3));
}

TEST_CASE("oracle agreement on the 5x5 grid (primary correctness anchor)") {
    const auto f = paperlab::reduce_cylindrical({1.0, 1.0});
    double worst1 = 0.0, worst2 = 0.0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            const double r = 0.8 + 0.1 * i;
            const double z = -0.2 + 0.1 * j;
            const Vec2 n1 = averaging::averaged(f, 1, {r, z}, 0.0);
            const Vec2 c1 = paperlab::g1_closed(r, z, 0.0, 1.0);
            worst1 = std::max(worst1, norm(n1 - c1) / (1.0 + norm(c1)));
            const Vec2 n2 = averaging::averaged(f, 2, {r, z}, 0.0);
            const Vec2 c2 = paperlab::g2_closed(r, z, 1.0);
            worst2 = std::max(worst2, norm(n2 - c2) / (1.0 + norm(c2)));
        }
    CHECK(worst1 <= 1e-6);
    CHECK(worst2 <= 1e-6);
}

TEST_CASE("cylindrical start conversion") {
    const double xyz[3] = {0.98, 0.21, 0.0};
    double th = 0.0;
    Vec2 rz;
    paperlab::cylindrical_start(xyz, &th, &rz);
    CHECK(th == doctest::Approx(std::atan2(0.21, 0.98)).epsilon(1e-15));
    CHECK(rz.x == doctest::Approx(std::hypot(0.98, 0.21)).epsilon(1e-15));
    CHECK(rz.y == 0.0);
    const double axis[3] = {0.0, 0.0, 0.4};
    CHECK_THROWS_AS(paperlab::cylindrical_start(axis, &th, &rz), paperlab::DomainError);
}
