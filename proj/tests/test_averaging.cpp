#include <doctest.h>

#include <cmath>
#include <random>

#include "torusbif/averaging.hpp"
#include "torusbif/paperlab.hpp"

using namespace torusbif;
using averaging::bell;

namespace {

// Independent oracle: enumerate set partitions of {1..p} into exactly q
// nonempty blocks (restricted growth strings); each partition contributes the
// product of x_{block size}.
void rgs_walk(int p, int q, std::vector<int>& assign, int used, const std::vector<double>& xs,
              double& sum) {
    const int i = (int)assign.size();
    if (i == p) {
        if (used != q) return;
        std::vector<int> sizes(used, 0);
        for (int a : assign) ++sizes[a];
        double prod = 1.0;
        for (int s : sizes) {
            if (s - 1 >= (int)xs.size()) return;  // monomial exceeds given arguments
            prod *= xs[s - 1];
        }
        sum += prod;
        return;
    }
    for (int b = 0; b <= used && b < q; ++b) {
        assign.push_back(b);
        rgs_walk(p, q, assign, std::max(used, b + 1), xs, sum);
        assign.pop_back();
    }
}

double bell_bruteforce(int p, int q, const std::vector<double>& xs) {
    std::vector<int> assign;
    double sum = 0.0;
    rgs_walk(p, q, assign, 0, xs, sum);
    return sum;
}

ode::FieldSpec field_from(std::vector<ode::TermFn> terms) {
    ode::FieldSpec f;
    f.order = (int)terms.size();
    f.terms = std::move(terms);
    return f;
}

}  // namespace

TEST_CASE("bell polynomial base cases") {
    CHECK(bell(1, 1, {3.7}) == 3.7);
    // B_{3,2}(x1, x2) = 3 x1 x2
    CHECK(bell(3, 2, {2.0, 5.0}) == doctest::Approx(30.0).epsilon(1e-15));
    // Sum over q of B_{p,q}(1,..,1) is the Bell number; p = 4 -> 15.
    double s = 0.0;
    for (int q = 1; q <= 4; ++q) s += bell(4, q, std::vector<double>(4 - q + 1, 1.0));
    CHECK(s == doctest::Approx(15.0).epsilon(1e-15));
    CHECK_THROWS_AS(bell(3, 2, {1.0}), averaging::AveragingError);
    CHECK_THROWS_AS(bell(2, 3, {1.0}), averaging::AveragingError);
}

TEST_CASE("bell matches brute-force set-partition enumeration, p <= 6") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int p = 1; p <= 6; ++p)
        for (int q = 1; q <= p; ++q)
            for (int rep = 0; rep < 20; ++rep) {
                std::vector<double> xs(p - q + 1);
                for (double& v : xs) v = u(rng);
                const double a = bell(p, q, xs);
                const double b = bell_bruteforce(p, q, xs);
                CHECK(a == doctest::Approx(b).epsilon(1e-12));
            }
}

TEST_CASE("y1 of a time-independent term is t*F1") {
    const auto f = field_from({[](double, const double* x, double, double* out) {
        out[0] = 0.3 * x[0] - x[1];
        out[1] = x[0] * x[1];
    }});
    const Vec2 x{1.2, -0.4};
    const auto ys = averaging::y_sequence(f, 1.7, x, 0.0, 1);
    CHECK(ys[0].x == doctest::Approx(1.7 * (0.3 * 1.2 + 0.4)).epsilon(1e-9));
    CHECK(ys[0].y == doctest::Approx(1.7 * (1.2 * -0.4)).epsilon(1e-9));
}

TEST_CASE("y1 is linear in F1 (superposition on random field pairs)") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 5; ++rep) {
        const double a1 = u(rng), a2 = u(rng), b1 = u(rng), b2 = u(rng);
        auto termA = [a1, a2](double t, const double* x, double, double* out) {
            out[0] = a1 * std::sin(t) * x[0];
            out[1] = a2 * x[1] * x[1];
        };
        auto termB = [b1, b2](double t, const double* x, double, double* out) {
            out[0] = b1 * std::cos(t) + x[1];
            out[1] = b2 * x[0];
        };
        auto termSum = [termA, termB](double t, const double* x, double mu, double* out) {
            double oa[2], ob[2];
            termA(t, x, mu, oa);
            termB(t, x, mu, ob);
            out[0] = oa[0] + ob[0];
            out[1] = oa[1] + ob[1];
        };
        const Vec2 x{0.8, 0.3};
        const Vec2 yA = averaging::y_sequence(field_from({termA}), 2 * M_PI, x, 0, 1)[0];
        const Vec2 yB = averaging::y_sequence(field_from({termB}), 2 * M_PI, x, 0, 1)[0];
        const Vec2 yS = averaging::y_sequence(field_from({termSum}), 2 * M_PI, x, 0, 1)[0];
        CHECK(norm(yS - yA - yB) < 1e-10 * (1.0 + norm(yA) + norm(yB)));
    }
}

TEST_CASE("zero field has vanishing averages and no leading order") {
    auto zero = [](double, const double*, double, double* out) { out[0] = out[1] = 0.0; };
    const auto f = field_from({zero, zero});
    CHECK(norm(averaging::averaged(f, 1, {0.5, 0.5}, 0.0)) == 0.0);
    CHECK(norm(averaging::averaged(f, 2, {0.5, 0.5}, 0.0)) == 0.0);
    CHECK_THROWS_AS(averaging::first_nonvanishing(f, {{0.5, 0.5}}, 0.0),
                    averaging::AveragingError);
}

TEST_CASE("zero-mean F1 with constant F2 gives l = 2") {
    const auto f = field_from({[](double t, const double*, double, double* out) {
                                   out[0] = std::cos(t);
                                   out[1] = std::sin(t);
                               },
                               [](double, const double*, double, double* out) {
                                   out[0] = 0.4;
                                   out[1] = -0.2;
                               }});
    CHECK(averaging::first_nonvanishing(f, {{0.0, 0.0}, {0.7, -0.3}}, 0.0) == 2);
}

TEST_CASE("paper system: l = 1 and y2(T) = 2 g2") {
    const auto f = paperlab::reduce_cylindrical({1.0, 1.0});
    std::vector<Vec2> grid;
    for (double r = 0.9; r <= 1.11; r += 0.1)
        for (double z = -0.1; z <= 0.11; z += 0.1) grid.push_back({r, z});
    CHECK(averaging::first_nonvanishing(f, grid, 0.0) == 1);

    const auto ys = averaging::y_sequence(f, f.period, {1.1, 0.2}, 0.0, 2);
    const Vec2 g2 = paperlab::g2_closed(1.1, 0.2, 1.0);
    CHECK(norm(ys[1] - 2.0 * g2) < 1e-6 * (1.0 + 2.0 * norm(g2)));
}

TEST_CASE("averaged g1/g2 of the paper system at the spec points") {
    const auto fa = paperlab::reduce_cylindrical({1.0, 0.0});
    const Vec2 g1 = averaging::averaged(fa, 1, {1.1, 0.2}, 0.0);
    CHECK(g1.x == doctest::Approx(30 * M_PI * -0.195).epsilon(1e-6));
    CHECK(g1.y == doctest::Approx(30 * M_PI * 0.11).epsilon(1e-6));

    const auto fb = paperlab::reduce_cylindrical({0.0, 1.0});
    const Vec2 g2 = averaging::averaged(fb, 2, {1.1, 0.2}, 0.0);
    CHECK(g2.x == doctest::Approx(0.47124).epsilon(1e-4));
    CHECK(g2.y == doctest::Approx(0.94248).epsilon(1e-4));
    CHECK(g2.x == doctest::Approx(30 * M_PI * 0.1 * 0.05).epsilon(1e-6));
    CHECK(g2.y == doctest::Approx(30 * M_PI * 0.2 * 0.05).epsilon(1e-6));
}

TEST_CASE("derivative order above 3 is rejected") {
    auto zero = [](double, const double*, double, double* out) { out[0] = out[1] = 0.0; };
    const auto f = field_from({zero, zero, zero, zero, zero});
    // up_to = 5 would need a 4th Frechet derivative inside the recursion.
    CHECK_THROWS_WITH_AS(averaging::y_sequence(f, 1.0, {0, 0}, 0, 5),
                         doctest::Contains("m > 3"), averaging::AveragingError);
}
