#include <doctest.h>

#include <cmath>

#include "torusbif/averaging.hpp"
#include "torusbif/ode.hpp"
#include "torusbif/paperlab.hpp"

using namespace torusbif;

namespace {

ode::FieldSpec zero_field() {
    ode::FieldSpec f;
    f.order = 1;
    f.terms = {[](double, const double*, double, double* out) { out[0] = out[1] = 0.0; }};
    return f;
}

ode::FieldSpec constant_field(Vec2 c) {
    ode::FieldSpec f;
    f.order = 1;
    f.terms = {[c](double, const double*, double, double* out) {
        out[0] = c.x;
        out[1] = c.y;
    }};
    return f;
}

/// x' = eps * A x with constant A.
ode::FieldSpec linear_field(Mat2 A) {
    ode::FieldSpec f;
    f.order = 1;
    f.terms = {[A](double, const double* x, double, double* out) {
        const Vec2 v = A * Vec2{x[0], x[1]};
        out[0] = v.x;
        out[1] = v.y;
    }};
    return f;
}

/// Matrix exponential by scaling and squaring of a Pade-free Taylor core.
Mat2 expm(Mat2 A) {
    int squarings = 0;
    while (norm_inf(A) > 0.25) {
        A = 0.5 * A;
        ++squarings;
    }
    Mat2 result = Mat2::identity();
    Mat2 term = Mat2::identity();
    for (int n = 1; n <= 20; ++n) {
        term = (1.0 / n) * (term * A);
        result = result + term;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

}  // namespace

TEST_CASE("zero RHS keeps the state") {
    const auto f = zero_field();
    double x0[2] = {0.4, -0.7};
    const auto r = ode::integrate(f, x0, 0.0, f.period, 0.3, 0.5, 1e-10);
    CHECK(r.state[0] == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(r.state[1] == doctest::Approx(-0.7).epsilon(1e-14));
}

TEST_CASE("constant field integrates to eps*T") {
    const auto f = constant_field({1.0, 0.0});
    const double eps = 0.37;
    double x0[2] = {0.0, 0.0};
    const auto r = ode::integrate(f, x0, 0.0, f.period, 0.0, eps, 1e-12);
    CHECK(r.state[0] == doctest::Approx(eps * f.period).epsilon(1e-12));
}

TEST_CASE("jacobian is the identity at eps = 0") {
    const auto f = linear_field({0.3, -1.1, 0.9, 0.2});
    const double x0[2] = {0.2, 0.1};
    const auto r = ode::flow_with_jacobian(f, x0, f.period, 0.0, 0.0, 1e-12);
    CHECK(std::fabs(r.jacobian2().a - 1.0) < 1e-12);
    CHECK(std::fabs(r.jacobian2().d - 1.0) < 1e-12);
    CHECK(std::fabs(r.jacobian2().b) < 1e-12);
    CHECK(std::fabs(r.jacobian2().c) < 1e-12);
}

TEST_CASE("variational jacobian matches the matrix exponential") {
    const Mat2 A{0.4, -1.3, 1.1, -0.2};
    const auto f = linear_field(A);
    const double eps = 0.8;
    const double x0[2] = {0.3, -0.4};
    const auto r = ode::flow_with_jacobian(f, x0, f.period, 0.0, eps, 1e-11);
    const Mat2 expected = expm(eps * f.period * A);
    CHECK(norm_inf(r.jacobian2() - expected) < 1e-8 * norm_inf(expected));
}

TEST_CASE("blow-up raises") {
    ode::FieldSpec f;
    f.order = 1;
    f.terms = {[](double, const double* x, double, double* out) {
        out[0] = x[0] * x[0] + 1.0;
        out[1] = 0.0;
    }};
    f.box_radius = 50.0;
    double x0[2] = {1.0, 0.0};
    CHECK_THROWS_AS(ode::integrate(f, x0, 0.0, 1e3, 0.0, 1.0, 1e-8), ode::BlowUpError);
}

TEST_CASE("backward integration inverts the flow") {
    const auto f = linear_field({0.2, -1.0, 1.0, 0.1});
    double x[2] = {1.0, 0.5};
    auto fw = ode::integrate(f, x, 0.0, f.period, 0.0, 0.4, 1e-12);
    auto bw = ode::integrate(f, fw.state.data(), f.period, 0.0, 0.0, 0.4, 1e-12);
    CHECK(bw.state[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(bw.state[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("field periodicity defect of the reduced paper system") {
    const auto f = paperlab::reduce_cylindrical({1.0, 1.0});
    CHECK(f.periodicity_defect(0.05) <= 1e-12);
}

TEST_CASE("paper trajectory stays near the unit circle (3D field)") {
    paperlab::PaperParams p;
    p.a = -1.0;
    p.b = 0.0;
    const auto f3 = paperlab::field_3d(p);
    double x[3] = {0.98, 0.21, 0.0};
    std::vector<std::pair<double, std::array<double, ode::kMaxDim>>> dense;
    ode::integrate(f3, x, 0.0, 1250.0, 0.0, 1e-3, 1e-9, &dense);
    double worst = 0.0;
    for (const auto& [t, y] : dense) {
        const double r = std::hypot(y[0], y[1]);
        worst = std::max(worst, std::hypot(r - 1.0, y[2]));
    }
    CHECK(worst < 2.0);
}

TEST_CASE("tolerance halving converges monotonically on the paper system") {
    const auto f = paperlab::reduce_cylindrical({-1.0, 0.0});
    double x0[2] = {1.1, 0.2};
    const auto ref = ode::integrate(f, x0, 0.0, f.period, 0.0, 1e-3, 1e-13);
    double prev_err = 1e300;
    int improvements = 0;
    for (double tol = 1e-5; tol >= 1e-11; tol *= 0.01) {
        const auto r = ode::integrate(f, x0, 0.0, f.period, 0.0, 1e-3, tol);
        const double err = std::hypot(r.state[0] - ref.state[0], r.state[1] - ref.state[1]);
        if (err < prev_err) ++improvements;
        prev_err = err;
    }
    CHECK(improvements >= 3);
}

TEST_CASE("flow expansion error has log-log slope >= 2.8 (order-3 remainder)") {
    const auto f = paperlab::reduce_cylindrical({-1.0, 0.0});
    const Vec2 x{1.1, 0.2};
    averaging::AveragingOptions aopts;
    aopts.quad_steps = 8192;
    const auto ys = averaging::y_sequence(f, f.period, x, 0.0, 2, aopts);

    std::vector<double> le, lerr;
    for (double eps = 1e-4; eps <= 1.001e-2; eps *= std::pow(100.0, 1.0 / 6)) {
        double x0[2] = {x.x, x.y};
        const auto r = ode::integrate(f, x0, 0.0, f.period, 0.0, eps, 1e-13);
        const Vec2 approx = x + eps * ys[0] + (eps * eps / 2.0) * ys[1];
        const double err =
            std::hypot(r.state[0] - approx.x, r.state[1] - approx.y);
        le.push_back(std::log(eps));
        lerr.push_back(std::log(err));
    }
    // Least-squares slope of log(err) vs log(eps).
    const int n = (int)le.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sx += le[i];
        sy += lerr[i];
        sxx += le[i] * le[i];
        sxy += le[i] * lerr[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope >= 2.8);
}

TEST_CASE("cycle stability of the reduced system at a=-1 across the critical mu") {
    const auto f = paperlab::reduce_cylindrical({-1.0, 0.0});
    auto modulus_at = [&](double mu) {
        // The fixed point of the return map sits near (1, 0) up to O(eps^2).
        Vec2 x{1.0, 0.0};
        Mat2 J;
        for (int it = 0; it < 3; ++it)
            ode::flow_fixed_with_jacobian(f, x, 0.0, f.period, mu, 1e-3, 1024, &x, &J);
        return std::abs(eigenvalues(J)[0]);
    };
    // Below the critical curve the cycle attracts (supercritical side, a<0)...
    CHECK(modulus_at(-0.1) < 1.0);
    // ...and on the torus side it repels.
    CHECK(modulus_at(0.0) > 1.0);
}
