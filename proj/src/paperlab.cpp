#include "torusbif/paperlab.hpp"

#include <cmath>
#include <cstdio>

namespace torusbif::paperlab {

namespace {

double rho(double x, double y) {
    const double r2 = x * x + y * y;
    if (r2 <= 1e-24) throw DomainError("rho(x,y) evaluated on the z-axis");
    return 1.0 / std::sqrt(r2);
}

double P1(double x, double y, double z, double mu, double a) {
    return 10.0 * x * (3.0 * mu + a * (9.0 + 4.0 * x * x + 3.0 * z * z)) -
           30.0 * x * rho(x, y) * (z + mu + a * (1.0 + 4.0 * x * x + z * z));
}

double P2(double x, double y, double z, double b) {
    return 10.0 * b * x * (9.0 + 4.0 * x * x + 3.0 * z * z) -
           30.0 * b * x * rho(x, y) * (1.0 + 4.0 * x * x + z * z);
}

double Q(double x, double y, double z, double mu, double a) {
    // The a^2 group belongs inside the -30*pi*y bracket; the printed line
    // break detaches it, and only this grouping reproduces the closed-form
    // second averaged function.
    const double y2 = y * y, z2 = z * z;
    return -30.0 * M_PI * y *
               (15.0 * (mu * mu - 1.0) + 20.0 * a * (mu * (4.0 * y2 + 3.0 * z2 + 9.0) + 3.0 * z) +
                3.0 * a * a *
                    (24.0 * y2 * y2 + 40.0 * y2 * (z2 + 5.0) +
                     15.0 * (z2 * z2 + 6.0 * z2 + 5.0))) +
           150.0 * M_PI * y * rho(x, y) *
               (3.0 * mu * mu + 6.0 * mu * (2.0 * a * (4.0 * y2 + z2 + 1.0) + z) +
                a * (3.0 * a *
                         (24.0 * y2 * y2 + 8.0 * y2 * (3.0 * z2 + 5.0) +
                          3.0 * (z2 + 1.0) * (z2 + 1.0)) +
                     8.0 * y2 * z + 6.0 * z2 * z + 6.0 * z) -
                3.0);
}

double R1(double x, double y, double z, double mu, double a) {
    return 30.0 * x * x * (1.0 - 2.0 * a * z) * rho(x, y) +
           15.0 * (a * (2.0 * x * x * z + z * z * z + z) + mu * z - 1.0);
}

double R2(double x, double y, double z, double mu, double a, double b) {
    const double y2 = y * y, z2 = z * z;
    return -225.0 * M_PI * a * a * z *
               (8.0 * y2 * y2 + 12.0 * y2 * (z2 + 3.0) + 3.0 * (z2 + 1.0) * (z2 + 1.0)) -
           450.0 * M_PI * a * (y2 * (4.0 * mu * z - 6.0) + (z2 + 1.0) * (2.0 * mu * z - 1.0)) +
           15.0 * b * (2.0 * x * x * z + z * z * z + z) -
           225.0 * M_PI * ((mu * mu - 1.0) * z - 2.0 * mu) +
           60.0 * rho(x, y) *
               (5.0 * M_PI * y2 *
                    (a * ((6.0 * a * z - 1.0) * (4.0 * y2 + 3.0 * z2) + 18.0 * a * z +
                          12.0 * mu * z - 9.0) -
                     3.0 * mu) -
                b * x * x * z);
}

/// Full 3D right-hand side at a given eps (the printed O(eps^3) tail is zero).
void rhs3(double x, double y, double z, double mu, double eps, const PaperParams& p,
          double* out) {
    out[0] = -y + eps * P1(x, y, z, mu, p.a) + eps * eps * P2(x, y, z, p.b);
    out[1] = x + eps * eps * Q(x, y, z, mu, p.a);
    out[2] = eps * R1(x, y, z, mu, p.a) + eps * eps * R2(x, y, z, mu, p.a, p.b);
}

/// First-order term of the reduced (r, z) system.
Vec2 reduced_F1(double th, double r, double z, double mu, const PaperParams& p) {
    const double x = r * std::cos(th), y = r * std::sin(th);
    const double p1 = P1(x, y, z, mu, p.a);
    const double r1 = R1(x, y, z, mu, p.a);
    return {std::cos(th) * p1, r1};
}

/// Second-order term of the reduced system.
Vec2 reduced_F2(double th, double r, double z, double mu, const PaperParams& p) {
    const double ct = std::cos(th), st = std::sin(th);
    const double x = r * ct, y = r * st;
    const double p1 = P1(x, y, z, mu, p.a);
    const double p2 = P2(x, y, z, p.b);
    const double q = Q(x, y, z, mu, p.a);
    const double r1 = R1(x, y, z, mu, p.a);
    const double r2 = R2(x, y, z, mu, p.a, p.b);
    return {ct * st * p1 * p1 / r + ct * p2 + st * q, st * p1 * r1 / r + r2};
}

/// Exact quotient field dr/dtheta, dz/dtheta of the 3D flow.
Vec2 reduced_exact(double th, double r, double z, double mu, double eps, const PaperParams& p) {
    if (r <= 0.0) throw DomainError("cylindrical reduction requires r > 0");
    const double x = r * std::cos(th), y = r * std::sin(th);
    double f[3];
    rhs3(x, y, z, mu, eps, p, f);
    const double theta_dot = (x * f[1] - y * f[0]) / (r * r);
    if (theta_dot <= 0.0)
        throw DomainError("theta' <= 0: cylindrical reduction not valid here");
    const double r_dot = (x * f[0] + y * f[1]) / r;
    return {r_dot / theta_dot, f[2] / theta_dot};
}

}  // namespace

ode::FieldSpec field_3d(const PaperParams& p) {
    ode::FieldSpec f;
    f.dimension = 3;
    f.period = 2.0 * M_PI;  // autonomous; period is nominal
    f.order = 2;
    f.terms = {
        [p](double, const double* v, double mu, double* out) {
            out[0] = P1(v[0], v[1], v[2], mu, p.a);
            out[1] = 0.0;
            out[2] = R1(v[0], v[1], v[2], mu, p.a);
        },
        [p](double, const double* v, double mu, double* out) {
            out[0] = P2(v[0], v[1], v[2], p.b);
            out[1] = Q(v[0], v[1], v[2], mu, p.a);
            out[2] = R2(v[0], v[1], v[2], mu, p.a, p.b);
        },
    };
    f.base = [](double, const double* v, double, double* out) {
        out[0] = -v[1];
        out[1] = v[0];
        out[2] = 0.0;
    };
    return f;
}

ode::FieldSpec reduce_cylindrical(const PaperParams& p) {
    ode::FieldSpec f;
    f.dimension = 2;
    f.period = 2.0 * M_PI;
    f.order = 2;
    f.terms = {
        [p](double th, const double* v, double mu, double* out) {
            if (v[0] <= 0.0) throw DomainError("cylindrical reduction requires r > 0");
            const Vec2 r = reduced_F1(th, v[0], v[1], mu, p);
            out[0] = r.x;
            out[1] = r.y;
        },
        [p](double th, const double* v, double mu, double* out) {
            if (v[0] <= 0.0) throw DomainError("cylindrical reduction requires r > 0");
            const Vec2 r = reduced_F2(th, v[0], v[1], mu, p);
            out[0] = r.x;
            out[1] = r.y;
        },
    };
    // The truncation error of the printed two-term form, recovered by
    // subtracting it from the exact quotient field.
    f.remainder = [p](double th, const double* v, double mu, double eps, double* out) {
        if (std::fabs(eps) < 1e-9) {
            out[0] = out[1] = 0.0;
            return;
        }
        const Vec2 exact = reduced_exact(th, v[0], v[1], mu, eps, p);
        const Vec2 f1 = reduced_F1(th, v[0], v[1], mu, p);
        const Vec2 f2 = reduced_F2(th, v[0], v[1], mu, p);
        const double e3 = eps * eps * eps;
        out[0] = (exact.x - eps * f1.x - eps * eps * f2.x) / e3;
        out[1] = (exact.y - eps * f1.y - eps * eps * f2.y) / e3;
    };
    return f;
}

Vec2 g1_closed(double r, double z, double mu, double a) {
    const double u = r - 1.0;
    const double s = u * u + z * z;
    return {30.0 * M_PI * (u * mu - z + a * u * s), 30.0 * M_PI * (u + mu * z + a * z * s)};
}

Vec2 g2_closed(double r, double z, double b) {
    const double u = r - 1.0;
    const double s = u * u + z * z;
    return {30.0 * M_PI * b * u * s, 30.0 * M_PI * b * z * s};
}

std::pair<std::string, std::string> g1_expression(double a) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "30*pi*((x-1)*mu - y + (%.17g)*(x-1)*((x-1)^2 + y^2))", a);
    std::string first = buf;
    std::snprintf(buf, sizeof buf,
                  "30*pi*((x-1) + mu*y + (%.17g)*y*((x-1)^2 + y^2))", a);
    return {first, buf};
}

std::pair<std::string, std::string> g2_expression(double b) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "30*pi*(%.17g)*(x-1)*((x-1)^2 + y^2)", b);
    std::string first = buf;
    std::snprintf(buf, sizeof buf, "30*pi*(%.17g)*y*((x-1)^2 + y^2)", b);
    return {first, buf};
}

nsmap::TensorSeries tensor_series(const PaperParams& p) {
    // Shift to the fixed point (1,0): Dg1 = 30*pi*[[mu,-1],[1,mu]], so
    // omega0 = 30*pi and alpha'(mu) = 30*pi.  The cubic parts of g1, g2 are
    // radial with coefficients 30*pi*a and 30*pi*b; quadratic parts vanish.
    // Along the critical curve mu(eps) = mu1*eps + ..., the order-2 linear
    // block picks up alpha' * mu1 * Id with mu1 = -omega0^2 / (2 alpha').
    const double w0 = 30.0 * M_PI;
    const double alpha_prime = 30.0 * M_PI;
    const double mu1 = -w0 * w0 / (2.0 * alpha_prime);

    nsmap::TensorSeries ts;
    ts.l = 1;
    ts.k = 2;
    ts.omega0 = w0;
    ts.A = {Mat2{0.0, -w0, w0, 0.0}, Mat2{alpha_prime * mu1, 0.0, 0.0, alpha_prime * mu1}};
    ts.B = {Bilinear2{}, Bilinear2{}};
    ts.C = {cubic_ztensor(Complex(30.0 * M_PI * p.a, 0.0)),
            cubic_ztensor(Complex(30.0 * M_PI * p.b, 0.0))};
    return ts;
}

void cylindrical_start(const double xyz[3], double* theta0, Vec2* rz) {
    const double r = std::hypot(xyz[0], xyz[1]);
    if (r <= 0.0) throw DomainError("start lies on the z-axis");
    double th = std::atan2(xyz[1], xyz[0]);
    if (th < 0.0) th += 2.0 * M_PI;
    *theta0 = th;
    *rz = {r, xyz[2]};
}

}  // namespace torusbif::paperlab
