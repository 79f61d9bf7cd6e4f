#include "torusbif/ode.hpp"

#include <algorithm>
#include <cstring>

namespace torusbif::ode {

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

double inf_norm(const double* y, int n) {
    double m = 0.0;
    for (int i = 0; i < n; ++i) m = std::max(m, std::fabs(y[i]));
    return m;
}

}  // namespace

RawResult rk45(const RawRhs& f, int n, double t0, double t1, const double* y0,
               const Options& opt,
               std::vector<std::pair<double, std::array<double, kMaxDim>>>* dense) {
    RawResult res;
    if (n > kMaxDim) throw OdeError("system dimension exceeds kMaxDim");
    std::array<double, kMaxDim> y{}, ynew{}, k1{}, k2{}, k3{}, k4{}, k5{}, k6{}, k7{}, tmp{};
    std::copy(y0, y0 + n, y.begin());

    const double dir = (t1 >= t0) ? 1.0 : -1.0;
    const double span = std::fabs(t1 - t0);
    if (span == 0.0) {
        std::copy(y.begin(), y.begin() + n, res.y.begin());
        return res;
    }

    double t = t0;
    double h = dir * std::min(span, std::max(1e-8, span / 100.0));
    double err_prev = 1.0;
    bool first = true;

    f(t, y.data(), k1.data());
    if (dense) dense->push_back({t, y});

    while ((t1 - t) * dir > 0.0) {
        if (res.steps++ > opt.max_steps) throw MaxStepsError();
        if ((t + h - t1) * dir > 0.0) h = t1 - t;

        auto stage = [&](double ci, double* k, auto... rows) {
            const double coef[] = {rows...};
            for (int i = 0; i < n; ++i) {
                double s = 0.0;
                const double* ks[] = {k1.data(), k2.data(), k3.data(), k4.data(), k5.data(),
                                      k6.data()};
                for (size_t j = 0; j < sizeof...(rows); ++j) s += coef[j] * ks[j][i];
                tmp[i] = y[i] + h * s;
            }
            f(t + ci * h, tmp.data(), k);
        };
        stage(c2, k2.data(), a21);
        stage(c3, k3.data(), a31, a32);
        stage(c4, k4.data(), a41, a42, a43);
        stage(c5, k5.data(), a51, a52, a53, a54);
        stage(1.0, k6.data(), a61, a62, a63, a64, a65);
        for (int i = 0; i < n; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        f(t + h, ynew.data(), k7.data());

        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                   e6 * k6[i] + e7 * k7[i]);
            const double sc = opt.tol + opt.tol * std::max(std::fabs(y[i]), std::fabs(ynew[i]));
            err += (ei / sc) * (ei / sc);
        }
        err = std::sqrt(err / n);

        if (err <= 1.0) {
            t += h;
            y = ynew;
            k1 = k7;  // FSAL
            res.est_error += err * opt.tol;
            if (inf_norm(y.data(), n) > opt.box) throw BlowUpError(t);
            if (dense) dense->push_back({t, y});
            const double fac = first ? 0.9 * std::pow(std::max(err, 1e-10), -0.2)
                                     : 0.9 * std::pow(std::max(err, 1e-10), -0.14) *
                                           std::pow(err_prev, 0.08);
            h *= std::clamp(fac, 0.2, 5.0);
            err_prev = std::max(err, 1e-10);
            first = false;
        } else {
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
        }
        if (std::fabs(h) < 1e-15 * std::max(1.0, std::fabs(t)))
            throw OdeError("step size underflow");
    }

    std::copy(y.begin(), y.begin() + n, res.y.begin());
    return res;
}

void rk4_fixed(const RawRhs& f, int n, double t0, double t1, double* y, int nsteps, double box) {
    std::array<double, kMaxDim> k1{}, k2{}, k3{}, k4{}, tmp{};
    const double h = (t1 - t0) / nsteps;
    double t = t0;
    for (int s = 0; s < nsteps; ++s) {
        f(t, y, k1.data());
        for (int i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        f(t + 0.5 * h, tmp.data(), k2.data());
        for (int i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        f(t + 0.5 * h, tmp.data(), k3.data());
        for (int i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
        f(t + h, tmp.data(), k4.data());
        for (int i = 0; i < n; ++i)
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        t = t0 + (s + 1) * h;
        if (inf_norm(y, n) > box) throw BlowUpError(t);
    }
}

void FieldSpec::rhs(double t, const double* x, double mu, double eps, double* out) const {
    std::array<double, 3> term{};
    for (int i = 0; i < dimension; ++i) out[i] = 0.0;
    if (base) {
        base(t, x, mu, term.data());
        for (int j = 0; j < dimension; ++j) out[j] += term[j];
    }
    double ep = 1.0;
    for (int i = 0; i < order; ++i) {
        ep *= eps;
        if (ep == 0.0) break;
        terms[i](t, x, mu, term.data());
        for (int j = 0; j < dimension; ++j) out[j] += ep * term[j];
    }
    if (remainder) {
        ep *= eps;
        if (ep != 0.0) {
            remainder(t, x, mu, eps, term.data());
            for (int j = 0; j < dimension; ++j) out[j] += ep * term[j];
        }
    }
}

RawRhs FieldSpec::make_rhs(double mu, double eps) const {
    return [this, mu, eps](double t, const double* y, double* dy) { rhs(t, y, mu, eps, dy); };
}

double FieldSpec::periodicity_defect(double mu) const {
    double worst = 0.0, scale = 1.0;
    std::array<double, 3> a{}, b{}, x{};
    for (int it = 0; it < 5; ++it) {
        const double t = 0.17 + 1.31 * it;
        for (int j = 0; j < dimension; ++j) x[j] = 0.9 + 0.07 * j + 0.03 * it;
        for (const auto& f : terms) {
            f(t, x.data(), mu, a.data());
            f(t + period, x.data(), mu, b.data());
            for (int j = 0; j < dimension; ++j) {
                worst = std::max(worst, std::fabs(a[j] - b[j]));
                scale = std::max(scale, std::fabs(a[j]));
            }
        }
    }
    return worst / scale;
}

FlowResult integrate(const FieldSpec& field, const double* x0, double t0, double t1, double mu,
                     double eps, double tol,
                     std::vector<std::pair<double, std::array<double, kMaxDim>>>* dense) {
    Options opt;
    opt.tol = tol;
    opt.box = field.box_radius;
    const RawRhs f = field.make_rhs(mu, eps);
    const RawResult raw = rk45(f, field.dimension, t0, t1, x0, opt, dense);
    FlowResult res;
    res.dimension = field.dimension;
    for (int i = 0; i < field.dimension; ++i) res.state[i] = raw.y[i];
    for (int i = 0; i < field.dimension; ++i) res.jacobian[i * field.dimension + i] = 1.0;
    res.steps = raw.steps;
    res.est_error = raw.est_error;
    return res;
}

namespace {

/// Augments the field RHS with first variational equations; layout [x, J row-major].
RawRhs variational_rhs(const FieldSpec& field, double mu, double eps) {
    const int d = field.dimension;
    return [&field, mu, eps, d](double t, const double* y, double* dy) {
        field.rhs(t, y, mu, eps, dy);
        // Central-difference Jacobian of the RHS.
        double nrm = 0.0;
        for (int i = 0; i < d; ++i) nrm += y[i] * y[i];
        const double h = std::max(1e-7, 1e-7 * std::sqrt(nrm));
        double df[9];
        std::array<double, 3> xp{}, xm{}, fp{}, fm{};
        for (int j = 0; j < d; ++j) {
            for (int i = 0; i < d; ++i) { xp[i] = y[i]; xm[i] = y[i]; }
            xp[j] += h;
            xm[j] -= h;
            field.rhs(t, xp.data(), mu, eps, fp.data());
            field.rhs(t, xm.data(), mu, eps, fm.data());
            for (int i = 0; i < d; ++i) df[i * d + j] = (fp[i] - fm[i]) / (2.0 * h);
        }
        // dJ/dt = Df * J
        const double* J = y + d;
        double* dJ = dy + d;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double s = 0.0;
                for (int k = 0; k < d; ++k) s += df[i * d + k] * J[k * d + j];
                dJ[i * d + j] = s;
            }
    };
}

}  // namespace

FlowResult flow_with_jacobian(const FieldSpec& field, const double* x0, double tspan, double mu,
                              double eps, double tol) {
    const int d = field.dimension;
    std::array<double, kMaxDim> y{};
    for (int i = 0; i < d; ++i) y[i] = x0[i];
    for (int i = 0; i < d; ++i) y[d + i * d + i] = 1.0;

    Options opt;
    opt.tol = tol;
    opt.box = field.box_radius;
    const RawRhs f = variational_rhs(field, mu, eps);
    const RawResult raw = rk45(f, d + d * d, 0.0, tspan, y.data(), opt);

    FlowResult res;
    res.dimension = d;
    for (int i = 0; i < d; ++i) res.state[i] = raw.y[i];
    for (int i = 0; i < d * d; ++i) res.jacobian[i] = raw.y[d + i];
    res.steps = raw.steps;
    res.est_error = raw.est_error;
    return res;
}

void flow_fixed(const FieldSpec& field, const double* x0, double t0, double t1, double mu,
                double eps, int nsteps, double* out) {
    std::array<double, kMaxDim> y{};
    for (int i = 0; i < field.dimension; ++i) y[i] = x0[i];
    rk4_fixed(field.make_rhs(mu, eps), field.dimension, t0, t1, y.data(), nsteps,
              field.box_radius);
    for (int i = 0; i < field.dimension; ++i) out[i] = y[i];
}

void flow_fixed_with_jacobian(const FieldSpec& field, Vec2 x0, double t0, double t1, double mu,
                              double eps, int nsteps, Vec2* x_out, Mat2* jac_out) {
    if (field.dimension != 2)
        throw OdeError("flow_fixed_with_jacobian handles planar fields only");
    std::array<double, kMaxDim> y{};
    y[0] = x0.x;
    y[1] = x0.y;
    y[2] = 1.0;
    y[5] = 1.0;
    rk4_fixed(variational_rhs(field, mu, eps), 6, t0, t1, y.data(), nsteps, field.box_radius);
    if (x_out) *x_out = {y[0], y[1]};
    if (jac_out) *jac_out = {y[2], y[3], y[4], y[5]};
}

}  // namespace torusbif::ode
