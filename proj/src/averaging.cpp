#include "torusbif/averaging.hpp"

#include <algorithm>
#include <cmath>

namespace torusbif::averaging {

namespace {

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

void enum_partitions(int p, int q, int len, int j, int rem_p, int rem_q, std::vector<int>& cur,
                     std::vector<std::vector<int>>& out) {
    if (j == len) {
        if (rem_p == 0 && rem_q == 0) out.push_back(cur);
        return;
    }
    const int part = j + 1;  // parts of size j+1 (cur[j] = b_{j+1})
    for (int b = 0; b * part <= rem_p && b <= rem_q; ++b) {
        cur[j] = b;
        enum_partitions(p, q, len, j + 1, rem_p - b * part, rem_q - b, cur, out);
    }
    cur[j] = 0;
}

}  // namespace

std::vector<std::vector<int>> bell_partitions(int p, int q) {
    if (q < 1 || q > p) throw AveragingError("bell: require 1 <= q <= p");
    const int len = p - q + 1;
    std::vector<std::vector<int>> out;
    std::vector<int> cur(len, 0);
    enum_partitions(p, q, len, 0, p, q, cur, out);
    return out;
}

double bell(int p, int q, const std::vector<double>& xs) {
    if (q < 1 || q > p) throw AveragingError("bell: require 1 <= q <= p");
    if ((int)xs.size() != p - q + 1)
        throw AveragingError("bell: expected " + std::to_string(p - q + 1) + " arguments, got " +
                             std::to_string(xs.size()));
    double sum = 0.0;
    for (const auto& b : bell_partitions(p, q)) {
        double term = factorial(p);
        for (int j = 0; j < (int)b.size(); ++j) {
            term /= factorial(b[j]);
            term *= std::pow(xs[j] / factorial(j + 1), b[j]);
        }
        sum += term;
    }
    return sum;
}

namespace {

/// Derivative tensors of one term F_j(t, .; mu) at a fixed time.
struct TermDerivs {
    Mat2 d1;
    Bilinear2 d2;
    Trilinear2 d3;
    bool have1 = false, have2 = false, have3 = false;
};

struct YRhs {
    const ode::FieldSpec* field;
    double mu;
    Vec2 x;
    int up_to;
    const AveragingOptions* opts;

    // Scratch: derivative tensors per term, rebuilt at each time sample.
    mutable std::vector<TermDerivs> derivs;

    PlanarMap term_at(double t, int j) const {
        const auto& f = field->terms[j];
        return [&f, t, this](Vec2 v) {
            double in[2] = {v.x, v.y}, out[2];
            f(t, in, mu, out);
            return Vec2{out[0], out[1]};
        };
    }

    Vec2 apply_deriv(double t, int term_idx, int m, const std::vector<Vec2>& args) const {
        TermDerivs& d = derivs[term_idx];
        switch (m) {
            case 1:
                if (!d.have1) {
                    d.d1 = jacobian_fd(term_at(t, term_idx), x, opts->h1, true);
                    d.have1 = true;
                }
                return d.d1 * args[0];
            case 2:
                if (!d.have2) {
                    d.d2 = bilinear_fd(term_at(t, term_idx), x, opts->h2);
                    d.have2 = true;
                }
                return d.d2.apply(args[0], args[1]);
            case 3:
                if (!d.have3) {
                    d.d3 = trilinear_fd(term_at(t, term_idx), x, opts->h3);
                    d.have3 = true;
                }
                return d.d3.apply(args[0], args[1], args[2]);
            default:
                throw AveragingError("derivative order m > 3 requested");
        }
    }

    void operator()(double t, const double* y, double* dy) const {
        for (auto& d : derivs) d = TermDerivs{};
        double in[2] = {x.x, x.y};
        std::vector<Vec2> ys(up_to);
        for (int i = 0; i < up_to; ++i) ys[i] = {y[2 * i], y[2 * i + 1]};

        for (int i = 1; i <= up_to; ++i) {
            double fi[2];
            field->terms[i - 1](t, in, mu, fi);
            Vec2 acc = factorial(i) * Vec2{fi[0], fi[1]};

            for (int l = 1; l <= i - 1; ++l) {
                const double scale = factorial(i) / factorial(l);
                for (int m = 1; m <= l; ++m) {
                    // Expand the Bell polynomial B_{l,m} over its partitions and
                    // feed each monomial to the m-th Frechet derivative of F_{i-l}.
                    for (const auto& b : bell_partitions(l, m)) {
                        double coef = factorial(l);
                        std::vector<Vec2> args;
                        args.reserve(m);
                        for (int r = 0; r < (int)b.size(); ++r) {
                            coef /= factorial(b[r]);
                            coef /= std::pow(factorial(r + 1), b[r]);
                            for (int rep = 0; rep < b[r]; ++rep) args.push_back(ys[r]);
                        }
                        acc = acc + (scale * coef) * apply_deriv(t, i - l - 1, m, args);
                    }
                }
            }
            dy[2 * (i - 1)] = acc.x;
            dy[2 * (i - 1) + 1] = acc.y;
        }
    }
};

}  // namespace

std::vector<Vec2> y_sequence(const ode::FieldSpec& field, double t, Vec2 x, double mu, int up_to,
                             const AveragingOptions& opts) {
    if (up_to < 1 || up_to > field.order)
        throw AveragingError("y_sequence: order out of range");
    if (field.dimension != 2)
        throw AveragingError("y_sequence: planar fields only");
    if (field.base)
        throw AveragingError("y_sequence: field is not in standard form (nonzero base term)");
    if (norm_inf(x) > field.box_radius)
        throw AveragingError("y_sequence: x outside the admissible box");

    YRhs rhs{&field, mu, x, up_to, &opts};
    rhs.derivs.resize(field.terms.size());

    std::array<double, ode::kMaxDim> y{};
    const int nsteps =
        std::max(16, (int)std::ceil(opts.quad_steps * std::fabs(t) / field.period));
    ode::rk4_fixed([&rhs](double s, const double* yy, double* dyy) { rhs(s, yy, dyy); },
                   2 * up_to, 0.0, t, y.data(), nsteps, 1e12);

    std::vector<Vec2> out(up_to);
    for (int i = 0; i < up_to; ++i) out[i] = {y[2 * i], y[2 * i + 1]};
    return out;
}

Vec2 averaged(const ode::FieldSpec& field, int i, Vec2 x, double mu,
              const AveragingOptions& opts) {
    const auto ys = y_sequence(field, field.period, x, mu, i, opts);
    double fi = 1.0;
    for (int j = 2; j <= i; ++j) fi *= j;
    return ys[i - 1] / fi;
}

int first_nonvanishing(const ode::FieldSpec& field, const std::vector<Vec2>& probe_grid,
                       double mu, const AveragingOptions& opts) {
    if (probe_grid.empty()) throw AveragingError("first_nonvanishing: empty probe grid");
    for (int i = 1; i <= field.order; ++i) {
        double sup = 0.0;
        for (const Vec2& x : probe_grid) sup = std::max(sup, norm(averaged(field, i, x, mu, opts)));
        if (sup > opts.vanish_tol) return i;
    }
    throw AveragingError("all averaged functions vanish up to order " +
                         std::to_string(field.order));
}

Vec2 AveragedTable::g(int i, Vec2 x, double mu) const {
    return averaged(*field, i, x, mu, opts);
}

PlanarField AveragedTable::g_fn(int i) const {
    const ode::FieldSpec* f = field;
    const AveragingOptions o = opts;
    return [f, o, i](Vec2 x, double mu) { return averaged(*f, i, x, mu, o); };
}

AveragedTable make_table(const ode::FieldSpec& field, const std::vector<Vec2>& probe_grid,
                         double mu, const AveragingOptions& opts) {
    AveragedTable t;
    t.field = &field;
    t.opts = opts;
    t.order = field.order;
    t.vanish_tol = opts.vanish_tol;
    t.l = first_nonvanishing(field, probe_grid, mu, opts);
    return t;
}

}  // namespace torusbif::averaging
