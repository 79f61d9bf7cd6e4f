#include "torusbif/nsmap.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace torusbif::nsmap {

namespace {

constexpr Complex kI{0.0, 1.0};

/// Truncated complex power series; c[j] is the eps^j coefficient.
struct CSeries {
    std::vector<Complex> c;

    explicit CSeries(int deg = 0) : c(deg + 1, Complex(0.0)) {}
    int deg() const { return (int)c.size() - 1; }

    CSeries mul(const CSeries& o, int out_deg) const {
        CSeries r(out_deg);
        for (int i = 0; i <= deg() && i <= out_deg; ++i) {
            if (c[i] == 0.0) continue;
            for (int j = 0; j <= o.deg() && i + j <= out_deg; ++j)
                r.c[i + j] += c[i] * o.c[j];
        }
        return r;
    }

    CSeries inv(int out_deg) const {
        if (c[0] == 0.0) throw NsError("series inverse with vanishing constant term");
        CSeries r(out_deg);
        r.c[0] = 1.0 / c[0];
        for (int m = 1; m <= out_deg; ++m) {
            Complex s = 0.0;
            for (int j = 1; j <= m && j <= deg(); ++j) s += c[j] * r.c[m - j];
            r.c[m] = -s / c[0];
        }
        return r;
    }
};

double ell1_combination(Complex eitheta, Complex g20, Complex g11, Complex g02, Complex g21,
                        double unit_root_guard) {
    if (std::abs(1.0 - eitheta) < unit_root_guard)
        throw ResonanceError("theta too close to 0 mod 2pi: ell_1 unreliable");
    const Complex em1 = 1.0 / eitheta;
    const double term1 = std::real(em1 * g21 / 2.0);
    const double term2 =
        std::real((1.0 - 2.0 * eitheta) * em1 * em1 / (2.0 * (1.0 - eitheta)) * g20 * g11);
    return term1 - term2 - 0.5 * std::norm(g11) - 0.25 * std::norm(g02);
}

std::array<double, 4> resonance_margins(Complex lambda) {
    std::array<double, 4> m{};
    Complex p = 1.0;
    for (int k = 0; k < 4; ++k) {
        p *= lambda;
        m[k] = std::abs(p - 1.0);
    }
    return m;
}

}  // namespace

Vec2 PoincareMap::eval(Vec2 x, double mu, double eps) const {
    double in[2] = {x.x, x.y}, out[2];
    ode::flow_fixed(*field, in, 0.0, field->period, mu, eps, rk4_steps, out);
    return {out[0], out[1]};
}

Vec2 PoincareMap::eval_backward(Vec2 x, double mu, double eps) const {
    double in[2] = {x.x, x.y}, out[2];
    ode::flow_fixed(*field, in, 0.0, -field->period, mu, eps, rk4_steps, out);
    return {out[0], out[1]};
}

Mat2 PoincareMap::jacobian(Vec2 x, double mu, double eps) const {
    Mat2 j;
    ode::flow_fixed_with_jacobian(*field, x, 0.0, field->period, mu, eps, rk4_steps, nullptr, &j);
    return j;
}

void PoincareMap::eval_with_jacobian(Vec2 x, double mu, double eps, Vec2* px, Mat2* jac) const {
    ode::flow_fixed_with_jacobian(*field, x, 0.0, field->period, mu, eps, rk4_steps, px, jac);
}

Vec2 fixed_point(const PoincareMap& map, double mu, double eps, Vec2 seed,
                 const NsOptions& opts) {
    if (eps == 0.0) throw NsError("fixed_point requires eps != 0 (P is the identity at eps=0)");
    Vec2 x = seed;
    for (int it = 0; it < opts.newton_max; ++it) {
        Vec2 px;
        Mat2 J;
        map.eval_with_jacobian(x, mu, eps, &px, &J);
        const Vec2 r = px - x;
        if (norm(r) <= opts.newton_tol) return x;
        const Mat2 A = J - Mat2::identity();
        if (std::fabs(A.det()) < 1e-30)
            throw NsError("singular Newton matrix (possible fold of fixed points)");
        const Vec2 dx = solve(A, r);
        x = x - dx;
        if (!std::isfinite(x.x) || !std::isfinite(x.y) || norm(dx) > 1e6)
            throw NsError("Newton divergence while solving P(x) = x");
    }
    throw NsError("Newton failed to reach the fixed-point tolerance");
}

EigenInfo eigen_at(const PoincareMap& map, double mu, double eps, Vec2 xi) {
    const Mat2 A = map.jacobian(xi, mu, eps);
    if (norm_inf(A - Mat2::identity()) <= 1e-10) return {Complex(1.0, 0.0), 0.0, 1.0};
    const auto ev = eigenvalues(A);
    if (ev[0].imag() == 0.0)
        throw NsError("real eigenvalues at (mu, eps): not an NS candidate");
    const Complex lam = ev[0].imag() > 0.0 ? ev[0] : ev[1];
    return {lam, std::arg(lam), std::abs(lam)};
}

NSAnalysis analyze_map(const PlanarMap& P, Vec2 xi, std::optional<Mat2> A_exact,
                       const NsOptions& opts) {
    NSAnalysis a;
    a.xi = xi;
    const double scale = 1.0 + norm(xi);
    a.A = A_exact ? *A_exact : jacobian_fd(P, xi, 1e-6 * scale, true);

    const auto ev = eigenvalues(a.A);
    if (ev[0].imag() == 0.0) throw NsError("real eigenvalues: not an NS candidate");
    a.lambda = ev[0].imag() > 0.0 ? ev[0] : ev[1];
    a.modulus = std::abs(a.lambda);
    a.theta = std::arg(a.lambda);
    a.resonance_margin = resonance_margins(a.lambda);
    a.resonance_ok = true;
    for (double m : a.resonance_margin) a.resonance_ok = a.resonance_ok && m >= opts.resonance_margin;

    // Complex coordinate of the real Jordan frame of A: q = M (1,-i)/2,
    // p = M^-T (1,-i), so that <p,q> = 1 and z = u1 + i u2 in that frame.
    const Mat2 M = hopf::jordan_transform(a.A);
    const Mat2 Mi = inverse(M);
    a.q = {Complex(M.a, -M.b) / 2.0, Complex(M.c, -M.d) / 2.0};
    a.p = {Complex(Mi.a, 0.0) - kI * Complex(Mi.c, 0.0),
           Complex(Mi.b, 0.0) - kI * Complex(Mi.d, 0.0)};

    a.B = bilinear_fd(P, xi, opts.h2 * scale);
    a.C = trilinear_fd(P, xi, opts.h3 * scale);

    const CVec2 qb = conj(a.q);
    a.g20 = cdot(a.p, a.B.apply(a.q, a.q));
    a.g11 = cdot(a.p, a.B.apply(a.q, qb));
    a.g02 = cdot(a.p, a.B.apply(qb, qb));
    a.g21 = cdot(a.p, a.C.apply(a.q, a.q, qb));

    const Complex eit = a.lambda / a.modulus;
    a.ell1 = ell1_combination(eit, a.g20, a.g11, a.g02, a.g21, opts.unit_root_guard);
    return a;
}

NSAnalysis normal_form(const PoincareMap& map, double mu, double eps, Vec2 seed,
                       const NsOptions& opts) {
    const Vec2 xi = fixed_point(map, mu, eps, seed, opts);
    const Mat2 A = map.jacobian(xi, mu, eps);
    NSAnalysis a = analyze_map([&](Vec2 v) { return map.eval(v, mu, eps); }, xi, A, opts);
    a.mu = mu;
    a.eps = eps;
    return a;
}

CurveSample critical_mu(const PoincareMap& map, const hopf::HopfPoint& hp, double eps,
                        double mu_seed, Vec2 x_seed, const NsOptions& opts) {
    Vec2 xi = x_seed;
    auto modulus_gap = [&](double mu) {
        xi = fixed_point(map, mu, eps, xi, opts);
        return eigen_at(map, mu, eps, xi).modulus - 1.0;
    };

    // Bracket around the seed at the eps-scaled mu step suggested by the
    // averaged linearization.
    const double dmu0 =
        std::max(1e-12, std::fabs(eps) * hp.omega0 * hp.omega0 /
                            (2.0 * std::max(std::fabs(hp.alpha_prime), 1e-8)));
    double lo = mu_seed, hi = mu_seed;
    double flo = modulus_gap(mu_seed), fhi = flo;
    double step = dmu0;
    for (int it = 0; it < 80 && flo * fhi > 0.0; ++it) {
        if (it % 2 == 0) {
            lo -= step;
            flo = modulus_gap(lo);
        } else {
            hi += step;
            fhi = modulus_gap(hi);
            step *= 2.0;
        }
    }
    if (flo * fhi > 0.0) throw NsError("no |lambda| = 1 root bracketed in mu");
    if (flo > fhi) {
        std::swap(lo, hi);
        std::swap(flo, fhi);
    }

    double mu = lo, f = flo;
    for (int it = 0; it < 200 && std::fabs(f) > opts.mod_tol; ++it) {
        double mid = 0.5 * (lo + hi);
        if (it % 2 == 1 && fhi != flo) {
            const double sec = lo - flo * (hi - lo) / (fhi - flo);
            if ((sec - lo) * (sec - hi) < 0.0) mid = sec;
        }
        f = modulus_gap(mid);
        mu = mid;
        if ((f > 0.0) == (fhi > 0.0)) {
            hi = mid;
            fhi = f;
        } else {
            lo = mid;
            flo = f;
        }
    }
    if (std::fabs(f) > 1e-10) throw NsError("critical-curve solve did not converge");

    CurveSample cs;
    cs.eps = eps;
    cs.mu = mu;
    cs.xi = fixed_point(map, mu, eps, xi, opts);
    const EigenInfo ei = eigen_at(map, mu, eps, cs.xi);
    cs.lambda = ei.lambda;
    cs.resonance_margin = resonance_margins(ei.lambda);
    cs.resonance_ok = true;
    for (double m : cs.resonance_margin)
        cs.resonance_ok = cs.resonance_ok && m >= opts.resonance_margin;

    const double h = std::max(1e-9, 0.01 * dmu0);
    cs.dmod_dmu = (modulus_gap(mu + h) - modulus_gap(mu - h)) / (2.0 * h);
    if (std::fabs(cs.dmod_dmu) < opts.transversality_factor * std::fabs(eps))
        throw NsError("transversality margin violated on the critical curve");
    return cs;
}

CriticalCurve critical_curve(const PoincareMap& map, const hopf::HopfPoint& hp,
                             const std::vector<double>& eps_grid, const NsOptions& opts) {
    if (eps_grid.empty()) throw NsError("empty eps grid");
    for (size_t i = 0; i + 1 < eps_grid.size(); ++i)
        if (eps_grid[i] >= eps_grid[i + 1])
            throw NsError("eps grid must be strictly increasing");
    if (eps_grid.front() <= 0.0) throw NsError("eps grid must be positive");

    CriticalCurve curve;
    double mu_seed = hp.mu0;
    Vec2 x_seed = hp.x;
    for (const double eps : eps_grid) {
        const CurveSample cs = critical_mu(map, hp, eps, mu_seed, x_seed, opts);
        curve.samples.push_back(cs);
        // Linear extrapolation of mu(eps) to seed the next solve.
        if (curve.samples.size() >= 2) {
            const auto& a = curve.samples[curve.samples.size() - 2];
            mu_seed = cs.mu + (cs.mu - a.mu) / (cs.eps - a.eps) * (eps - cs.eps);
        } else {
            mu_seed = cs.mu;
        }
        x_seed = cs.xi;
    }

    // Least-squares line mu = intercept + slope * eps.
    const int n = (int)curve.samples.size();
    double se = 0, sm = 0, see = 0, sem = 0;
    for (const auto& s : curve.samples) {
        se += s.eps;
        sm += s.mu;
        see += s.eps * s.eps;
        sem += s.eps * s.mu;
    }
    const double denom = n * see - se * se;
    if (denom != 0.0) {
        curve.slope = (n * sem - se * sm) / denom;
        curve.intercept = (sm - curve.slope * se) / n;
    }
    double ss_res = 0, ss_tot = 0;
    const double mean = sm / n;
    for (const auto& s : curve.samples) {
        const double fit = curve.intercept + curve.slope * s.eps;
        ss_res += (s.mu - fit) * (s.mu - fit);
        ss_tot += (s.mu - mean) * (s.mu - mean);
    }
    curve.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return curve;
}

ShiftedMap shifted_map(const PoincareMap& map, const hopf::HopfPoint& hp, double eps,
                       double mu_crit) {
    return ShiftedMap{&map, &hp, eps, mu_crit};
}

Vec2 ShiftedMap::eval(Vec2 y, double sigma, const NsOptions& opts) const {
    const double mu = mu_crit + sigma;
    const Vec2 xi = fixed_point(*map, mu, eps, hp->x, opts);
    return map->eval(y + xi, mu, eps) - xi;
}

Mat2 ShiftedMap::jacobian_at_zero(double sigma, const NsOptions& opts) const {
    const double mu = mu_crit + sigma;
    const Vec2 xi = fixed_point(*map, mu, eps, hp->x, opts);
    return map->jacobian(xi, mu, eps);
}

int CoefficientSeries::j_star() const {
    for (int j = 0; j < (int)ell.size(); ++j) {
        double floor = 1e-9;
        if (!coef_sigma.empty()) floor = std::max(floor, 3.0 * coef_sigma[j]);
        if (std::fabs(ell[j]) > floor) return l + j;
    }
    return -1;
}

CoefficientSeries lyapunov_series_fit(const PoincareMap& map, const hopf::HopfPoint& hp,
                                      const std::vector<double>& eps_list, int l, int k,
                                      const NsOptions& opts) {
    const int ncoef = k - l + 1;
    if ((int)eps_list.size() < ncoef + 1)
        throw NsError("fit needs at least k-l+2 eps values");

    CoefficientSeries cs;
    cs.l = l;
    cs.k = k;
    cs.route = Route::Fit;

    double mu_seed = hp.mu0;
    Vec2 x_seed = hp.x;
    for (const double eps : eps_list) {
        const CurveSample sm = critical_mu(map, hp, eps, mu_seed, x_seed, opts);
        const NSAnalysis na = normal_form(map, sm.mu, eps, sm.xi, opts);
        cs.eps_used.push_back(eps);
        cs.ell1_values.push_back(na.ell1);
        mu_seed = sm.mu;
        x_seed = sm.xi;
    }

    const int n = (int)eps_list.size();
    const double eps_max = *std::max_element(eps_list.begin(), eps_list.end());
    Eigen::MatrixXd V(n, ncoef);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
        const double u = eps_list[i] / eps_max;
        double p = std::pow(u, l);
        for (int j = 0; j < ncoef; ++j) {
            V(i, j) = p;
            p *= u;
        }
        b(i) = cs.ell1_values[i];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(V, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double cond = svd.singularValues()(0) / svd.singularValues()(ncoef - 1);
    if (!(cond < 1e10)) throw NsError("ill-conditioned fit: eps list too clustered");
    const Eigen::VectorXd d = svd.solve(b);

    const Eigen::VectorXd resid = V * d - b;
    const double rms = std::sqrt(resid.squaredNorm() / std::max(1, n - ncoef));
    double scale = 0.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::fabs(b(i)));
    cs.fit_residual = rms;
    if (scale > 0.0 && rms > 0.1 * scale)
        throw NsError("fit residual above 10% of the leading term");

    const Eigen::MatrixXd cov = (V.transpose() * V).inverse();
    for (int j = 0; j < ncoef; ++j) {
        const double denom = std::pow(eps_max, l + j);
        cs.ell.push_back(d(j) / denom);
        cs.coef_sigma.push_back(rms * std::sqrt(std::max(0.0, cov(j, j))) / denom);
    }
    return cs;
}

CoefficientSeries lyapunov_series_formula(const TensorSeries& ts, LtildeReading reading) {
    const int l = ts.l, k = ts.k;
    if (l < 1 || k < l) throw NsError("invalid series orders");
    const int nt = k - l + 1;
    if ((int)ts.A.size() != nt || (int)ts.B.size() != nt || (int)ts.C.size() != nt)
        throw NsError("tensor series is missing an order");

    // Hypothesis B3: every A_j is a rotation-scaling block [[a,-b],[b,a]].
    for (const Mat2& A : ts.A) {
        const double sc = 1.0 + norm_inf(A);
        if (std::fabs(A.a - A.d) > 1e-8 * sc || std::fabs(A.b + A.c) > 1e-8 * sc)
            throw NsError("A_j is not in real Jordan form (hypothesis B3)");
    }
    if (std::fabs(ts.A[0].a) > 1e-8 * ts.omega0 ||
        std::fabs(ts.A[0].c - ts.omega0) > 1e-8 * ts.omega0 || ts.omega0 <= 0.0)
        throw NsError("leading order must have alpha_l = 0, beta_l = omega0 > 0");

    // Fixed eigenvectors of the Jordan frame in the z = u1 + i u2 convention.
    const CVec2 q{Complex(0.5, 0.0), Complex(0.0, -0.5)};
    const CVec2 p{Complex(1.0, 0.0), Complex(0.0, -1.0)};
    const CVec2 qb = conj(q);

    const int n = k - l;  // degree of all shifted series
    CSeries E(k);
    E.c[0] = 1.0;
    for (int j = 0; j < nt; ++j) E.c[l + j] = Complex(ts.A[j].a, ts.A[j].c);
    const CSeries Einv = E.inv(k);

    CSeries D(n);  // (1 - E) = eps^l * D
    for (int j = 0; j < nt; ++j) D.c[j] = -Complex(ts.A[j].a, ts.A[j].c);
    CSeries one_minus_2E(k);
    one_minus_2E.c[0] = 1.0;
    for (int j = 0; j <= k; ++j) one_minus_2E.c[j] -= 2.0 * E.c[j];
    const CSeries S = one_minus_2E.mul(Einv, k).mul(Einv, k).mul(D.inv(n), n);

    CSeries b20(n), b11(n), b02(n), c21(n);
    for (int m = 0; m < nt; ++m) {
        b20.c[m] = cdot(p, ts.B[m].apply(q, q));
        b11.c[m] = cdot(p, ts.B[m].apply(q, qb));
        b02.c[m] = cdot(p, ts.B[m].apply(qb, qb));
        c21.c[m] = cdot(p, ts.C[m].apply(q, q, qb));
    }

    CoefficientSeries cs;
    cs.l = l;
    cs.k = k;
    cs.route = Route::Formula;

    // Direct expansion of the Lyapunov coefficient in powers of eps.
    const CSeries T1 = Einv.mul(c21, n);
    const CSeries T2 = S.mul(b20, n).mul(b11, n);
    for (int m = 0; m <= n; ++m) {
        double v = 0.5 * std::real(T1.c[m]) - 0.5 * std::real(T2.c[m]);
        if (m >= l) {
            const int mp = m - l;
            double c11 = 0.0, c02 = 0.0;
            for (int n1 = 0; n1 <= mp; ++n1) {
                c11 += std::real(b11.c[n1] * std::conj(b11.c[mp - n1]));
                c02 += std::real(b02.c[n1] * std::conj(b02.c[mp - n1]));
            }
            v += -0.5 * c11 - 0.25 * c02;
        }
        cs.ell.push_back(v);
    }

    // Composite L_m / Ltilde_m assembly for cross-checking.
    for (int m = 0; m <= n; ++m) {
        Complex L = c21.c[m];
        for (int n1 = 0; n1 <= m; ++n1)
            for (int n2 = 0; n1 + n2 <= m; ++n2)
                L -= S.c[n1] * b20.c[n2] * b11.c[m - n1 - n2];
        cs.L.push_back(L);
    }
    for (int m = 0; m + 2 * l <= k; ++m) {
        Complex Lt = cs.L[m];
        for (int n1 = 0; n1 <= m; ++n1) {
            Lt += Einv.c[l + n1] * c21.c[m - n1];
            if (reading == LtildeReading::Derived) {
                Lt -= b11.c[n1] * std::conj(b11.c[m - n1]);
                Lt -= 0.5 * b02.c[n1] * std::conj(b02.c[m - n1]);
            } else {
                Lt -= b11.c[n1] * std::conj(b11.c[n1]);
                Lt += 0.5 * b02.c[n1] * std::conj(b02.c[n1]);
            }
        }
        cs.Ltilde.push_back(Lt);
    }
    for (int j = l; j <= k - l; ++j) cs.r.push_back(Einv.c[j]);
    cs.s.assign(S.c.begin(), S.c.end());
    return cs;
}

std::vector<double> assemble_from_L(const CoefficientSeries& cs, int l, int k) {
    std::vector<double> out;
    for (int m = 0; m <= k - l; ++m) {
        if (m < l) {
            out.push_back(0.5 * std::real(cs.L[m]));
        } else {
            out.push_back(0.5 * std::real(cs.L[m] + cs.Ltilde[m - l] - cs.L[m - l]));
        }
    }
    return out;
}

}  // namespace torusbif::nsmap
