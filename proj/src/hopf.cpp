#include "torusbif/hopf.hpp"

#include <algorithm>
#include <cmath>

namespace torusbif::hopf {

namespace {

struct EigPath {
    double alpha, beta;  // eigenvalues alpha +/- i beta, beta > 0
};

EigPath eig_pair(const Mat2& J) {
    const auto ev = eigenvalues(J);
    if (ev[0].imag() == 0.0)
        throw HopfError("Jacobian has real eigenvalues; not a Hopf candidate");
    return {ev[0].real(), std::fabs(ev[0].imag())};
}

}  // namespace

Mat2 jacobian_of(const PlanarField& g, Vec2 x, double mu, const HopfOptions& opts) {
    const double h = opts.h_jac * (1.0 + norm(x));
    return jacobian_fd([&](Vec2 v) { return g(v, mu); }, x, h, true);
}

Vec2 newton_zero(const PlanarField& g, double mu, Vec2 seed, const HopfOptions& opts) {
    Vec2 x = seed;
    for (int it = 0; it < opts.newton_max; ++it) {
        const Vec2 r = g(x, mu);
        if (norm(r) <= opts.newton_tol) return x;
        Mat2 J = jacobian_of(g, x, mu, opts);
        if (std::fabs(J.det()) < 1e-14 * (1.0 + norm_inf(J) * norm_inf(J)))
            throw HopfError("singular Jacobian in Newton (fold?)");
        const Vec2 dx = solve(J, r);
        x = x - dx;
        if (norm(dx) > 1e6) throw HopfError("Newton diverged");
    }
    const Vec2 r = g(x, mu);
    if (norm(r) <= 1e-10) return x;
    throw HopfError("Newton failed to converge");
}

ZeroBranch trace_zero_branch(const PlanarField& g, double mu_lo, double mu_hi, Vec2 seed,
                             const HopfOptions& opts) {
    ZeroBranch br;
    br.mu_lo = mu_lo;
    br.mu_hi = mu_hi;

    const double width = mu_hi - mu_lo;
    Vec2 x = newton_zero(g, mu_lo, seed, opts);  // throws if the seed is bad
    br.samples.push_back({mu_lo, x});

    double mu = mu_lo;
    double step = width / (opts.branch_points - 1);
    const double min_step = width * 1e-6;
    while (mu < mu_hi - 1e-15 * std::fabs(width)) {
        const double next = std::min(mu + step, mu_hi);
        try {
            const Vec2 xn = newton_zero(g, next, x, opts);
            mu = next;
            x = xn;
            br.samples.push_back({mu, x});
            step = std::min(step * 2.0, width / (opts.branch_points - 1));
        } catch (const HopfError& e) {
            step /= 2.0;
            if (step < min_step) {
                br.truncated = true;
                br.truncation_reason = e.what();
                br.mu_hi = mu;
                break;
            }
        }
    }
    return br;
}

Vec2 ZeroBranch::interpolate_seed(double mu) const {
    if (samples.empty()) throw HopfError("empty branch");
    const BranchPoint* best = &samples.front();
    for (const auto& s : samples)
        if (std::fabs(s.mu - mu) < std::fabs(best->mu - mu)) best = &s;
    return best->x;
}

HopfPoint find_hopf(const ZeroBranch& branch, const PlanarField& g, const HopfOptions& opts) {
    if (branch.samples.size() < 3) throw HopfError("branch too short");

    auto alpha_beta = [&](double mu, Vec2 seed) {
        const Vec2 x = newton_zero(g, mu, seed, opts);
        const EigPath e = eig_pair(jacobian_of(g, x, mu, opts));
        return std::tuple<double, double, Vec2>(e.alpha, e.beta, x);
    };

    // Locate a sign change of alpha along the stored samples.
    std::vector<double> alphas(branch.samples.size());
    double beta_scale = 0.0;
    for (size_t i = 0; i < branch.samples.size(); ++i) {
        const auto& s = branch.samples[i];
        const EigPath e = eig_pair(jacobian_of(g, s.x, s.mu, opts));
        alphas[i] = e.alpha;
        beta_scale = std::max(beta_scale, e.beta);
        if (e.beta < 1e-10 * std::max(1.0, beta_scale))
            throw HopfError("beta vanishes on the branch; not a Hopf candidate");
    }
    // A genuine crossing must clear the finite-difference noise floor on
    // both sides; samples inside the floor do not certify a sign change.
    double alpha_scale = 0.0;
    for (double a : alphas) alpha_scale = std::max(alpha_scale, std::fabs(a));
    const double floor = 1e-9 * (beta_scale + alpha_scale);
    int ilo = -1, ihi = -1;
    int prev = -1;
    for (size_t i = 0; i < alphas.size(); ++i) {
        if (std::fabs(alphas[i]) <= floor) continue;
        if (prev >= 0 && alphas[prev] * alphas[i] < 0.0) {
            ilo = prev;
            ihi = (int)i;
            break;
        }
        prev = (int)i;
    }
    if (ilo < 0) throw HopfError("alpha has no sign change on the branch");

    double lo = branch.samples[ilo].mu, hi = branch.samples[ihi].mu;
    double flo = alphas[ilo], fhi = alphas[ihi];
    Vec2 x = branch.samples[ilo].x;

    // Bisection with a secant accelerator on alpha(mu).
    double mu0 = lo, alpha0 = flo, beta0 = beta_scale;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (it % 2 == 1 && fhi != flo) {
            const double sec = lo - flo * (hi - lo) / (fhi - flo);
            if (sec > lo && sec < hi) mid = sec;
        }
        const auto [a, b, xm] = alpha_beta(mid, x);
        mu0 = mid;
        alpha0 = a;
        beta0 = b;
        x = xm;
        if (std::fabs(a) <= opts.alpha_tol_factor * b) break;
        if (a * flo <= 0.0) {
            hi = mid;
            fhi = a;
        } else {
            lo = mid;
            flo = a;
        }
    }
    if (std::fabs(alpha0) > opts.alpha_tol_factor * beta0)
        throw HopfError("alpha(mu0) did not reach tolerance");

    HopfPoint hp;
    hp.mu0 = mu0;
    hp.x = newton_zero(g, mu0, x, opts);
    hp.omega0 = beta0;

    // Transversality by a central difference across the located root.
    const double h = opts.alpha_prime_h * branch.width();
    const auto [ap, bp, xp] = alpha_beta(mu0 + h, hp.x);
    const auto [am, bm, xm] = alpha_beta(mu0 - h, hp.x);
    hp.alpha_prime = (ap - am) / (2.0 * h);
    if (std::fabs(hp.alpha_prime) < opts.min_alpha_prime)
        throw HopfError("transversality failure: |alpha'(mu0)| below threshold");

    const Mat2 J = jacobian_of(g, hp.x, mu0, opts);
    hp.jordan = jordan_transform(J);
    return hp;
}

Mat2 jordan_transform(const Mat2& A) {
    const auto ev = eigenvalues(A);
    if (ev[0].imag() == 0.0) throw HopfError("real spectrum: no Jordan rotation block");
    const Complex lam = ev[0].imag() > 0.0 ? ev[0] : ev[1];
    CVec2 w = eigenvector(A, lam);

    // Rotate the phase so Re v and Im v are orthogonal with |Re v| >= |Im v|,
    // then scale Re v to unit length.
    const Complex s = w[0] * w[0] + w[1] * w[1];
    if (std::abs(s) > 1e-14) {
        const Complex ph = std::exp(Complex(0.0, -0.5 * std::arg(s)));
        w[0] *= ph;
        w[1] *= ph;
    }
    const Vec2 re{w[0].real(), w[1].real()};
    const Vec2 im{w[0].imag(), w[1].imag()};
    const double n = norm(re);
    if (n == 0.0) throw HopfError("degenerate eigenvector");
    Mat2 M{re.x / n, -im.x / n, re.y / n, -im.y / n};
    if (M.det() <= 0.0) throw HopfError("Jordan transform lost orientation");
    return M;
}

std::pair<Mat2, double> jordan_normalize(const Mat2& J, double imag_tol_rel) {
    const auto ev = eigenvalues(J);
    if (ev[0].imag() == 0.0)
        throw HopfError("eigenvalues are real; expected a purely imaginary pair");
    const double omega = std::fabs(ev[0].imag());
    if (std::fabs(ev[0].real()) > imag_tol_rel * omega)
        throw HopfError("eigenvalues not purely imaginary within tolerance");
    return {jordan_transform(J), omega};
}

double lyapunov_from_tensors(const Bilinear2& B, const Trilinear2& C, double omega0) {
    const double third = C.c[0][0][0][0] + C.c[0][0][1][1] + C.c[1][0][0][1] + C.c[1][1][1][1];
    const double second =
        B.c[0][0][1] * (B.c[0][0][0] + B.c[0][1][1]) -
        B.c[1][0][1] * (B.c[1][0][0] + B.c[1][1][1]) - B.c[0][0][0] * B.c[1][0][0] +
        B.c[0][1][1] * B.c[1][1][1];
    return third / 16.0 + second / (16.0 * omega0);
}

double lyapunov_avg(const PlanarField& g, const HopfPoint& h, const HopfOptions& opts) {
    const Mat2 Minv = inverse(h.jordan);
    const PlanarMap ghat = [&](Vec2 u) { return Minv * g(h.x + h.jordan * u, h.mu0); };
    const double scale = 1.0 + norm(h.x);
    const Bilinear2 B = bilinear_fd(ghat, Vec2{0, 0}, opts.h2 * scale);
    const Trilinear2 C = trilinear_fd(ghat, Vec2{0, 0}, opts.h3 * scale);
    return lyapunov_from_tensors(B, C, h.omega0);
}

}  // namespace torusbif::hopf
