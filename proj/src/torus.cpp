#include "torusbif/torus.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace torusbif::torus {

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

}  // namespace

SectionCloud sample_section(const ode::FieldSpec& field, double mu, double eps, Vec2 x_start,
                            int n_returns, int transient_skip, double t0, bool backward,
                            int rk4_steps, std::optional<Vec2> box_center, double box_radius) {
    if (field.dimension != 2) throw TorusError("sample_section expects a planar field");
    SectionCloud cloud;
    cloud.mu = mu;
    cloud.eps = eps;
    cloud.x_start = x_start;
    cloud.transient_skip = transient_skip;
    cloud.backward = backward;

    const double T = field.period;
    double x[2] = {x_start.x, x_start.y};
    const double dir = backward ? -1.0 : 1.0;

    // Partial first period when starting mid-section (t0 in (0, T)).
    if (t0 != 0.0) {
        const double span = backward ? -t0 : T - t0;
        const int steps = std::max(8, (int)std::lround(rk4_steps * std::fabs(span) / T));
        ode::rk4_fixed([&](double t, const double* y, double* dy) { field.rhs(t, y, mu, eps, dy); },
                       2, t0, t0 + span, x, steps, field.box_radius);
        cloud.points.push_back({x[0], x[1]});
    }

    for (int i = (t0 != 0.0 ? 1 : 0); i < n_returns; ++i) {
        ode::rk4_fixed([&](double t, const double* y, double* dy) { field.rhs(t, y, mu, eps, dy); },
                       2, 0.0, dir * T, x, rk4_steps, field.box_radius);
        cloud.points.push_back({x[0], x[1]});
        if (box_center && box_radius > 0.0) {
            const Vec2 d = Vec2{x[0], x[1]} - *box_center;
            if (norm_inf(d) > box_radius)
                throw TorusError("trajectory escaped the certification neighborhood");
        }
    }
    return cloud;
}

double InvariantCurve::radius_at(double psi) const {
    double r = coef[0];
    for (int h = 1; h <= harmonics; ++h)
        r += coef[2 * h - 1] * std::cos(h * psi) + coef[2 * h] * std::sin(h * psi);
    return r;
}

Vec2 InvariantCurve::point_at(double psi) const {
    const double r = radius_at(psi);
    return center + Vec2{r * std::cos(psi), r * std::sin(psi)};
}

DetectResult detect_invariant_curve(const SectionCloud& cloud, Vec2 xi,
                                    const nsmap::PoincareMap& map, const TorusOptions& opts) {
    DetectResult res;
    const auto pts = cloud.post_transient();
    if ((int)pts.size() < 100) {
        res.failure = "fewer than 100 post-transient points";
        return res;
    }

    std::vector<double> radii(pts.size()), angles(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
        const Vec2 d = pts[i] - xi;
        radii[i] = norm(d);
        angles[i] = std::atan2(d.y, d.x);
    }

    // Spiral collapse toward the fixed point: radii shrink head-to-tail.
    // Judged on the full cloud so the transient decay counts as evidence.
    std::vector<double> all_radii(cloud.points.size());
    for (size_t i = 0; i < cloud.points.size(); ++i) all_radii[i] = norm(cloud.points[i] - xi);
    const size_t half = all_radii.size() / 2;
    const double head = median({all_radii.begin(), all_radii.begin() + half});
    const double tail = median({all_radii.begin() + half, all_radii.end()});
    const double tiny = 1e-8 * (1.0 + norm(xi));
    if (tail < tiny || (head > 0.0 && tail / head < opts.spiral_decay)) {
        res.failure = "spiral";
        return res;
    }

    // Angular coverage: largest gap of the sorted angles, wrap included.
    std::vector<double> sorted = angles;
    std::sort(sorted.begin(), sorted.end());
    double max_gap = 2.0 * M_PI - (sorted.back() - sorted.front());
    for (size_t i = 0; i + 1 < sorted.size(); ++i)
        max_gap = std::max(max_gap, sorted[i + 1] - sorted[i]);
    if (2.0 * M_PI - max_gap < opts.coverage_frac * 2.0 * M_PI) {
        res.failure = "winding";
        return res;
    }

    // Trigonometric least squares for r(psi).
    int H = opts.harmonics;
    while (2 * H + 1 > (int)pts.size() / 4 && H > 2) --H;
    const int ncoef = 2 * H + 1;
    Eigen::MatrixXd A((int)pts.size(), ncoef);
    Eigen::VectorXd b((int)pts.size());
    for (int i = 0; i < (int)pts.size(); ++i) {
        A(i, 0) = 1.0;
        for (int h = 1; h <= H; ++h) {
            A(i, 2 * h - 1) = std::cos(h * angles[i]);
            A(i, 2 * h) = std::sin(h * angles[i]);
        }
        b(i) = radii[i];
    }
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);

    InvariantCurve curve;
    curve.center = xi;
    curve.harmonics = H;
    curve.coef.assign(c.data(), c.data() + ncoef);

    double rmax = 0.0;
    for (int j = 0; j < 64; ++j)
        rmax = std::max(rmax, std::fabs(curve.radius_at(2.0 * M_PI * j / 64.0)));
    curve.diameter = 2.0 * rmax;
    if (curve.diameter <= 0.0) {
        res.failure = "degenerate fit";
        return res;
    }

    // Invariance residual: map 64 curve samples and measure the distance to
    // the curve, normalized by the diameter.  The reversed map is used for
    // clouds recorded in reversed time.
    std::vector<Vec2> dense(1024);
    for (int j = 0; j < 1024; ++j) dense[j] = curve.point_at(2.0 * M_PI * j / 1024.0);
    double worst = 0.0;
    for (int j = 0; j < 64; ++j) {
        const Vec2 s = curve.point_at(2.0 * M_PI * j / 64.0);
        const Vec2 ms = cloud.backward ? map.eval_backward(s, cloud.mu, cloud.eps)
                                       : map.eval(s, cloud.mu, cloud.eps);
        double best = 1e300;
        for (const Vec2& dpt : dense) best = std::min(best, norm(ms - dpt));
        worst = std::max(worst, best);
    }
    res.residual = worst / curve.diameter;
    res.curve = curve;
    if (res.residual > opts.residual_threshold) {
        res.failure = "residual";
        return res;
    }
    res.found = true;
    return res;
}

TorusCertificate classify(const hopf::HopfPoint& hp, const nsmap::CoefficientSeries& series,
                          double mu, double mu_crit) {
    TorusCertificate cert;
    cert.mu = mu;
    cert.mu_crit = mu_crit;

    const int js = series.j_star();
    if (js < 0)
        throw DegenerateError("all fitted coefficients are below the noise floor (degenerate)");
    cert.j_star = js;
    cert.ell = series.ell_at(js);

    const double prod = cert.ell * (mu - mu_crit);
    cert.side = prod > 0.0 ? 1.0 : prod < 0.0 ? -1.0 : 0.0;
    cert.predicted_exists = cert.side < 0.0;
    if (cert.predicted_exists) {
        cert.predicted_torus_stable = cert.ell < 0.0;
        cert.predicted_cycle_stable = !cert.predicted_torus_stable;
    } else {
        cert.predicted_torus_stable = false;
        cert.predicted_cycle_stable = cert.ell < 0.0;
    }
    return cert;
}

TorusCertificate certify(const ode::FieldSpec& field, const hopf::HopfPoint& hp,
                         const nsmap::CoefficientSeries& series, double mu, double eps,
                         const TorusOptions& opts) {
    nsmap::PoincareMap map{&field, 1024};
    const nsmap::CurveSample crit = nsmap::critical_mu(map, hp, eps, hp.mu0, hp.x, opts.ns);

    TorusCertificate cert = classify(hp, series, mu, crit.mu);
    cert.eps = eps;

    const Vec2 xi = nsmap::fixed_point(map, mu, eps, hp.x, opts.ns);
    const nsmap::EigenInfo ei = nsmap::eigen_at(map, mu, eps, xi);
    cert.cycle_modulus = ei.modulus;
    cert.measured_cycle_stable = ei.modulus < 1.0;

    const double amp = std::sqrt(std::fabs(mu - crit.mu));
    const double box = opts.box_scale * amp;
    const bool backward = !cert.predicted_torus_stable && cert.predicted_exists;

    const int skip = (int)(opts.n_returns * opts.transient_frac);
    auto run = [&](double radius) {
        DetectResult r;
        try {
            const SectionCloud cloud =
                sample_section(field, mu, eps, xi + Vec2{radius, 0.0}, opts.n_returns, skip, 0.0,
                               backward, opts.rk4_steps, xi, box);
            r = detect_invariant_curve(cloud, xi, map, opts);
        } catch (const std::exception& e) {
            r.found = false;
            r.failure = std::string("escape: ") + e.what();
        }
        return r;
    };

    const DetectResult inner = run(0.5 * amp);
    const DetectResult outer = run(1.5 * amp);

    cert.detection = inner.found ? inner : outer;
    cert.invariance_residual = cert.detection.residual;

    bool detected = inner.found || outer.found;
    if (inner.found && outer.found) {
        // Weak uniqueness: the two fits agree within twice the residual.
        double gap = 0.0;
        for (int j = 0; j < 64; ++j) {
            const double psi = 2.0 * M_PI * j / 64.0;
            gap = std::max(gap,
                           std::fabs(inner.curve.radius_at(psi) - outer.curve.radius_at(psi)));
        }
        const double tol = 2.0 * std::max(inner.residual, outer.residual) *
                               std::max(inner.curve.diameter, outer.curve.diameter) +
                           1e-9;
        cert.unique_ok = gap <= tol;
    } else if (detected) {
        cert.unique_ok = true;  // only one basin reached the curve
    }

    if (detected) cert.measured_torus_stable = !backward;

    // Agreement between the theorem-side prediction and the detection.
    bool agree = detected == cert.predicted_exists;
    if (detected && cert.predicted_exists) {
        agree = agree && cert.unique_ok;
        agree = agree && (cert.measured_cycle_stable == cert.predicted_cycle_stable);
        agree = agree && (*cert.measured_torus_stable == cert.predicted_torus_stable);
        agree = agree && (cert.measured_cycle_stable != *cert.measured_torus_stable);
    }
    if (!agree) {
        cert.diagnostics = detected == cert.predicted_exists
                               ? "stability or uniqueness mismatch"
                               : (cert.predicted_exists ? "predicted torus not detected: " +
                                                              cert.detection.failure
                                                        : "unpredicted curve detected");
    } else if (!cert.predicted_exists) {
        cert.diagnostics = "no torus predicted; " +
                           (cert.detection.failure.empty() ? std::string("no curve")
                                                           : cert.detection.failure) +
                           " detected";
    }

    cert.exists = cert.predicted_exists && agree;
    return cert;
}

}  // namespace torusbif::torus
