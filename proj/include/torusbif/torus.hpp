#ifndef TORUSBIF_TORUS_HPP
#define TORUSBIF_TORUS_HPP

#include <optional>
#include <string>
#include <vector>

#include "torusbif/nsmap.hpp"

namespace torusbif::torus {

struct TorusError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Every fitted coefficient sits below its noise floor: no classification.
struct DegenerateError : TorusError {
    using TorusError::TorusError;
};

/// Ordered returns of the flow to the section t = 0 mod T.
struct SectionCloud {
    std::vector<Vec2> points;  // one entry per return, transient included
    int transient_skip = 0;
    double mu = 0.0, eps = 0.0;
    Vec2 x_start{};
    bool backward = false;

    std::vector<Vec2> post_transient() const {
        return {points.begin() + std::min<size_t>(transient_skip, points.size()), points.end()};
    }
};

struct TorusOptions {
    int n_returns = 2000;
    double transient_frac = 0.5;
    int harmonics = 16;
    double residual_threshold = 0.05;
    double coverage_frac = 0.9;     // of the full angle
    double box_scale = 10.0;        // neighborhood radius = scale * sqrt|mu - mu_crit|
    int rk4_steps = 512;            // per-period integration steps
    double spiral_decay = 0.6;      // tail/head radius ratio below this => spiral
    nsmap::NsOptions ns;
};

/// Integrates through n_returns periods recording each section return.
/// t0 lets a trajectory start mid-period (3D starts mapped through the
/// cylindrical reduction); with backward set the reversed flow is sampled.
SectionCloud sample_section(const ode::FieldSpec& field, double mu, double eps, Vec2 x_start,
                            int n_returns, int transient_skip, double t0 = 0.0,
                            bool backward = false, int rk4_steps = 512,
                            std::optional<Vec2> box_center = std::nullopt,
                            double box_radius = 0.0);

/// Closed curve as a polar graph r(psi) around a center.
struct InvariantCurve {
    Vec2 center{};
    int harmonics = 0;
    std::vector<double> coef;  // a0, a1, b1, ..., aH, bH
    double diameter = 0.0;

    double radius_at(double psi) const;
    Vec2 point_at(double psi) const;
};

struct DetectResult {
    bool found = false;
    InvariantCurve curve;
    double residual = 0.0;
    std::string failure;  // "spiral", "winding", "residual", ...
};

/// Fits r(psi) to the post-transient cloud and measures the invariance
/// residual of the fitted curve under the return map.
DetectResult detect_invariant_curve(const SectionCloud& cloud, Vec2 xi,
                                    const nsmap::PoincareMap& map,
                                    const TorusOptions& opts = {});

struct TorusCertificate {
    bool exists = false;
    double side = 0.0;  // sign of ell_{1,j*} (mu - mu_crit)
    int j_star = 0;
    double ell = 0.0;  // ell_{1,j*}
    double mu = 0.0, eps = 0.0, mu_crit = 0.0;

    bool predicted_exists = false;
    bool predicted_torus_stable = false;
    bool predicted_cycle_stable = false;

    bool measured_cycle_stable = false;
    double cycle_modulus = 0.0;
    std::optional<bool> measured_torus_stable;

    DetectResult detection;
    bool unique_ok = false;
    double invariance_residual = 0.0;
    std::string diagnostics;
};

/// Theorem-side classification only; detection fields are left empty.
TorusCertificate classify(const hopf::HopfPoint& hp, const nsmap::CoefficientSeries& series,
                          double mu, double mu_crit);

/// Full certification: classify, then sample the section and look for the
/// invariant curve on the predicted side (reversed time for unstable tori).
TorusCertificate certify(const ode::FieldSpec& field, const hopf::HopfPoint& hp,
                         const nsmap::CoefficientSeries& series, double mu, double eps,
                         const TorusOptions& opts = {});

}  // namespace torusbif::torus

#endif
