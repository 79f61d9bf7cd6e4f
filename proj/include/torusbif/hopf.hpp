#ifndef TORUSBIF_HOPF_HPP
#define TORUSBIF_HOPF_HPP

#include <functional>
#include <string>
#include <vector>

#include "torusbif/linalg.hpp"
#include "torusbif/tensors.hpp"

namespace torusbif::hopf {

using PlanarField = std::function<Vec2(Vec2 x, double mu)>;

struct HopfError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BranchPoint {
    double mu;
    Vec2 x;
};

/// Continuation samples of g_l(x_mu; mu) = 0 over a mu interval.
struct ZeroBranch {
    std::vector<BranchPoint> samples;
    double mu_lo = 0.0, mu_hi = 0.0;
    bool truncated = false;
    std::string truncation_reason;

    double width() const { return mu_hi - mu_lo; }
    /// Newton-polished zero at an arbitrary mu inside the branch interval.
    Vec2 interpolate_seed(double mu) const;
};

struct HopfPoint {
    double mu0 = 0.0;
    Vec2 x{};
    double omega0 = 0.0;
    double alpha_prime = 0.0;
    Mat2 jordan = Mat2::identity();  // M with M^-1 Dg M = [[0,-w],[w,0]]
    double ell_1l = 0.0;
};

struct HopfOptions {
    double newton_tol = 1e-12;
    int newton_max = 60;
    double h_jac = 1e-4;              // five-point Jacobian step, scaled by 1+|x|
    double alpha_tol_factor = 1e-11;  // |alpha(mu0)| <= factor * omega0
    double alpha_prime_h = 1e-2;      // central-difference step, fraction of branch width
    double min_alpha_prime = 1e-8;
    int branch_points = 33;
    double h2 = 1e-4, h3 = 5e-3;  // lyapunov_avg derivative steps, scaled by 1+|x|
};

/// Newton solve of g(x; mu) = 0 from a seed; throws HopfError on divergence.
Vec2 newton_zero(const PlanarField& g, double mu, Vec2 seed, const HopfOptions& opts = {});

/// Jacobian of g in x by five-point central differences.
Mat2 jacobian_of(const PlanarField& g, Vec2 x, double mu, const HopfOptions& opts = {});

/// Natural-parameter continuation of the zero branch across [mu_lo, mu_hi].
ZeroBranch trace_zero_branch(const PlanarField& g, double mu_lo, double mu_hi, Vec2 seed,
                             const HopfOptions& opts = {});

/// Locates mu0 with alpha(mu0) = 0 on the branch; fills omega0, alpha_prime
/// and the Jordan transform.
HopfPoint find_hopf(const ZeroBranch& branch, const PlanarField& g,
                    const HopfOptions& opts = {});

/// Real Jordan normalization of a matrix with (near) purely imaginary
/// eigenvalues: returns (M, omega) with M^-1 J M = [[0,-w],[w,0]].
std::pair<Mat2, double> jordan_normalize(const Mat2& J, double imag_tol_rel = 1e-9);

/// Jordan transform for a general complex pair (used by the map machinery);
/// no purely-imaginary requirement.
Mat2 jordan_transform(const Mat2& A);

/// First Lyapunov coefficient of the averaged system at the Hopf point,
/// evaluated by central differences of g in the Jordan frame.  Reported in
/// the normalization of the complex coordinate z = u1 + i*u2 of that frame
/// (time-eps map convention), matching the map-route coefficients.
double lyapunov_avg(const PlanarField& g, const HopfPoint& h, const HopfOptions& opts = {});

/// The same coefficient from explicitly given derivative tensors.
double lyapunov_from_tensors(const Bilinear2& B, const Trilinear2& C, double omega0);

}  // namespace torusbif::hopf

#endif
