#ifndef TORUSBIF_NSMAP_HPP
#define TORUSBIF_NSMAP_HPP

#include <optional>
#include <string>
#include <vector>

#include "torusbif/hopf.hpp"
#include "torusbif/ode.hpp"
#include "torusbif/tensors.hpp"

namespace torusbif::nsmap {

struct NsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ResonanceError : NsError {
    using NsError::NsError;
};

/// Time-T return map of the field on the section t = 0 mod T, evaluated with
/// fixed-step RK4 so that map values are smooth in x and bit-reproducible.
struct PoincareMap {
    const ode::FieldSpec* field = nullptr;
    int rk4_steps = 1024;

    Vec2 eval(Vec2 x, double mu, double eps) const;
    Vec2 eval_backward(Vec2 x, double mu, double eps) const;
    Mat2 jacobian(Vec2 x, double mu, double eps) const;
    void eval_with_jacobian(Vec2 x, double mu, double eps, Vec2* px, Mat2* jac) const;
};

struct NsOptions {
    double newton_tol = 1e-12;
    int newton_max = 60;
    double h2 = 1e-4, h3 = 5e-3;      // map-derivative steps, scaled by 1+|xi|
    double resonance_margin = 1e-4;   // |lambda^k - 1| >= margin for k=1..4
    double unit_root_guard = 1e-6;    // |1 - e^{i theta}| below this: hard error
    double mod_tol = 1e-12;           // |lambda| - 1 root tolerance in mu
    double transversality_factor = 1e-3;  // |d|lambda|/dmu| >= factor * eps
};

/// Newton solve of P(x) = x; seed comes from the averaged zero branch.
Vec2 fixed_point(const PoincareMap& map, double mu, double eps, Vec2 seed,
                 const NsOptions& opts = {});

struct EigenInfo {
    Complex lambda;  // Im(lambda) > 0
    double theta;    // arg in (0, pi)
    double modulus;
};

/// Complex eigenvalue data of D_x P at the fixed point.
EigenInfo eigen_at(const PoincareMap& map, double mu, double eps, Vec2 xi);

/// Full normal-form data of the map at (mu, eps).
struct NSAnalysis {
    double mu = 0.0, eps = 0.0;
    Vec2 xi{};
    Complex lambda;
    double modulus = 0.0, theta = 0.0;
    Mat2 A;
    Bilinear2 B;
    Trilinear2 C;
    CVec2 p{}, q{};
    Complex g20, g11, g02, g21;
    double ell1 = 0.0;
    std::array<double, 4> resonance_margin{};
    bool resonance_ok = true;
};

NSAnalysis normal_form(const PoincareMap& map, double mu, double eps, Vec2 seed,
                       const NsOptions& opts = {});

/// Normal-form data of an arbitrary planar map around a known fixed point;
/// the linearization may be supplied exactly or left to finite differences.
NSAnalysis analyze_map(const PlanarMap& P, Vec2 xi, std::optional<Mat2> A_exact = std::nullopt,
                       const NsOptions& opts = {});

struct CurveSample {
    double eps = 0.0, mu = 0.0;
    Vec2 xi{};
    Complex lambda;
    double dmod_dmu = 0.0;
    std::array<double, 4> resonance_margin{};
    bool resonance_ok = true;
};

struct CriticalCurve {
    std::vector<CurveSample> samples;
    double slope = 0.0;      // d mu / d eps of the linear fit
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Solves |lambda(mu, eps)| = 1 in mu for one eps, seeded near mu_seed.
CurveSample critical_mu(const PoincareMap& map, const hopf::HopfPoint& hp, double eps,
                        double mu_seed, Vec2 x_seed, const NsOptions& opts = {});

CriticalCurve critical_curve(const PoincareMap& map, const hopf::HopfPoint& hp,
                             const std::vector<double>& eps_grid, const NsOptions& opts = {});

/// The translated map H_eps(y; sigma) with the fixed point moved to 0.
struct ShiftedMap {
    const PoincareMap* map;
    const hopf::HopfPoint* hp;
    double eps;
    double mu_crit;

    Vec2 eval(Vec2 y, double sigma, const NsOptions& opts = {}) const;
    Mat2 jacobian_at_zero(double sigma, const NsOptions& opts = {}) const;
};

ShiftedMap shifted_map(const PoincareMap& map, const hopf::HopfPoint& hp, double eps,
                       double mu_crit);

enum class Route { Fit, Formula };

/// How to read the second factor of the quadratic sums in the printed
/// composite-coefficient formula; Derived is the expansion this code derives
/// and validates, Literal reproduces the printed index pattern.
enum class LtildeReading { Derived, Literal };

struct CoefficientSeries {
    int l = 1, k = 1;
    Route route = Route::Fit;
    std::vector<double> ell;  // ell_{1,l} .. ell_{1,k}
    // Fit route diagnostics:
    double fit_residual = 0.0;
    std::vector<double> coef_sigma;  // 1-sigma uncertainty per coefficient
    std::vector<double> eps_used;
    std::vector<double> ell1_values;
    // Formula route ingredients:
    std::vector<Complex> r;       // r_l .. r_{k-l} (index 0 = r_l)
    std::vector<Complex> s;       // s_0 .. s_{k-l}
    std::vector<Complex> L;       // L_0 .. L_{k-l}
    std::vector<Complex> Ltilde;  // Ltilde_0 .. Ltilde_{k-2l} (empty if k < 2l)

    /// First index with a coefficient above its noise floor, or -1.
    int j_star() const;
    double ell_at(int j) const { return ell.at(j - l); }
};

/// Computes ell_1 at each eps along mu(eps) and fits sum_{j=l..k} c_j eps^j.
CoefficientSeries lyapunov_series_fit(const PoincareMap& map, const hopf::HopfPoint& hp,
                                      const std::vector<double>& eps_list, int l, int k,
                                      const NsOptions& opts = {});

/// Tensor series of the shifted map: entries j = l..k (index 0 = order l).
struct TensorSeries {
    int l = 1, k = 1;
    double omega0 = 0.0;
    std::vector<Mat2> A;        // A_j in real Jordan (B3) form
    std::vector<Bilinear2> B;   // B_j
    std::vector<Trilinear2> C;  // C_j
};

/// Coefficients ell_{1,j} from the tensor series: the series route.  The
/// returned ell comes from expanding the Lyapunov coefficient directly in
/// powers of eps; L and Ltilde carry the composite assembly for the chosen
/// reading so both can be compared against the direct expansion.
CoefficientSeries lyapunov_series_formula(const TensorSeries& ts,
                                          LtildeReading reading = LtildeReading::Derived);

/// ell_{1,j} assembled strictly from L_m / Ltilde_m per the composite formula.
std::vector<double> assemble_from_L(const CoefficientSeries& cs, int l, int k);

}  // namespace torusbif::nsmap

#endif
