#ifndef TORUSBIF_ODE_HPP
#define TORUSBIF_ODE_HPP

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "torusbif/linalg.hpp"

namespace torusbif::ode {

/// Hard cap on system size: state dim (<=3) plus variational block (<=9),
/// or stacked averaging integrands (4 orders x 2 components).
constexpr int kMaxDim = 16;

struct OdeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BlowUpError : OdeError {
    explicit BlowUpError(double t)
        : OdeError("state escaped the admissible box at t=" + std::to_string(t)) {}
};
struct MaxStepsError : OdeError {
    MaxStepsError() : OdeError("maximum step count exceeded") {}
};

using RawRhs = std::function<void(double t, const double* y, double* dy)>;

struct Options {
    double tol = 1e-10;   // local error per step, used as both rtol and atol
    double box = 1e3;     // blow-up bound on |y|_inf
    int max_steps = 4000000;
};

struct RawResult {
    std::array<double, kMaxDim> y{};
    int steps = 0;
    double est_error = 0.0;
};

/// Adaptive Dormand-Prince 5(4) with PI step control; t1 < t0 integrates backward.
RawResult rk45(const RawRhs& f, int n, double t0, double t1, const double* y0,
               const Options& opt,
               std::vector<std::pair<double, std::array<double, kMaxDim>>>* dense = nullptr);

/// Classic fixed-step RK4 with nsteps equal steps; deterministic replays.
void rk4_fixed(const RawRhs& f, int n, double t0, double t1, double* y, int nsteps,
               double box = 1e3);

/// One perturbation term F_i(t, x; mu); writes `dimension` components to out.
using TermFn = std::function<void(double t, const double* x, double mu, double* out)>;
/// Remainder term F~(t, x; mu, eps).
using RemainderFn = std::function<void(double t, const double* x, double mu, double eps, double* out)>;

/// A T-periodic field in standard form: RHS = sum_i eps^i F_i + eps^(k+1) F~.
/// A nonzero base term holds an unperturbed part (not standard form; the
/// averaging machinery rejects such fields, the integrators accept them).
struct FieldSpec {
    int dimension = 2;
    double period = 2.0 * M_PI;
    int order = 1;  // k
    std::vector<TermFn> terms;
    TermFn base;            // optional eps^0 part
    RemainderFn remainder;  // optional
    double box_radius = 1e3;

    void rhs(double t, const double* x, double mu, double eps, double* out) const;
    RawRhs make_rhs(double mu, double eps) const;

    /// Max periodicity defect of every F_i over a (t, x) sample; ~1e-12 expected.
    double periodicity_defect(double mu) const;
};

struct FlowResult {
    std::array<double, 3> state{};
    std::array<double, 9> jacobian{};  // row-major dimension x dimension
    int dimension = 2;
    int steps = 0;
    double est_error = 0.0;

    Vec2 state2() const { return {state[0], state[1]}; }
    Mat2 jacobian2() const { return {jacobian[0], jacobian[1], jacobian[2], jacobian[3]}; }
};

FlowResult integrate(const FieldSpec& field, const double* x0, double t0, double t1, double mu,
                     double eps, double tol,
                     std::vector<std::pair<double, std::array<double, kMaxDim>>>* dense = nullptr);

/// Flow over [0, tspan] with the state Jacobian from the first variational
/// equations; the RHS Jacobian uses central differences with
/// h = max(1e-7, 1e-7*|x|).
FlowResult flow_with_jacobian(const FieldSpec& field, const double* x0, double tspan, double mu,
                              double eps, double tol);

/// Same flow map evaluated with nsteps fixed RK4 steps (bit-reproducible).
void flow_fixed(const FieldSpec& field, const double* x0, double t0, double t1, double mu,
                double eps, int nsteps, double* out);

/// Fixed-step flow with variational Jacobian (dimension 2 only).
void flow_fixed_with_jacobian(const FieldSpec& field, Vec2 x0, double t0, double t1, double mu,
                              double eps, int nsteps, Vec2* x_out, Mat2* jac_out);

}  // namespace torusbif::ode

#endif
