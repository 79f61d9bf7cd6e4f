#ifndef TORUSBIF_AVERAGING_HPP
#define TORUSBIF_AVERAGING_HPP

#include <functional>
#include <vector>

#include "torusbif/ode.hpp"
#include "torusbif/tensors.hpp"

namespace torusbif::averaging {

struct AveragingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Partial Bell polynomial B_{p,q}(x_1, ..., x_{p-q+1}).
double bell(int p, int q, const std::vector<double>& xs);

/// All tuples (b_1, ..., b_{p-q+1}) with sum j*b_j = p and sum b_j = q.
std::vector<std::vector<int>> bell_partitions(int p, int q);

struct AveragingOptions {
    int quad_steps = 4096;  // fixed RK4 steps per period for the y_i quadrature
    double h1 = 2e-4;       // first-derivative step (five-point stencil)
    double h2 = 1e-4;       // second-derivative step
    double h3 = 5e-3;       // third-derivative step
    double vanish_tol = 1e-7;
};

/// y_1, ..., y_up_to of the averaging recursion evaluated at (t, x).
std::vector<Vec2> y_sequence(const ode::FieldSpec& field, double t, Vec2 x, double mu,
                             int up_to, const AveragingOptions& opts = {});

/// The i-th averaged function g_i(x; mu) = y_i(T, x; mu) / i!.
Vec2 averaged(const ode::FieldSpec& field, int i, Vec2 x, double mu,
              const AveragingOptions& opts = {});

/// Smallest i with sup over the probe grid of |g_i| above vanish_tol.
int first_nonvanishing(const ode::FieldSpec& field, const std::vector<Vec2>& probe_grid,
                       double mu, const AveragingOptions& opts = {});

using PlanarField = std::function<Vec2(Vec2 x, double mu)>;

/// Evaluators for g_1..g_k plus the first non-vanishing order.
struct AveragedTable {
    const ode::FieldSpec* field = nullptr;
    AveragingOptions opts;
    int order = 0;  // k
    int l = 0;      // first non-vanishing order
    double vanish_tol = 1e-7;

    Vec2 g(int i, Vec2 x, double mu) const;
    PlanarField g_fn(int i) const;
};

AveragedTable make_table(const ode::FieldSpec& field, const std::vector<Vec2>& probe_grid,
                         double mu, const AveragingOptions& opts = {});

}  // namespace torusbif::averaging

#endif
