#ifndef TORUSBIF_PAPERLAB_HPP
#define TORUSBIF_PAPERLAB_HPP

#include <string>
#include <utility>

#include "torusbif/nsmap.hpp"
#include "torusbif/ode.hpp"

namespace torusbif::paperlab {

/// Parameters of the built-in 3D family registered as "candido-novaes-3d".
struct PaperParams {
    double a = 0.0;
    double b = 0.0;
    double mu = 0.0;
    double eps = 0.0;

    bool degenerate() const { return a * a + b * b == 0.0; }
};

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The 3D vector field: a harmonic rotation plus eps- and eps^2-perturbations
/// that are singular on the z-axis. dimension 3, autonomous.
ode::FieldSpec field_3d(const PaperParams& p);

/// The (r, z) system obtained by passing to cylindrical coordinates and using
/// the angle as time; 2*pi-periodic standard form of order 2, with the exact
/// quotient field recovered through the remainder term.
ode::FieldSpec reduce_cylindrical(const PaperParams& p);

/// Closed-form first and second averaged functions of the reduced system.
Vec2 g1_closed(double r, double z, double mu, double a);
Vec2 g2_closed(double r, double z, double b);

/// The same closed forms as expression text in (x, y, mu) = (r, z, mu), with
/// a (resp. b) baked in numerically; guards transcription of the native code.
std::pair<std::string, std::string> g1_expression(double a);
std::pair<std::string, std::string> g2_expression(double b);

/// Converts a 3D start (x, y, z) to the section angle and the reduced state.
void cylindrical_start(const double xyz[3], double* theta0, Vec2* rz);

/// Analytic tensor series of the shifted return map along the critical
/// curve, derived from the closed-form averaged functions; feeds the series
/// route of the coefficient computation.
nsmap::TensorSeries tensor_series(const PaperParams& p);

}  // namespace torusbif::paperlab

#endif
