#ifndef TORUSBIF_CONFIG_HPP
#define TORUSBIF_CONFIG_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "torusbif/nsmap.hpp"
#include "torusbif/ode.hpp"

namespace torusbif::config {

/// Schema violation with a JSON-pointer-style path to the offending entry.
struct ConfigError : std::runtime_error {
    ConfigError(const std::string& path, const std::string& msg)
        : std::runtime_error(path + ": " + msg), path(path) {}
    std::string path;
};

struct FieldConfig {
    std::string name;  // registry name; empty when expression terms are given
    std::map<std::string, double> params;
    double period = 2.0 * M_PI;
    std::vector<std::pair<std::string, std::string>> term_exprs;  // per order (x, y)
};

struct AnalysisConfig {
    FieldConfig field;

    double ode_tol = 1e-10;
    double newton_tol = 1e-11;
    double vanish_tol = 1e-7;
    double resonance_margin = 1e-4;
    double curve_residual = 0.05;

    double mu_lo = -0.1, mu_hi = 0.1;
    int mu_count = 7;
    std::vector<double> eps_list;
    double probe_x_lo = 0.8, probe_x_hi = 1.2;
    double probe_y_lo = -0.2, probe_y_hi = 0.2;
    int probe_nx = 5, probe_ny = 5;

    std::string outputs = ".";
    std::optional<Vec2> seed;
    std::optional<double> certify_mu;
    int n_returns = 2000;
    int harmonics = 16;

    double certify_mu_or_default() const {
        return certify_mu ? *certify_mu : 0.5 * (mu_lo + mu_hi);
    }
    std::vector<Vec2> probe_grid() const;
};

AnalysisConfig load_config(const std::string& path);
AnalysisConfig parse_config(const std::string& json_text);

/// A field instantiated from the registry or from expression terms.
struct BuiltField {
    ode::FieldSpec planar;                    // standard form used by the pipeline
    std::optional<ode::FieldSpec> three_d;    // present for the built-in 3D family
    std::optional<nsmap::TensorSeries> formula_tensors;  // analytic series route
    std::string description;

    /// Maps a start point (2 or 3 components) to (t0, planar state).
    void convert_start(const std::vector<double>& start, double* t0, Vec2* x0) const;
    bool is_three_d() const { return three_d.has_value(); }
};

BuiltField build_field(const FieldConfig& fc);

/// Formats a double as the fixed "%.15e" output token.
std::string fmt(double v);

}  // namespace torusbif::config

#endif
