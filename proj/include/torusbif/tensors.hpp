#ifndef TORUSBIF_TENSORS_HPP
#define TORUSBIF_TENSORS_HPP

#include <functional>

#include "torusbif/linalg.hpp"

namespace torusbif {

using PlanarMap = std::function<Vec2(Vec2)>;

/// Symmetric bilinear map R^2 x R^2 -> R^2; c[i][j][k] = d2 G_i / dx_j dx_k.
struct Bilinear2 {
    double c[2][2][2] = {};

    Vec2 apply(Vec2 u, Vec2 v) const {
        Vec2 r;
        for (int i = 0; i < 2; ++i) {
            double s = 0.0;
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k) s += c[i][j][k] * u[j] * v[k];
            r[i] = s;
        }
        return r;
    }

    CVec2 apply(const CVec2& u, const CVec2& v) const {
        CVec2 r{};
        for (int i = 0; i < 2; ++i) {
            Complex s = 0.0;
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k) s += c[i][j][k] * u[j] * v[k];
            r[i] = s;
        }
        return r;
    }

    double max_abs() const {
        double m = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k) m = std::max(m, std::fabs(c[i][j][k]));
        return m;
    }
};

/// Symmetric trilinear map; c[i][j][k][l] = d3 G_i / dx_j dx_k dx_l.
struct Trilinear2 {
    double c[2][2][2][2] = {};

    Vec2 apply(Vec2 u, Vec2 v, Vec2 w) const {
        Vec2 r;
        for (int i = 0; i < 2; ++i) {
            double s = 0.0;
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k)
                    for (int l = 0; l < 2; ++l) s += c[i][j][k][l] * u[j] * v[k] * w[l];
            r[i] = s;
        }
        return r;
    }

    CVec2 apply(const CVec2& u, const CVec2& v, const CVec2& w) const {
        CVec2 r{};
        for (int i = 0; i < 2; ++i) {
            Complex s = 0.0;
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k)
                    for (int l = 0; l < 2; ++l) s += c[i][j][k][l] * u[j] * v[k] * w[l];
            r[i] = s;
        }
        return r;
    }
};

/// Third-derivative tensor of the planar field z -> gamma * z^2 conj(z)
/// written in real coordinates z = x + i y.
Trilinear2 cubic_ztensor(Complex gamma);

/// Jacobian by central differences; five-point stencil when fivepoint is set.
Mat2 jacobian_fd(const PlanarMap& g, Vec2 x, double h, bool fivepoint = false);

/// Second-derivative tensor by central differences, symmetrized by construction.
Bilinear2 bilinear_fd(const PlanarMap& g, Vec2 x, double h);

/// Third-derivative tensor by central differences, symmetrized by construction.
Trilinear2 trilinear_fd(const PlanarMap& g, Vec2 x, double h);

}  // namespace torusbif

#endif
