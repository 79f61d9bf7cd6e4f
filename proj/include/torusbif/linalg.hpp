#ifndef TORUSBIF_LINALG_HPP
#define TORUSBIF_LINALG_HPP

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace torusbif {

using Complex = std::complex<double>;

struct Vec2 {
    double x = 0.0, y = 0.0;

    double& operator[](int i) { return i == 0 ? x : y; }
    double operator[](int i) const { return i == 0 ? x : y; }
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline Vec2 operator*(Vec2 a, double s) { return s * a; }
inline Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
inline Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double norm_inf(Vec2 a) { return std::max(std::fabs(a.x), std::fabs(a.y)); }

/// Column-major 2x2 matrix stored row-wise: [[a, b], [c, d]].
struct Mat2 {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    Vec2 col(int j) const { return j == 0 ? Vec2{a, c} : Vec2{b, d}; }
    double trace() const { return a + d; }
    double det() const { return a * d - b * c; }
};

inline Vec2 operator*(const Mat2& m, Vec2 v) {
    return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
}
inline Mat2 operator*(const Mat2& m, const Mat2& n) {
    return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d,
            m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
}
inline Mat2 operator*(double s, const Mat2& m) { return {s * m.a, s * m.b, s * m.c, s * m.d}; }
inline Mat2 operator+(const Mat2& m, const Mat2& n) {
    return {m.a + n.a, m.b + n.b, m.c + n.c, m.d + n.d};
}
inline Mat2 operator-(const Mat2& m, const Mat2& n) {
    return {m.a - n.a, m.b - n.b, m.c - n.c, m.d - n.d};
}
inline Mat2 transpose(const Mat2& m) { return {m.a, m.c, m.b, m.d}; }
inline double norm_inf(const Mat2& m) {
    return std::max(std::fabs(m.a) + std::fabs(m.b), std::fabs(m.c) + std::fabs(m.d));
}

inline Mat2 inverse(const Mat2& m) {
    const double det = m.det();
    if (det == 0.0) throw std::runtime_error("singular 2x2 matrix");
    return {m.d / det, -m.b / det, -m.c / det, m.a / det};
}

/// Solves m*v = rhs for v.
inline Vec2 solve(const Mat2& m, Vec2 rhs) { return inverse(m) * rhs; }

using CVec2 = std::array<Complex, 2>;

/// Hermitian inner product <u, v> = conj(u)^T v.
inline Complex cdot(const CVec2& u, const CVec2& v) {
    return std::conj(u[0]) * v[0] + std::conj(u[1]) * v[1];
}
inline CVec2 conj(const CVec2& u) { return {std::conj(u[0]), std::conj(u[1])}; }

/// Eigenvalues of a real 2x2 matrix as a complex pair; imag == 0 means real spectrum.
inline std::array<Complex, 2> eigenvalues(const Mat2& m) {
    const double tr = m.trace();
    const double disc = tr * tr - 4.0 * m.det();
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        return {Complex((tr + s) / 2.0, 0.0), Complex((tr - s) / 2.0, 0.0)};
    }
    const double s = std::sqrt(-disc);
    return {Complex(tr / 2.0, s / 2.0), Complex(tr / 2.0, -s / 2.0)};
}

/// Complex eigenvector of m for eigenvalue lam (assumed eigenvalue of m).
inline CVec2 eigenvector(const Mat2& m, Complex lam) {
    // (m - lam I) v = 0; pick the larger row for stability.
    const Complex r1x = Complex(m.a) - lam, r1y = Complex(m.b);
    const Complex r2x = Complex(m.c), r2y = Complex(m.d) - lam;
    CVec2 v;
    if (std::abs(r1x) + std::abs(r1y) >= std::abs(r2x) + std::abs(r2y)) {
        v = {-r1y, r1x};
    } else {
        v = {-r2y, r2x};
    }
    const double n = std::sqrt(std::norm(v[0]) + std::norm(v[1]));
    if (n == 0.0) throw std::runtime_error("degenerate eigenvector");
    v[0] /= n;
    v[1] /= n;
    return v;
}

}  // namespace torusbif

#endif
