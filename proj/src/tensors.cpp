#include "torusbif/tensors.hpp"

namespace torusbif {

Trilinear2 cubic_ztensor(Complex gamma) {
    // Components of (Re, Im) of gamma*(x+iy)*(x^2+y^2).
    const double g1 = gamma.real(), g2 = gamma.imag();
    const double d1[4] = {6 * g1, -2 * g2, 2 * g1, -6 * g2};  // xxx, xxy, xyy, yyy
    const double d2[4] = {6 * g2, 2 * g1, 2 * g2, 6 * g1};
    Trilinear2 C;
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l) {
                const int ny = j + k + l;  // number of y-derivatives
                C.c[0][j][k][l] = d1[ny];
                C.c[1][j][k][l] = d2[ny];
            }
    return C;
}

Mat2 jacobian_fd(const PlanarMap& g, Vec2 x, double h, bool fivepoint) {
    Mat2 m;
    for (int j = 0; j < 2; ++j) {
        Vec2 e = j == 0 ? Vec2{1, 0} : Vec2{0, 1};
        Vec2 col;
        if (fivepoint) {
            const Vec2 p2 = g(x + 2.0 * h * e), p1 = g(x + h * e);
            const Vec2 m1 = g(x - h * e), m2 = g(x - 2.0 * h * e);
            col = (1.0 / (12.0 * h)) * (-1.0 * p2 + 8.0 * p1 - 8.0 * m1 + m2);
        } else {
            col = (g(x + h * e) - g(x - h * e)) / (2.0 * h);
        }
        m.a = j == 0 ? col.x : m.a;
        m.c = j == 0 ? col.y : m.c;
        m.b = j == 1 ? col.x : m.b;
        m.d = j == 1 ? col.y : m.d;
    }
    return m;
}

Bilinear2 bilinear_fd(const PlanarMap& g, Vec2 x, double h) {
    Bilinear2 B;
    const Vec2 g0 = g(x);
    const Vec2 ex{h, 0}, ey{0, h};
    const Vec2 gxx = g(x + ex) - 2.0 * g0 + g(x - ex);
    const Vec2 gyy = g(x + ey) - 2.0 * g0 + g(x - ey);
    const Vec2 gxy = g(x + ex + ey) - g(x + ex - ey) - g(x - ex + ey) + g(x - ex - ey);
    for (int i = 0; i < 2; ++i) {
        B.c[i][0][0] = gxx[i] / (h * h);
        B.c[i][1][1] = gyy[i] / (h * h);
        B.c[i][0][1] = B.c[i][1][0] = gxy[i] / (4.0 * h * h);
    }
    return B;
}

Trilinear2 trilinear_fd(const PlanarMap& g, Vec2 x, double h) {
    Trilinear2 C;
    const Vec2 ex{h, 0}, ey{0, h};
    const double h3 = h * h * h;

    const Vec2 xxx =
        g(x + 2.0 * ex) - 2.0 * g(x + ex) + 2.0 * g(x - ex) - g(x - 2.0 * ex);
    const Vec2 yyy =
        g(x + 2.0 * ey) - 2.0 * g(x + ey) + 2.0 * g(x - ey) - g(x - 2.0 * ey);
    // d/dy of the second x-difference and d/dx of the second y-difference.
    const Vec2 xxy = (g(x + ex + ey) - 2.0 * g(x + ey) + g(x - ex + ey)) -
                     (g(x + ex - ey) - 2.0 * g(x - ey) + g(x - ex - ey));
    const Vec2 xyy = (g(x + ey + ex) - 2.0 * g(x + ex) + g(x - ey + ex)) -
                     (g(x + ey - ex) - 2.0 * g(x - ex) + g(x - ey - ex));

    for (int i = 0; i < 2; ++i) {
        const double dxxx = xxx[i] / (2.0 * h3);
        const double dyyy = yyy[i] / (2.0 * h3);
        const double dxxy = xxy[i] / (2.0 * h3);
        const double dxyy = xyy[i] / (2.0 * h3);
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) {
                    const int nx = (j == 0) + (k == 0) + (l == 0);
                    C.c[i][j][k][l] = nx == 3   ? dxxx
                                      : nx == 2 ? dxxy
                                      : nx == 1 ? dxyy
                                                : dyyy;
                }
    }
    return C;
}

}  // namespace torusbif
