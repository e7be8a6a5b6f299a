// synthetic.cpp - synthetic image pairs.

#include "mvmorph/synthetic.hpp"

#include <cmath>

#include "mvmorph/errors.hpp"

namespace mvmorph {

namespace {

constexpr double pi = 3.14159265358979323846;

Vec whirl_tensor(double x1, double x2, int n) {
    const double c = (n - 1) / 2.0, a = x1 - c, b = x2 - c;
    const double r = std::hypot(a, b) / (n / 2.0);
    const double th = std::atan2(b, a) + pi / 2 + 2.0 * r;
    const double l1 = 1.0 + 3.0 * std::exp(-std::pow((r - 0.5) / 0.25, 2)), l2 = 0.7;
    Eigen::Matrix2d U;
    U << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    const Eigen::Matrix2d A = U * Eigen::Vector2d(l1, l2).asDiagonal() * U.transpose();
    Vec v(4);
    v << A(0, 0), A(0, 1), A(1, 0), A(1, 1);
    return v;
}

} // namespace

ImagePair gaussian_blob_pair(int n, double sigma, double shift) {
    if (n < 4 || !(sigma > 0.0)) throw InvalidArgument("gaussian_blob_pair: bad size or width");
    const Manifold m = Manifold::euclidean(1);
    ImagePair p{MvImage(m, n, n), MvImage(m, n, n)};
    const double c1 = n / 2.0 - shift, c2 = n / 2.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double dt = (i - c1) * (i - c1) + (j - c2) * (j - c2);
            const double dr = (i - shift - c1) * (i - shift - c1) + (j - c2) * (j - c2);
            p.T.pixel(i, j)[0] = std::exp(-dt / (2 * sigma * sigma));
            p.R.pixel(i, j)[0] = std::exp(-dr / (2 * sigma * sigma));
        }
    return p;
}

ImagePair spd3_rectangle_pair() {
    const Manifold m = Manifold::spd(3);
    const Eigen::Matrix3d bg = 3.0 * Eigen::Matrix3d::Identity();
    Eigen::Matrix3d at;
    at << 3, 2, 1, 2, 4, -1, 1, -1, 2;
    const Vec vbg = Eigen::Map<const Vec>(bg.data(), 9);
    const Vec vat = Eigen::Map<const Vec>(at.data(), 9);
    const Vec var = m.exp(vbg, 2.0 * m.log(vbg, vat));
    ImagePair p{MvImage(m, 21, 33, vbg), MvImage(m, 21, 33, vbg)};
    for (int j = 10; j <= 22; ++j) {
        for (int i = 4; i <= 9; ++i) p.T.set(i, j, vat);
        for (int i = 10; i <= 15; ++i) p.R.set(i, j, var);
    }
    return p;
}

ImagePair spd2_whirl_pair(int n, double amplitude) {
    if (n < 8) throw InvalidArgument("spd2_whirl_pair: n must be at least 8");
    const Manifold m = Manifold::spd(2);
    ImagePair p{MvImage(m, n, n), MvImage(m, n, n)};
    Vec id(4);
    id << 1, 0, 0, 1;
    const double c = (n - 1) / 2.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            p.T.set(i, j, whirl_tensor(i, j, n));
            const double a = i - c, b = j - c, r = std::hypot(a, b) / (n / 2.0);
            const double w = amplitude * std::exp(-r * r / (2 * 0.35 * 0.35));
            const double y1 = c + std::cos(w) * a - std::sin(w) * b, y2 = c + std::sin(w) * a + std::cos(w) * b;
            p.R.set(i, j, m.exp(id, 1.5 * m.log(id, whirl_tensor(y1, y2, n))));
        }
    return p;
}

} // namespace mvmorph
