// imageops.cpp - Karcher bilinear sampling, secant gradients, scattered data
// interpolation and pyramid resampling.

#include "mvmorph/imageops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mvmorph/delaunay.hpp"
#include "mvmorph/errors.hpp"

namespace mvmorph {

namespace {

struct Cell {
    int i0, i1, j0, j1;
    double s, t;
};

Cell locate(const MvImage &img, double x1, double x2) {
    Cell c{};
    const int n1 = img.n1(), n2 = img.n2();
    x1 = std::clamp(x1, 0.0, static_cast<double>(n1 - 1));
    x2 = std::clamp(x2, 0.0, static_cast<double>(n2 - 1));
    c.i0 = std::min(static_cast<int>(std::floor(x1)), std::max(n1 - 2, 0));
    c.j0 = std::min(static_cast<int>(std::floor(x2)), std::max(n2 - 2, 0));
    c.i1 = std::min(c.i0 + 1, n1 - 1);
    c.j1 = std::min(c.j0 + 1, n2 - 1);
    c.s = x1 - c.i0;
    c.t = x2 - c.j0;
    return c;
}

} // namespace

Vec bilinear_sample(const MvImage &img, double x1, double x2, const KarcherOptions &opts) {
    const Cell c = locate(img, x1, x2);
    const Manifold &m = img.manifold();
    const double s = c.s, t = c.t;

    if (m.kind() == Manifold::Kind::euclidean) {
        return (1 - s) * (1 - t) * img.pixel(c.i0, c.j0) + (1 - s) * t * img.pixel(c.i0, c.j1) +
               s * (1 - t) * img.pixel(c.i1, c.j0) + s * t * img.pixel(c.i1, c.j1);
    }
    if (s == 0.0 && t == 0.0) return img.pixel(c.i0, c.j0);
    if (s == 0.0) return m.geopoint(img.pixel(c.i0, c.j0), img.pixel(c.i0, c.j1), t);
    if (t == 0.0) return m.geopoint(img.pixel(c.i0, c.j0), img.pixel(c.i1, c.j0), s);
    if (s == 1.0 && t == 1.0) return img.pixel(c.i1, c.j1);
    if (s == 1.0) return m.geopoint(img.pixel(c.i1, c.j0), img.pixel(c.i1, c.j1), t);
    if (t == 1.0) return m.geopoint(img.pixel(c.i0, c.j1), img.pixel(c.i1, c.j1), s);

    Eigen::MatrixXd pts(img.dof(), 4);
    pts.col(0) = img.pixel(c.i0, c.j0);
    pts.col(1) = img.pixel(c.i0, c.j1);
    pts.col(2) = img.pixel(c.i1, c.j0);
    pts.col(3) = img.pixel(c.i1, c.j1);
    Eigen::Vector4d w((1 - s) * (1 - t), (1 - s) * t, s * (1 - t), s * t);
    // Two-step geodesic construction as the starting guess.
    const Vec init = m.geopoint(m.geopoint(pts.col(0), pts.col(1), t), m.geopoint(pts.col(2), pts.col(3), t), s);
    return m.karcher_mean(pts, w, init, opts);
}

ImageGradient image_gradient(const MvImage &img, double x1, double x2, const KarcherOptions &opts) {
    const Manifold &m = img.manifold();
    ImageGradient g;
    g.base = bilinear_sample(img, x1, x2, opts);
    g.d1 = m.zero_tangent();
    g.d2 = m.zero_tangent();

    auto secant = [&](double x, int n, bool first_axis) -> Vec {
        if (x < 0.0 || x > n - 1 || n < 2) return m.zero_tangent();
        double c = std::ceil(x);
        if (c == x) c = x + 1.0;
        if (c > n - 1) c = x - 1.0; // last node: step back
        const Vec target = first_axis ? bilinear_sample(img, c, std::clamp(x2, 0.0, img.n2() - 1.0), opts)
                                      : bilinear_sample(img, std::clamp(x1, 0.0, img.n1() - 1.0), c, opts);
        return m.log(g.base, target) / (c - x);
    };
    g.d1 = secant(x1, img.n1(), true);
    g.d2 = secant(x2, img.n2(), false);
    return g;
}

ImageGradient image_derivative(const MvImage &img, double x1, double x2, const KarcherOptions &opts) {
    const Manifold &m = img.manifold();
    ImageGradient g;
    g.base = bilinear_sample(img, x1, x2, opts);
    g.d1 = m.zero_tangent();
    g.d2 = m.zero_tangent();
    const bool in1 = x1 >= 0.0 && x1 <= img.n1() - 1 && img.n1() >= 2;
    const bool in2 = x2 >= 0.0 && x2 <= img.n2() - 1 && img.n2() >= 2;
    if (!in1 && !in2) return g;

    const Cell c = locate(img, x1, x2);
    const double s = c.s, t = c.t;
    Eigen::MatrixXd pts(img.dof(), 4);
    pts.col(0) = img.pixel(c.i0, c.j0);
    pts.col(1) = img.pixel(c.i0, c.j1);
    pts.col(2) = img.pixel(c.i1, c.j0);
    pts.col(3) = img.pixel(c.i1, c.j1);
    const Eigen::Vector4d w((1 - s) * (1 - t), (1 - s) * t, s * (1 - t), s * t);
    if (in1 && c.i1 != c.i0) g.d1 = m.mean_derivative(g.base, pts, w, Eigen::Vector4d(-(1 - t), -t, 1 - t, t));
    if (in2 && c.j1 != c.j0) g.d2 = m.mean_derivative(g.base, pts, w, Eigen::Vector4d(-(1 - s), 1 - s, -s, s));
    return g;
}

MvImage scattered_interp(const Manifold &m, const std::vector<std::array<double, 2>> &sites,
                         const std::vector<Vec> &values, int n1, int n2, const KarcherOptions &opts) {
    if (sites.size() != values.size()) throw InvalidArgument("scattered_interp: sites and values differ in length");
    if (sites.size() < 3) throw InvalidArgument("scattered_interp: need at least three sites");
    for (const auto &v : values)
        if (v.size() != m.point_dim()) throw InvalidArgument("scattered_interp: value has wrong dimension");

    const Triangulation tri = delaunay(sites);

    const std::size_t nq = static_cast<std::size_t>(n1) * n2;
    std::vector<int> owner(nq, -1);
    std::vector<double> quality(nq, -std::numeric_limits<double>::infinity());
    std::vector<std::array<double, 3>> bary(nq);
    constexpr double eps = 1e-12;

    for (std::size_t k = 0; k < tri.triangles.size(); ++k) {
        const auto &t = tri.triangles[k];
        const auto &a = sites[t[0]], &b = sites[t[1]], &c = sites[t[2]];
        const double det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        if (det == 0.0) continue;
        const double lo0 = std::min({a[0], b[0], c[0]}), hi0 = std::max({a[0], b[0], c[0]});
        const double lo1 = std::min({a[1], b[1], c[1]}), hi1 = std::max({a[1], b[1], c[1]});
        const int i_lo = std::max(0, static_cast<int>(std::ceil(lo0 - 1e-9)));
        const int i_hi = std::min(n1 - 1, static_cast<int>(std::floor(hi0 + 1e-9)));
        const int j_lo = std::max(0, static_cast<int>(std::ceil(lo1 - 1e-9)));
        const int j_hi = std::min(n2 - 1, static_cast<int>(std::floor(hi1 + 1e-9)));
        for (int i = i_lo; i <= i_hi; ++i)
            for (int j = j_lo; j <= j_hi; ++j) {
                const double la = ((b[0] - i) * (c[1] - j) - (b[1] - j) * (c[0] - i)) / det;
                const double lb = ((c[0] - i) * (a[1] - j) - (c[1] - j) * (a[0] - i)) / det;
                const double lc = 1.0 - la - lb;
                const double q = std::min({la, lb, lc});
                const std::size_t idx = static_cast<std::size_t>(i) * n2 + j;
                if (q >= -eps && q > quality[idx]) {
                    quality[idx] = q;
                    owner[idx] = static_cast<int>(k);
                    bary[idx] = {la, lb, lc};
                }
            }
    }

    std::map<std::array<double, 2>, int> exact;
    for (std::size_t i = 0; i < sites.size(); ++i) exact.emplace(sites[i], tri.representative[i]);

    MvImage out(m, n1, n2);
    Eigen::MatrixXd pts(m.point_dim(), 3);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * n2 + j;
            if (auto it = exact.find({static_cast<double>(i), static_cast<double>(j)}); it != exact.end()) {
                out.set(i, j, values[it->second]);
                continue;
            }
            if (owner[idx] >= 0) {
                const auto &t = tri.triangles[owner[idx]];
                Eigen::Vector3d w(std::max(bary[idx][0], 0.0), std::max(bary[idx][1], 0.0), std::max(bary[idx][2], 0.0));
                w /= w.sum();
                for (int r = 0; r < 3; ++r) pts.col(r) = values[t[r]];
                out.set(i, j, m.karcher_mean(pts, w, opts));
                continue;
            }
            // Outside the hull: nearest site, lowest index on ties.
            double best = std::numeric_limits<double>::infinity();
            int best_k = 0;
            for (std::size_t k = 0; k < sites.size(); ++k) {
                const double d = (sites[k][0] - i) * (sites[k][0] - i) + (sites[k][1] - j) * (sites[k][1] - j);
                if (d < best) {
                    best = d;
                    best_k = static_cast<int>(k);
                }
            }
            out.set(i, j, values[best_k]);
        }
    return out;
}

MvImage gaussian_smooth(const MvImage &img, double sigma) {
    const int r = sigma > 0.0 ? static_cast<int>(std::floor(2.0 * sigma + 1e-12)) : 0;
    if (r == 0) return img;
    const Manifold &m = img.manifold();
    const int n1 = img.n1(), n2 = img.n2();
    MvImage out(m, n1, n2);
    Eigen::MatrixXd pts(img.dof(), (2 * r + 1) * (2 * r + 1));
    Vec w(pts.cols());
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            int k = 0;
            int centre = 0;
            for (int di = -r; di <= r; ++di)
                for (int dj = -r; dj <= r; ++dj) {
                    const int ii = i + di, jj = j + dj;
                    if (ii < 0 || jj < 0 || ii >= n1 || jj >= n2) continue;
                    if (di == 0 && dj == 0) centre = k;
                    pts.col(k) = img.pixel(ii, jj);
                    w[k] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
                    ++k;
                }
            const auto used_w = w.head(k) / w.head(k).sum();
            out.set(i, j, m.karcher_mean(pts.leftCols(k), used_w, pts.col(centre)));
        }
    return out;
}

MvImage resample(const MvImage &img, int m1, int m2) {
    if (m1 < 1 || m2 < 1) throw InvalidArgument("resample: target size must be positive");
    if (m1 == img.n1() && m2 == img.n2()) return img;
    MvImage out(img.manifold(), m1, m2);
    for (int i = 0; i < m1; ++i)
        for (int j = 0; j < m2; ++j)
            out.set(i, j, bilinear_sample(img, map_coordinate(i, img.n1(), m1), map_coordinate(j, img.n2(), m2)));
    return out;
}

MvImage smooth_downsample(const MvImage &img, double factor, double kernel_sigma) {
    if (!(factor > 0.0 && factor <= 1.0)) throw InvalidArgument("smooth_downsample: factor must lie in (0, 1]");
    const int m1 = static_cast<int>(std::lround(img.n1() * factor));
    const int m2 = static_cast<int>(std::lround(img.n2() * factor));
    if (m1 < 4 || m2 < 4) throw InvalidArgument("smooth_downsample: output would be smaller than 4x4");
    return resample(gaussian_smooth(img, kernel_sigma), m1, m2);
}

MvImage pointwise_geodesic(const MvImage &a, const MvImage &b, double t) {
    if (!a.same_shape(b) || a.manifold() != b.manifold()) throw InvalidArgument("pointwise_geodesic: image mismatch");
    MvImage out(a.manifold(), a.n1(), a.n2());
    for (int i = 0; i < a.n1(); ++i)
        for (int j = 0; j < a.n2(); ++j) out.set(i, j, a.manifold().geopoint(a.pixel(i, j), b.pixel(i, j), t));
    return out;
}

double squared_l2_distance(const MvImage &a, const MvImage &b) {
    if (!a.same_shape(b) || a.manifold() != b.manifold()) throw InvalidArgument("squared_l2_distance: image mismatch");
    double acc = 0.0;
    for (int i = 0; i < a.n1(); ++i)
        for (int j = 0; j < a.n2(); ++j) acc += a.manifold().dist2(a.pixel(i, j), b.pixel(i, j));
    return acc;
}

MvImage warp(const MvImage &img, const VectorField &positions) {
    MvImage out(img.manifold(), positions.n1(), positions.n2());
    for (int i = 0; i < positions.n1(); ++i)
        for (int j = 0; j < positions.n2(); ++j)
            out.set(i, j, bilinear_sample(img, positions.x1(i, j), positions.x2(i, j)));
    return out;
}

} // namespace mvmorph
