// support.hpp - random instances and independent dense oracles for the tests.

#pragma once

#include <functional>
#include <random>

#include <Eigen/Dense>

#include "mvmorph/grid.hpp"
#include "mvmorph/image.hpp"
#include "mvmorph/manifold.hpp"
#include "mvmorph/registration.hpp"

namespace testing {

using namespace mvmorph;

// Random point near a fixed base point: exp_base(spread * xi), xi Gaussian.
inline Vec random_point(const Manifold &m, std::mt19937 &g, double spread = 0.5) {
    std::normal_distribution<double> N(0.0, 1.0);
    switch (m.kind()) {
    case Manifold::Kind::euclidean: {
        Vec p(m.point_dim());
        for (int k = 0; k < p.size(); ++k) p[k] = N(g);
        return p;
    }
    case Manifold::Kind::circle: {
        std::uniform_real_distribution<double> U(-3.0, 3.0);
        return Vec::Constant(1, U(g));
    }
    case Manifold::Kind::sphere: {
        Vec base = Vec::Zero(m.point_dim());
        base[base.size() - 1] = 1.0;
        Vec t = Vec::Zero(m.point_dim());
        for (int k = 0; k + 1 < t.size(); ++k) t[k] = spread * N(g);
        return m.exp(base, t);
    }
    case Manifold::Kind::spd: {
        const int n = m.parameter();
        Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n);
        for (int r = 0; r < n; ++r) B(r, r) = 1.0 + r;
        Eigen::MatrixXd X(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c <= r; ++c) X(r, c) = X(c, r) = spread * N(g);
        return m.exp(Eigen::Map<Vec>(B.data(), n * n), Eigen::Map<Vec>(X.data(), n * n));
    }
    case Manifold::Kind::product: {
        Vec p(m.point_dim());
        for (const auto &f : m.factors()) p.segment(f.offset, f.manifold.point_dim()) = random_point(f.manifold, g, spread);
        return p;
    }
    }
    return {};
}

// Random tangent vector at p.
inline Vec random_tangent(const Manifold &m, VecCRef p, std::mt19937 &g, double scale = 0.3) {
    std::mt19937 g2(g());
    const Vec q = random_point(m, g2, 0.5);
    Vec v = m.log(p, q);
    const double nv = m.norm(p, v);
    return nv > 0 ? Vec(v * (scale / nv)) : v;
}

inline MvImage random_image(const Manifold &m, int n1, int n2, std::mt19937 &g, double spread = 0.5) {
    MvImage img(m, n1, n2);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) img.set(i, j, random_point(m, g, spread));
    return img;
}

inline Displacement random_displacement(int n1, int n2, std::mt19937 &g, double amp = 0.4) {
    std::uniform_real_distribution<double> U(-amp, amp);
    Displacement v(n1, n2);
    for (Eigen::Index k = 0; k < v.v1.size(); ++k) v.v1.data()[k] = U(g);
    for (Eigen::Index k = 0; k < v.v2.size(); ++k) v.v2.data()[k] = U(g);
    v.enforce_boundary();
    return v;
}

inline double binom(int n, int k) {
    double b = 1.0;
    for (int i = 0; i < k; ++i) b = b * (n - i) / (i + 1);
    return b;
}

// Column-vector index of v1(a, j) and v2(i, b) in Displacement::flatten order.
struct FlatIndex {
    int n1, n2;
    Eigen::Index v1(int a, int j) const { return static_cast<Eigen::Index>(a) * n2 + j; }
    Eigen::Index v2(int i, int b) const {
        return static_cast<Eigen::Index>(n1 - 1) * n2 + static_cast<Eigen::Index>(i) * (n2 - 1) + b;
    }
    Eigen::Index size() const { return static_cast<Eigen::Index>(n1 - 1) * n2 + static_cast<Eigen::Index>(n1) * (n2 - 1); }
};

// Dense S written row by row from the block definitions:
//   sqrt(mu) D11 v1 on all nodes (zero on the first and last row),
//   sqrt(mu) D22 v2 on all nodes (zero on the first and last column),
//   sqrt(mu/2) (d2 v1 + d1 v2) on the (n1-1) x (n2-1) cells,
//   sqrt(lambda/2) (D11 v1 + D22 v2) on all nodes,
//   sqrt(eta) v1, sqrt(eta) v2,
//   sqrt(gamma) D^(a, m-a) v1 for a = m..0, then the same for v2 (valid differences).
inline Eigen::MatrixXd dense_S(int n1, int n2, const RegularizerParams &p) {
    const FlatIndex ix{n1, n2};
    std::vector<Eigen::RowVectorXd> rows;
    auto row = [&]() {
        rows.emplace_back(Eigen::RowVectorXd::Zero(ix.size()));
        return rows.size() - 1;
    };
    const double smu = std::sqrt(p.mu), smu2 = std::sqrt(p.mu / 2), sla = std::sqrt(p.lambda / 2);
    const double seta = std::sqrt(p.eta), sg = std::sqrt(p.gamma);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            const auto r = row();
            if (i >= 1 && i <= n1 - 2) {
                rows[r][ix.v1(i, j)] += smu;
                rows[r][ix.v1(i - 1, j)] -= smu;
            }
        }
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            const auto r = row();
            if (j >= 1 && j <= n2 - 2) {
                rows[r][ix.v2(i, j)] += smu;
                rows[r][ix.v2(i, j - 1)] -= smu;
            }
        }
    for (int a = 0; a < n1 - 1; ++a)
        for (int b = 0; b < n2 - 1; ++b) {
            const auto r = row();
            rows[r][ix.v1(a, b + 1)] += smu2;
            rows[r][ix.v1(a, b)] -= smu2;
            rows[r][ix.v2(a + 1, b)] += smu2;
            rows[r][ix.v2(a, b)] -= smu2;
        }
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            const auto r = row();
            if (i >= 1 && i <= n1 - 2) {
                rows[r][ix.v1(i, j)] += sla;
                rows[r][ix.v1(i - 1, j)] -= sla;
            }
            if (j >= 1 && j <= n2 - 2) {
                rows[r][ix.v2(i, j)] += sla;
                rows[r][ix.v2(i, j - 1)] -= sla;
            }
        }
    for (int a = 0; a < n1 - 1; ++a)
        for (int j = 0; j < n2; ++j) rows[row()][ix.v1(a, j)] = seta;
    for (int i = 0; i < n1; ++i)
        for (int b = 0; b < n2 - 1; ++b) rows[row()][ix.v2(i, b)] = seta;
    for (int comp = 0; comp < 2; ++comp) {
        const int r1 = comp == 0 ? n1 - 1 : n1, r2 = comp == 0 ? n2 : n2 - 1;
        for (int a1 = p.m; a1 >= 0; --a1) {
            const int a2 = p.m - a1;
            for (int i = 0; i + a1 < r1; ++i)
                for (int j = 0; j + a2 < r2; ++j) {
                    const auto r = row();
                    for (int k = 0; k <= a1; ++k)
                        for (int l = 0; l <= a2; ++l) {
                            const double c = ((a1 - k + a2 - l) % 2 ? -1.0 : 1.0) * binom(a1, k) * binom(a2, l);
                            const Eigen::Index col = comp == 0 ? ix.v1(i + k, j + l) : ix.v2(i + k, j + l);
                            rows[r][col] += sg * c;
                        }
                }
        }
    }
    Eigen::MatrixXd S(static_cast<Eigen::Index>(rows.size()), ix.size());
    for (std::size_t r = 0; r < rows.size(); ++r) S.row(static_cast<Eigen::Index>(r)) = rows[r];
    return S;
}

// Dense P: rows are node values x1 (all nodes, row-major) then x2.
inline Eigen::MatrixXd dense_P(int n1, int n2) {
    const FlatIndex ix{n1, n2};
    const Eigen::Index N = static_cast<Eigen::Index>(n1) * n2;
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(2 * N, ix.size());
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            const Eigen::Index r = static_cast<Eigen::Index>(i) * n2 + j;
            if (i >= 1 && i <= n1 - 2) {
                P(r, ix.v1(i - 1, j)) = 0.5;
                P(r, ix.v1(i, j)) = 0.5;
            }
            if (j >= 1 && j <= n2 - 2) {
                P(N + r, ix.v2(i, j - 1)) = 0.5;
                P(N + r, ix.v2(i, j)) = 0.5;
            }
        }
    return P;
}

inline Eigen::VectorXd stack(const VectorField &f) {
    Eigen::VectorXd out(2 * f.x1.size());
    Eigen::Index k = 0;
    for (int i = 0; i < f.n1(); ++i)
        for (int j = 0; j < f.n2(); ++j) out[k++] = f.x1(i, j);
    for (int i = 0; i < f.n1(); ++i)
        for (int j = 0; j < f.n2(); ++j) out[k++] = f.x2(i, j);
    return out;
}

inline VectorField unstack(int n1, int n2, const Eigen::VectorXd &x) {
    VectorField f(n1, n2);
    Eigen::Index k = 0;
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) f.x1(i, j) = x[k++];
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) f.x2(i, j) = x[k++];
    return f;
}

// Central differences of f at x over the free (unpinned) entries.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Displacement &)> &f, const Displacement &v,
                                   double h = 1e-5) {
    const int n1 = v.n1(), n2 = v.n2();
    const Eigen::VectorXd x = v.flatten(), mask = Displacement::free_mask(n1, n2);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        if (mask[k] == 0.0) continue;
        Eigen::VectorXd a = x, b = x;
        a[k] += h;
        b[k] -= h;
        g[k] = (f(Displacement::unflatten(n1, n2, a)) - f(Displacement::unflatten(n1, n2, b))) / (2 * h);
    }
    return g;
}

} // namespace testing
