// grid.cpp - difference operators, averaging and the elastic regularizer.

#include "mvmorph/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "mvmorph/errors.hpp"

namespace mvmorph {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Displacement::Displacement(int n1, int n2) {
    if (n1 < 2 || n2 < 2) throw InvalidArgument("Displacement: grid must be at least 2x2");
    v1 = MatrixXd::Zero(n1 - 1, n2);
    v2 = MatrixXd::Zero(n1, n2 - 1);
}

void Displacement::enforce_boundary() {
    v1.row(0).setZero();
    v1.row(v1.rows() - 1).setZero();
    v2.col(0).setZero();
    v2.col(v2.cols() - 1).setZero();
}

bool Displacement::satisfies_boundary() const {
    return (v1.row(0).array() == 0.0).all() && (v1.row(v1.rows() - 1).array() == 0.0).all() &&
           (v2.col(0).array() == 0.0).all() && (v2.col(v2.cols() - 1).array() == 0.0).all();
}

VectorXd Displacement::flatten() const {
    VectorXd x(size());
    Eigen::Index k = 0;
    for (Eigen::Index a = 0; a < v1.rows(); ++a)
        for (Eigen::Index j = 0; j < v1.cols(); ++j) x[k++] = v1(a, j);
    for (Eigen::Index i = 0; i < v2.rows(); ++i)
        for (Eigen::Index b = 0; b < v2.cols(); ++b) x[k++] = v2(i, b);
    return x;
}

Displacement Displacement::unflatten(int n1, int n2, const VectorXd &x) {
    Displacement d(n1, n2);
    if (x.size() != d.size()) throw InvalidArgument("Displacement::unflatten: length mismatch");
    Eigen::Index k = 0;
    for (Eigen::Index a = 0; a < d.v1.rows(); ++a)
        for (Eigen::Index j = 0; j < d.v1.cols(); ++j) d.v1(a, j) = x[k++];
    for (Eigen::Index i = 0; i < d.v2.rows(); ++i)
        for (Eigen::Index b = 0; b < d.v2.cols(); ++b) d.v2(i, b) = x[k++];
    return d;
}

VectorXd Displacement::free_mask(int n1, int n2) {
    Displacement d(n1, n2);
    d.v1.setOnes();
    d.v2.setOnes();
    d.enforce_boundary();
    return d.flatten();
}

double Displacement::dot(const Displacement &o) const {
    return (v1.array() * o.v1.array()).sum() + (v2.array() * o.v2.array()).sum();
}

Displacement &Displacement::operator+=(const Displacement &o) {
    v1 += o.v1;
    v2 += o.v2;
    return *this;
}

Displacement &Displacement::operator-=(const Displacement &o) {
    v1 -= o.v1;
    v2 -= o.v2;
    return *this;
}

Displacement &Displacement::operator*=(double s) {
    v1 *= s;
    v2 *= s;
    return *this;
}

VectorField VectorField::identity(int n1, int n2) {
    VectorField f(n1, n2);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            f.x1(i, j) = i;
            f.x2(i, j) = j;
        }
    return f;
}

VectorField deformation_from(const VectorField &u) {
    VectorField phi = VectorField::identity(u.n1(), u.n2());
    phi.x1 -= u.x1;
    phi.x2 -= u.x2;
    return phi;
}

namespace {

// Cell index and fraction for a clamped coordinate on [0, n-1].
inline void locate(double y, int n, int &i0, double &s) {
    y = std::clamp(y, 0.0, static_cast<double>(n - 1));
    i0 = std::min(static_cast<int>(std::floor(y)), std::max(n - 2, 0));
    s = y - i0;
}

} // namespace

double sample_bilinear(const MatrixXd &f, double y1, double y2) {
    const int n1 = static_cast<int>(f.rows()), n2 = static_cast<int>(f.cols());
    int i0, j0;
    double s, t;
    locate(y1, n1, i0, s);
    locate(y2, n2, j0, t);
    const int i1 = std::min(i0 + 1, n1 - 1), j1 = std::min(j0 + 1, n2 - 1);
    return (1 - s) * (1 - t) * f(i0, j0) + (1 - s) * t * f(i0, j1) + s * (1 - t) * f(i1, j0) + s * t * f(i1, j1);
}

std::array<double, 2> sample_bilinear(const VectorField &f, double y1, double y2) {
    return {sample_bilinear(f.x1, y1, y2), sample_bilinear(f.x2, y1, y2)};
}

RegularizerParams RegularizerParams::from_alpha(double alpha, double eta, int m) {
    RegularizerParams p{alpha, alpha, eta, alpha, m};
    p.validate();
    return p;
}

void RegularizerParams::validate() const {
    if (mu < 0 || lambda < 0 || eta < 0 || gamma < 0) throw InvalidArgument("regularizer weights must be nonnegative");
    if (!(mu > 0 || lambda > 0 || eta > 0 || gamma > 0)) throw InvalidArgument("at least one regularizer weight must be positive");
    if (m < 1) throw InvalidArgument("regularizer order m must be >= 1");
}

VectorField apply_P(const Displacement &v) {
    const int n1 = v.n1(), n2 = v.n2();
    VectorField out(n1, n2);
    for (int i = 1; i < n1 - 1; ++i)
        for (int j = 0; j < n2; ++j) out.x1(i, j) = 0.5 * (v.v1(i - 1, j) + v.v1(i, j));
    for (int i = 0; i < n1; ++i)
        for (int j = 1; j < n2 - 1; ++j) out.x2(i, j) = 0.5 * (v.v2(i, j - 1) + v.v2(i, j));
    return out;
}

Displacement apply_Pt(const VectorField &g) {
    const int n1 = g.n1(), n2 = g.n2();
    Displacement out(n1, n2);
    for (int i = 1; i < n1 - 1; ++i)
        for (int j = 0; j < n2; ++j) {
            out.v1(i - 1, j) += 0.5 * g.x1(i, j);
            out.v1(i, j) += 0.5 * g.x1(i, j);
        }
    for (int i = 0; i < n1; ++i)
        for (int j = 1; j < n2 - 1; ++j) {
            out.v2(i, j - 1) += 0.5 * g.x2(i, j);
            out.v2(i, j) += 0.5 * g.x2(i, j);
        }
    return out;
}

MatrixXd forward_diff(const MatrixXd &a, int axis) {
    if (axis == 0) {
        if (a.rows() < 2) return MatrixXd(0, a.cols());
        return a.bottomRows(a.rows() - 1) - a.topRows(a.rows() - 1);
    }
    if (a.cols() < 2) return MatrixXd(a.rows(), 0);
    return a.rightCols(a.cols() - 1) - a.leftCols(a.cols() - 1);
}

MatrixXd forward_diff_adjoint(const MatrixXd &d, int axis) {
    if (axis == 0) {
        MatrixXd a = MatrixXd::Zero(d.rows() + 1, d.cols());
        a.bottomRows(d.rows()) += d;
        a.topRows(d.rows()) -= d;
        return a;
    }
    MatrixXd a = MatrixXd::Zero(d.rows(), d.cols() + 1);
    a.rightCols(d.cols()) += d;
    a.leftCols(d.cols()) -= d;
    return a;
}

namespace {

// D11 v1: node field, zero first/last row, interior rows hold v1(i) - v1(i-1).
MatrixXd d11(const MatrixXd &v1) {
    const Eigen::Index n1 = v1.rows() + 1;
    MatrixXd out = MatrixXd::Zero(n1, v1.cols());
    if (n1 > 2) out.middleRows(1, n1 - 2) = forward_diff(v1, 0);
    return out;
}
MatrixXd d11_adj(const MatrixXd &g) {
    const Eigen::Index n1 = g.rows();
    if (n1 <= 2) return MatrixXd::Zero(n1 - 1, g.cols());
    return forward_diff_adjoint(g.middleRows(1, n1 - 2), 0);
}
MatrixXd d22(const MatrixXd &v2) {
    const Eigen::Index n2 = v2.cols() + 1;
    MatrixXd out = MatrixXd::Zero(v2.rows(), n2);
    if (n2 > 2) out.middleCols(1, n2 - 2) = forward_diff(v2, 1);
    return out;
}
MatrixXd d22_adj(const MatrixXd &g) {
    const Eigen::Index n2 = g.cols();
    if (n2 <= 2) return MatrixXd::Zero(g.rows(), n2 - 1);
    return forward_diff_adjoint(g.middleCols(1, n2 - 2), 1);
}

MatrixXd diff_multi(MatrixXd a, int k1, int k2) {
    for (int k = 0; k < k1; ++k) a = forward_diff(a, 0);
    for (int k = 0; k < k2; ++k) a = forward_diff(a, 1);
    return a;
}

MatrixXd diff_multi_adjoint(MatrixXd d, int k1, int k2) {
    for (int k = 0; k < k2; ++k) d = forward_diff_adjoint(d, 1);
    for (int k = 0; k < k1; ++k) d = forward_diff_adjoint(d, 0);
    return d;
}

Eigen::Index block_size(Eigen::Index r, Eigen::Index c, int k1, int k2) {
    return std::max<Eigen::Index>(r - k1, 0) * std::max<Eigen::Index>(c - k2, 0);
}

// Visits the residual blocks in a fixed order. For each block, `fwd` receives the
// block as a matrix (forward mode) or `adj` accumulates its adjoint.
struct Layout {
    int n1, n2;
    const RegularizerParams &p;

    template <typename F> void each(F &&f) const {
        const double smu = std::sqrt(p.mu), smu2 = std::sqrt(0.5 * p.mu), sla = std::sqrt(0.5 * p.lambda);
        const double seta = std::sqrt(p.eta), sgam = std::sqrt(p.gamma);
        f(0, smu, -1, -1, Eigen::Index(n1) * n2);
        f(1, smu, -1, -1, Eigen::Index(n1) * n2);
        f(2, smu2, -1, -1, Eigen::Index(n1 - 1) * (n2 - 1));
        f(3, sla, -1, -1, Eigen::Index(n1) * n2);
        f(4, seta, -1, -1, Eigen::Index(n1 - 1) * n2);
        f(5, seta, -1, -1, Eigen::Index(n1) * (n2 - 1));
        for (int a1 = p.m; a1 >= 0; --a1) f(6, sgam, a1, p.m - a1, block_size(n1 - 1, n2, a1, p.m - a1));
        for (int a1 = p.m; a1 >= 0; --a1) f(7, sgam, a1, p.m - a1, block_size(n1, n2 - 1, a1, p.m - a1));
    }
};

void put(VectorXd &r, Eigen::Index &off, const MatrixXd &block, double scale) {
    for (Eigen::Index i = 0; i < block.rows(); ++i)
        for (Eigen::Index j = 0; j < block.cols(); ++j) r[off++] = scale * block(i, j);
}

MatrixXd take(const VectorXd &r, Eigen::Index &off, Eigen::Index rows, Eigen::Index cols, double scale) {
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * r[off++];
    return m;
}

} // namespace

Eigen::Index residual_size(int n1, int n2, const RegularizerParams &p) {
    Eigen::Index total = 0;
    Layout{n1, n2, p}.each([&](int, double, int, int, Eigen::Index sz) { total += sz; });
    return total;
}

VectorXd apply_S(const Displacement &v, const RegularizerParams &p) {
    const int n1 = v.n1(), n2 = v.n2();
    VectorXd r(residual_size(n1, n2, p));
    Eigen::Index off = 0;
    Layout{n1, n2, p}.each([&](int kind, double s, int a1, int a2, Eigen::Index sz) {
        if (sz == 0) return;
        switch (kind) {
        case 0: put(r, off, d11(v.v1), s); break;
        case 1: put(r, off, d22(v.v2), s); break;
        case 2: put(r, off, forward_diff(v.v1, 1) + forward_diff(v.v2, 0), s); break;
        case 3: put(r, off, d11(v.v1) + d22(v.v2), s); break;
        case 4: put(r, off, v.v1, s); break;
        case 5: put(r, off, v.v2, s); break;
        case 6: put(r, off, diff_multi(v.v1, a1, a2), s); break;
        case 7: put(r, off, diff_multi(v.v2, a1, a2), s); break;
        }
    });
    return r;
}

Displacement apply_St(const VectorXd &r, int n1, int n2, const RegularizerParams &p) {
    if (r.size() != residual_size(n1, n2, p)) throw InvalidArgument("apply_St: residual length mismatch");
    Displacement out(n1, n2);
    Eigen::Index off = 0;
    Layout{n1, n2, p}.each([&](int kind, double s, int a1, int a2, Eigen::Index sz) {
        if (sz == 0) return;
        switch (kind) {
        case 0: out.v1 += d11_adj(take(r, off, n1, n2, s)); break;
        case 1: out.v2 += d22_adj(take(r, off, n1, n2, s)); break;
        case 2: {
            const MatrixXd g = take(r, off, n1 - 1, n2 - 1, s);
            out.v1 += forward_diff_adjoint(g, 1);
            out.v2 += forward_diff_adjoint(g, 0);
            break;
        }
        case 3: {
            const MatrixXd g = take(r, off, n1, n2, s);
            out.v1 += d11_adj(g);
            out.v2 += d22_adj(g);
            break;
        }
        case 4: out.v1 += take(r, off, n1 - 1, n2, s); break;
        case 5: out.v2 += take(r, off, n1, n2 - 1, s); break;
        case 6: out.v1 += diff_multi_adjoint(take(r, off, n1 - 1 - a1, n2 - a2, s), a1, a2); break;
        case 7: out.v2 += diff_multi_adjoint(take(r, off, n1 - a1, n2 - 1 - a2, s), a1, a2); break;
        }
    });
    return out;
}

double regularizer_value(const Displacement &v, const RegularizerParams &p) { return apply_S(v, p).squaredNorm(); }

namespace {

constexpr int max_order = 8;
using Stencil = std::array<double, max_order + 1>;

Stencil binomial_stencil(int a) {
    if (a > max_order) throw InvalidArgument("difference order too large");
    Stencil c{};
    double b = 1.0;
    for (int k = 0; k <= a; ++k) {
        c[k] = ((a - k) % 2 == 0 ? 1.0 : -1.0) * b;
        b = b * (a - k) / (k + 1);
    }
    return c;
}

// a-th valid forward difference along rows / columns into w (resized), and
// the adjoints accumulated into out.
void diff_rows(const MatrixXd &v, int a, MatrixXd &w) {
    const Stencil c = binomial_stencil(a);
    const Eigen::Index r = v.rows() - a;
    w.resize(r, v.cols());
    w.noalias() = c[0] * v.topRows(r);
    for (int k = 1; k <= a; ++k) w.noalias() += c[k] * v.middleRows(k, r);
}

void diff_cols(const MatrixXd &v, int a, MatrixXd &w) {
    const Stencil c = binomial_stencil(a);
    const Eigen::Index r = v.cols() - a;
    w.resize(v.rows(), r);
    w.noalias() = c[0] * v.leftCols(r);
    for (int k = 1; k <= a; ++k) w.noalias() += c[k] * v.middleCols(k, r);
}

MatrixXd diff_rows(const MatrixXd &v, int a) {
    MatrixXd w;
    diff_rows(v, a, w);
    return w;
}

MatrixXd diff_cols(const MatrixXd &v, int a) {
    MatrixXd w;
    diff_cols(v, a, w);
    return w;
}

void add_diff_rows_adjoint(const MatrixXd &w, int a, MatrixXd &out) {
    const Stencil c = binomial_stencil(a);
    for (int k = 0; k <= a; ++k) out.middleRows(k, w.rows()).noalias() += c[k] * w;
}

void add_diff_cols_adjoint(const MatrixXd &w, int a, MatrixXd &out) {
    const Stencil c = binomial_stencil(a);
    for (int k = 0; k <= a; ++k) out.middleCols(k, w.cols()).noalias() += c[k] * w;
}

// gamma * sum_a (D_a x D_{m-a})^T (D_a x D_{m-a}) v for one component.
void add_higher_order(const MatrixXd &v, int m, double gamma, MatrixXd &out) {
    thread_local MatrixXd r, w, t;
    for (int a = 0; a <= m; ++a) {
        if (v.rows() <= a || v.cols() <= m - a) continue;
        diff_rows(v, a, r);
        diff_cols(r, m - a, w);
        w *= gamma;
        t.setZero(w.rows(), v.cols());
        add_diff_cols_adjoint(w, m - a, t);
        add_diff_rows_adjoint(t, a, out);
    }
}

} // namespace

Displacement apply_StS(const Displacement &v, const RegularizerParams &p) {
    const int n1 = v.n1(), n2 = v.n2();
    Displacement out(n1, n2);
    // d1 v1 and d2 v2 at interior nodes: rows 1..n1-2 of the v1 row differences.
    if ((p.mu != 0.0 || p.lambda != 0.0) && n1 >= 2 && n2 >= 2) {
        const MatrixXd d11 = diff_rows(v.v1, 1).topRows(n1 - 2);
        const MatrixXd d22 = diff_cols(v.v2, 1).leftCols(n2 - 2);
        const MatrixXd g11 = p.mu * d11, g22 = p.mu * d22;
        // lambda/2 (d11 + d22)^2 on the same interior nodes (full node grid,
        // v1 differences vanish on the first and last row, v2 on the first and
        // last column).
        MatrixXd div = MatrixXd::Zero(n1, n2);
        div.middleRows(1, n1 - 2) += d11;
        div.middleCols(1, n2 - 2) += d22;
        div *= 0.5 * p.lambda;

        MatrixXd r1 = MatrixXd::Zero(n1 - 1, n2);
        MatrixXd e1 = g11 + div.middleRows(1, n1 - 2);
        add_diff_rows_adjoint(e1, 1, r1);
        MatrixXd r2 = MatrixXd::Zero(n1, n2 - 1);
        MatrixXd e2 = g22 + div.middleCols(1, n2 - 2);
        add_diff_cols_adjoint(e2, 1, r2);
        out.v1 += r1;
        out.v2 += r2;
    }
    if (p.mu != 0.0) {
        // mu/2 (d2 v1 + d1 v2)^2 on the (n1-1) x (n2-1) cell grid.
        const MatrixXd g = 0.5 * p.mu * (diff_cols(v.v1, 1) + diff_rows(v.v2, 1));
        add_diff_cols_adjoint(g, 1, out.v1);
        add_diff_rows_adjoint(g, 1, out.v2);
    }
    if (p.eta != 0.0) {
        out.v1 += p.eta * v.v1;
        out.v2 += p.eta * v.v2;
    }
    if (p.gamma != 0.0) {
        add_higher_order(v.v1, p.m, p.gamma, out.v1);
        add_higher_order(v.v2, p.m, p.gamma, out.v2);
    }
    return out;
}

Displacement regularizer_gradient(const Displacement &v, const RegularizerParams &p) { return 2.0 * apply_StS(v, p); }

VectorXd StS_diagonal(int n1, int n2, const RegularizerParams &p) {
    // S^T S only couples entries closer than `stride` along both axes, so probing
    // with a strided comb of ones reads off the diagonal without overlap.
    const int stride = 2 * std::max(p.m, 1) + 2;
    Displacement diag(n1, n2);
    for (int comp = 0; comp < 2; ++comp)
        for (int r1 = 0; r1 < stride; ++r1)
            for (int r2 = 0; r2 < stride; ++r2) {
                Displacement probe(n1, n2);
                MatrixXd &m = comp == 0 ? probe.v1 : probe.v2;
                bool any = false;
                for (Eigen::Index i = r1; i < m.rows(); i += stride)
                    for (Eigen::Index j = r2; j < m.cols(); j += stride) {
                        m(i, j) = 1.0;
                        any = true;
                    }
                if (!any) continue;
                const Displacement h = apply_StS(probe, p);
                const MatrixXd &hm = comp == 0 ? h.v1 : h.v2;
                MatrixXd &dm = comp == 0 ? diag.v1 : diag.v2;
                for (Eigen::Index i = r1; i < m.rows(); i += stride)
                    for (Eigen::Index j = r2; j < m.cols(); j += stride) dm(i, j) = hm(i, j);
            }
    return diag.flatten();
}

MatrixXd JacobianField::det() const { return (a11.array() * a22.array() - a12.array() * a21.array()).matrix(); }

JacobianField forward_jacobian(const VectorField &phi) {
    const int n1 = phi.n1(), n2 = phi.n2();
    JacobianField j{MatrixXd::Zero(n1, n2), MatrixXd::Zero(n1, n2), MatrixXd::Zero(n1, n2), MatrixXd::Zero(n1, n2)};
    for (int i = 0; i < n1; ++i)
        for (int k = 0; k < n2; ++k) {
            const int ia = (i + 1 < n1) ? i : i - 1;
            const int ka = (k + 1 < n2) ? k : k - 1;
            if (n1 > 1) {
                j.a11(i, k) = phi.x1(ia + 1, k) - phi.x1(ia, k);
                j.a21(i, k) = phi.x2(ia + 1, k) - phi.x2(ia, k);
            }
            if (n2 > 1) {
                j.a12(i, k) = phi.x1(i, ka + 1) - phi.x1(i, ka);
                j.a22(i, k) = phi.x2(i, ka + 1) - phi.x2(i, ka);
            }
        }
    return j;
}

} // namespace mvmorph
