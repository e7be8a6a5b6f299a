// grid.hpp - staggered-grid calculus for displacement fields.
//
// Indexing is zero based. Image pixels sit at the integer nodes (i, j),
// 0 <= i < n1, 0 <= j < n2. The first displacement component v1(a, j) lives on
// the edge midpoint (a + 1/2, j), a = 0..n1-2; the second component v2(i, b)
// lives on (i, b + 1/2), b = 0..n2-2. The outermost staggered values of each
// component carry zero normal flow and are pinned to zero.

#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

namespace mvmorph {

struct Displacement {
    Eigen::MatrixXd v1; // (n1-1) x n2
    Eigen::MatrixXd v2; // n1 x (n2-1)

    Displacement() = default;
    Displacement(int n1, int n2);
    static Displacement zeros(int n1, int n2) { return Displacement(n1, n2); }

    int n1() const { return static_cast<int>(v2.rows()); }
    int n2() const { return static_cast<int>(v1.cols()); }
    Eigen::Index size() const { return v1.size() + v2.size(); }

    // Zeroes the pinned boundary values.
    void enforce_boundary();
    bool satisfies_boundary() const;

    // Flat layout: v1 row-major, then v2 row-major.
    Eigen::VectorXd flatten() const;
    static Displacement unflatten(int n1, int n2, const Eigen::VectorXd &x);
    // 1 for free entries, 0 for pinned ones, in flatten() order.
    static Eigen::VectorXd free_mask(int n1, int n2);

    double dot(const Displacement &o) const;
    double squared_norm() const { return dot(*this); }

    Displacement &operator+=(const Displacement &o);
    Displacement &operator-=(const Displacement &o);
    Displacement &operator*=(double s);
    friend Displacement operator+(Displacement a, const Displacement &b) { return a += b; }
    friend Displacement operator-(Displacement a, const Displacement &b) { return a -= b; }
    friend Displacement operator*(double s, Displacement a) { return a *= s; }
};

// A node-centred vector field on the pixel grid: either a displacement sampled
// at the pixels or a map x -> phi(x) into the image domain.
struct VectorField {
    Eigen::MatrixXd x1; // n1 x n2
    Eigen::MatrixXd x2; // n1 x n2

    VectorField() = default;
    VectorField(int n1, int n2) : x1(Eigen::MatrixXd::Zero(n1, n2)), x2(Eigen::MatrixXd::Zero(n1, n2)) {}

    int n1() const { return static_cast<int>(x1.rows()); }
    int n2() const { return static_cast<int>(x1.cols()); }

    static VectorField identity(int n1, int n2);
};

// id - u, the deformation associated with a node displacement u.
VectorField deformation_from(const VectorField &u);

// Classical bilinear interpolation of a field at (y1, y2); the query is
// clamped to the node hull [0, n1-1] x [0, n2-1].
std::array<double, 2> sample_bilinear(const VectorField &f, double y1, double y2);
double sample_bilinear(const Eigen::MatrixXd &f, double y1, double y2);

struct RegularizerParams {
    double mu = 0.0;
    double lambda = 0.0;
    double eta = 0.0;
    double gamma = 0.0;
    int m = 3;

    // mu = lambda = gamma = alpha.
    static RegularizerParams from_alpha(double alpha, double eta = 0.0, int m = 3);
    void validate() const;
};

// Averaging operator P: staggered -> nodes.
VectorField apply_P(const Displacement &v);
// Adjoint of P (no boundary projection).
Displacement apply_Pt(const VectorField &g);

// Stacked residual S v. Blocks in order: sqrt(mu) D11 v1, sqrt(mu) D22 v2,
// sqrt(mu/2) (D12 v1 + D21 v2), sqrt(lambda/2) (D11 v1 + D22 v2), sqrt(eta) v1,
// sqrt(eta) v2, then sqrt(gamma) D^a v1 and sqrt(gamma) D^a v2 for every
// multi-index |a| = m (a1 = m..0).
Eigen::VectorXd apply_S(const Displacement &v, const RegularizerParams &p);
Displacement apply_St(const Eigen::VectorXd &r, int n1, int n2, const RegularizerParams &p);
Eigen::Index residual_size(int n1, int n2, const RegularizerParams &p);

double regularizer_value(const Displacement &v, const RegularizerParams &p);
Displacement regularizer_gradient(const Displacement &v, const RegularizerParams &p);
Displacement apply_StS(const Displacement &v, const RegularizerParams &p);
// Diagonal of S^T S in flatten() order.
Eigen::VectorXd StS_diagonal(int n1, int n2, const RegularizerParams &p);

// Valid forward differences along an axis and their adjoint. Exposed for tests.
Eigen::MatrixXd forward_diff(const Eigen::MatrixXd &a, int axis);
Eigen::MatrixXd forward_diff_adjoint(const Eigen::MatrixXd &d, int axis);

// Per-pixel 2x2 Jacobian of a node map.
struct JacobianField {
    Eigen::MatrixXd a11, a12, a21, a22; // d phi_r / d x_c

    Eigen::MatrixXd det() const;
};

// Forward differences, backward at the last row/column.
JacobianField forward_jacobian(const VectorField &phi);

} // namespace mvmorph
