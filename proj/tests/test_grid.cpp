#include "doctest.h"

#include "mvmorph/errors.hpp"
#include "support.hpp"

using namespace mvmorph;
using testing::dense_P;
using testing::dense_S;
using testing::random_displacement;

namespace {

RegularizerParams mixed_params() { return RegularizerParams{0.7, 0.3, 0.2, 0.45, 3}; }

} // namespace

TEST_CASE("staggered shapes and boundary") {
    Displacement v(5, 6);
    CHECK(v.v1.rows() == 4);
    CHECK(v.v1.cols() == 6);
    CHECK(v.v2.rows() == 5);
    CHECK(v.v2.cols() == 5);
    v.v1.setOnes();
    v.v2.setOnes();
    v.enforce_boundary();
    CHECK(v.satisfies_boundary());
    CHECK(v.v1.row(0).isZero());
    CHECK(v.v1.row(3).isZero());
    CHECK(v.v2.col(0).isZero());
    CHECK(v.v2.col(4).isZero());
    CHECK(Displacement::unflatten(5, 6, v.flatten()).flatten() == v.flatten());
    CHECK_THROWS_AS(Displacement(1, 4), InvalidArgument);
}

TEST_CASE("S and S^T agree with the dense assembly") {
    std::mt19937 g(21);
    for (const auto &p : {mixed_params(), RegularizerParams::from_alpha(0.005, 0.0, 3), RegularizerParams{1, 0, 0, 0, 2}}) {
        for (auto [n1, n2] : {std::pair{5, 6}, std::pair{6, 5}, std::pair{3, 4}}) {
            CAPTURE(n1);
            CAPTURE(n2);
            const Eigen::MatrixXd S = dense_S(n1, n2, p);
            REQUIRE(S.rows() == residual_size(n1, n2, p));
            for (int rep = 0; rep < 3; ++rep) {
                const Displacement v = random_displacement(n1, n2, g, 1.0);
                const Eigen::VectorXd Sv = apply_S(v, p);
                CHECK((Sv - S * v.flatten()).norm() <= 1e-12 * std::max(1.0, Sv.norm()));

                const Eigen::VectorXd r = Eigen::VectorXd::Random(S.rows());
                const Eigen::VectorXd Str = apply_St(r, n1, n2, p).flatten();
                CHECK((Str - S.transpose() * r).norm() <= 1e-12 * std::max(1.0, Str.norm()));
                // Adjointness without the dense matrix.
                CHECK(std::abs(Sv.dot(r) - v.flatten().dot(Str)) <= 1e-12 * std::max(1.0, std::abs(Sv.dot(r))));

                const Eigen::VectorXd StSv = apply_StS(v, p).flatten();
                CHECK((StSv - S.transpose() * (S * v.flatten())).norm() <= 1e-12 * std::max(1.0, StSv.norm()));
                CHECK(std::abs(regularizer_value(v, p) - (S * v.flatten()).squaredNorm()) <= 1e-12 * std::max(1.0, Sv.squaredNorm()));
            }
            const Eigen::VectorXd diag = StS_diagonal(n1, n2, p);
            CHECK((diag - (S.transpose() * S).diagonal()).norm() <= 1e-12);
        }
    }
}

TEST_CASE("regularizer gradient is 2 S^T S v") {
    std::mt19937 g(22);
    const RegularizerParams p = mixed_params();
    const Displacement v = random_displacement(5, 6, g, 1.0);
    const Eigen::VectorXd fd = testing::fd_gradient([&](const Displacement &u) { return regularizer_value(u, p); }, v, 1e-4);
    const Eigen::VectorXd mask = Displacement::free_mask(5, 6);
    const Eigen::VectorXd gr = regularizer_gradient(v, p).flatten().cwiseProduct(mask);
    CHECK((gr - fd).norm() <= 1e-7 * std::max(1.0, fd.norm()));
}

TEST_CASE("P and P^T agree with the dense averaging matrix") {
    std::mt19937 g(23);
    for (auto [n1, n2] : {std::pair{5, 6}, std::pair{4, 4}}) {
        const Eigen::MatrixXd P = dense_P(n1, n2);
        const Displacement v = random_displacement(n1, n2, g, 1.0);
        CHECK((testing::stack(apply_P(v)) - P * v.flatten()).norm() <= 1e-12);
        const Eigen::VectorXd y = Eigen::VectorXd::Random(P.rows());
        CHECK((apply_Pt(testing::unstack(n1, n2, y)).flatten() - P.transpose() * y).norm() <= 1e-12);
    }
}

TEST_CASE("P averages a single interior staggered value onto both neighbours") {
    Displacement v(4, 3);
    v.v1(1, 1) = 0.8;
    const VectorField u = apply_P(v);
    CHECK(u.x1(0, 1) == 0.0);
    CHECK(u.x1(1, 1) == doctest::Approx(0.4));
    CHECK(u.x1(2, 1) == doctest::Approx(0.4));
    CHECK(u.x1(3, 1) == 0.0);
    CHECK(u.x2.isZero());
}

TEST_CASE("S^T S is symmetric and reproduces the quadratic form") {
    std::mt19937 g(25);
    const RegularizerParams p = mixed_params();
    const Displacement a = random_displacement(7, 6, g, 1.0), b = random_displacement(7, 6, g, 1.0);
    CHECK(std::abs(apply_StS(a, p).dot(b) - a.dot(apply_StS(b, p))) <= 1e-12);
    CHECK(std::abs(apply_StS(a, p).dot(a) - regularizer_value(a, p)) <= 1e-10);
}

TEST_CASE("J^T J and P^T G P agree with dense assemblies") {
    std::mt19937 g(24);
    const int n1 = 5, n2 = 6;
    const Eigen::Index N = n1 * n2;
    const Eigen::MatrixXd P = dense_P(n1, n2);
    const Eigen::MatrixXd c1 = Eigen::MatrixXd::Random(n1, n2), c2 = Eigen::MatrixXd::Random(n1, n2);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(N, P.cols());
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            const Eigen::Index r = static_cast<Eigen::Index>(i) * n2 + j;
            J.row(r) = c1(i, j) * P.row(r) + c2(i, j) * P.row(N + r);
        }
    const Eigen::MatrixXd a = Eigen::MatrixXd::Random(n1, n2), b = Eigen::MatrixXd::Random(n1, n2),
                          c = Eigen::MatrixXd::Random(n1, n2);
    // G = L L^T per pixel with L = [a 0; b c], so G is symmetric positive semidefinite.
    const Eigen::MatrixXd g11 = a.cwiseProduct(a), g12 = a.cwiseProduct(b), g22 = b.cwiseProduct(b) + c.cwiseProduct(c);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(2 * N, 2 * N);
    for (Eigen::Index r = 0; r < N; ++r) {
        const int i = static_cast<int>(r / n2), j = static_cast<int>(r % n2);
        G(r, r) = g11(i, j);
        G(r, N + r) = G(N + r, r) = g12(i, j);
        G(N + r, N + r) = g22(i, j);
    }
    for (int rep = 0; rep < 3; ++rep) {
        const Displacement u = random_displacement(n1, n2, g, 1.0);
        const Eigen::VectorXd x = u.flatten();
        CHECK((apply_JtJ(c1, c2, u).flatten() - J.transpose() * (J * x)).norm() <= 1e-12 * std::max(1.0, x.norm()));
        CHECK((apply_PtGP(g11, g12, g22, u).flatten() - P.transpose() * G * P * x).norm() <= 1e-12 * std::max(1.0, x.norm()));
    }
}

TEST_CASE("forward Jacobian of an affine map is exact") {
    const int n1 = 5, n2 = 7;
    VectorField phi(n1, n2);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            phi.x1(i, j) = 1.1 * i + 0.2 * j + 0.3;
            phi.x2(i, j) = -0.1 * i + 0.9 * j;
        }
    const JacobianField jac = forward_jacobian(phi);
    CHECK((jac.a11.array() - 1.1).abs().maxCoeff() <= 1e-12);
    CHECK((jac.a12.array() - 0.2).abs().maxCoeff() <= 1e-12);
    CHECK((jac.a21.array() + 0.1).abs().maxCoeff() <= 1e-12);
    CHECK((jac.a22.array() - 0.9).abs().maxCoeff() <= 1e-12);
    CHECK((jac.det().array() - (1.1 * 0.9 + 0.1 * 0.2)).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("zero displacement has unit determinant and zero regularizer") {
    const Displacement v(6, 6);
    CHECK(min_jacobian_det(v) == doctest::Approx(1.0));
    CHECK(regularizer_value(v, mixed_params()) == 0.0);
}
