#include "doctest.h"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "mvmorph/errors.hpp"
#include "support.hpp"

using namespace mvmorph;
using testing::random_point;
using testing::random_tangent;

namespace {

std::vector<Manifold> all_manifolds() {
    return {Manifold::euclidean(1), Manifold::euclidean(3), Manifold::circle(), Manifold::sphere(2),
            Manifold::spd(2),       Manifold::spd(3),       Manifold::hsv(),    Manifold::cb()};
}

Eigen::MatrixXd as_matrix(const Vec &v, int n) { return Eigen::Map<const Eigen::MatrixXd>(v.data(), n, n); }
Vec as_vec(const Eigen::MatrixXd &m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

// Affine-invariant distance from the generalized eigenvalues of (B, A).
double spd_dist_oracle(const Eigen::MatrixXd &A, const Eigen::MatrixXd &B) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(B, A);
    return std::sqrt(es.eigenvalues().array().log().square().sum());
}

} // namespace

TEST_CASE("exp and log are inverse to each other") {
    std::mt19937 g(11);
    for (const auto &m : all_manifolds()) {
        CAPTURE(m.name());
        for (int rep = 0; rep < 20; ++rep) {
            const Vec p = random_point(m, g), q = random_point(m, g);
            CHECK((m.exp(p, m.log(p, q)) - q).norm() <= 1e-8);
            const Vec v = random_tangent(m, p, g, 0.4);
            CHECK((m.log(p, m.exp(p, v)) - v).norm() <= 1e-8);
        }
    }
}

TEST_CASE("geodesics have constant speed") {
    std::mt19937 g(12);
    for (const auto &m : all_manifolds()) {
        CAPTURE(m.name());
        for (int rep = 0; rep < 10; ++rep) {
            const Vec p = random_point(m, g), q = random_point(m, g);
            const double d = m.dist(p, q);
            for (double s : {0.0, 0.2, 0.5}) {
                for (double t : {0.3, 0.7, 1.0}) {
                    CHECK(std::abs(m.dist(m.geopoint(p, q, s), m.geopoint(p, q, t)) - std::abs(t - s) * d) <= 1e-8);
                }
            }
        }
    }
}

TEST_CASE("closed-form distances") {
    const Manifold c = Manifold::circle();
    CHECK(c.dist(Vec::Constant(1, 3.0), Vec::Constant(1, -3.0)) == doctest::Approx(2 * std::numbers::pi - 6.0).epsilon(1e-12));
    const Manifold s = Manifold::sphere(2);
    CHECK(s.dist(Vec::Unit(3, 0), Vec::Unit(3, 1)) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
    const Manifold e = Manifold::euclidean(3);
    CHECK(e.dist(Vec::Zero(3), Vec::Constant(3, 1.0)) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));

    std::mt19937 g(13);
    for (int n : {2, 3}) {
        const Manifold m = Manifold::spd(n);
        for (int rep = 0; rep < 10; ++rep) {
            const Vec a = random_point(m, g), b = random_point(m, g);
            CHECK(std::abs(m.dist(a, b) - spd_dist_oracle(as_matrix(a, n), as_matrix(b, n))) <= 1e-10);
        }
    }
}

TEST_CASE("spd(2) with repeated and widely spread eigenvalues") {
    const Manifold m = Manifold::spd(2);
    Vec I(4), twoI(4), skew(4);
    I << 1, 0, 0, 1;
    twoI << 2, 0, 0, 2;
    CHECK(m.dist(I, twoI) == doctest::Approx(std::sqrt(2.0) * std::log(2.0)).epsilon(1e-14));
    // Rotated diag(4, 1e-6): eigenvalues of both sizes must keep relative accuracy.
    const double c = std::cos(0.3), s = std::sin(0.3);
    Eigen::Matrix2d U;
    U << c, -s, s, c;
    const Eigen::Matrix2d A = U * Eigen::Vector2d(4.0, 1e-6).asDiagonal() * U.transpose();
    skew << A(0, 0), A(0, 1), A(1, 0), A(1, 1);
    CHECK(m.dist(I, skew) == doctest::Approx(std::hypot(std::log(4.0), std::log(1e-6))).epsilon(1e-9));
    CHECK((m.exp(I, m.log(I, skew)) - skew).norm() <= 1e-9);
}

TEST_CASE("product distance combines the factors") {
    std::mt19937 g(14);
    const Manifold m = Manifold::cb();
    const Manifold s = Manifold::sphere(2), e = Manifold::euclidean(1);
    for (int rep = 0; rep < 10; ++rep) {
        const Vec p = random_point(m, g), q = random_point(m, g);
        const double d2 = std::pow(s.dist(p.head(3), q.head(3)), 2) + std::pow(e.dist(p.tail(1), q.tail(1)), 2);
        CHECK(std::abs(m.dist2(p, q) - d2) <= 1e-12);
    }
}

TEST_CASE("spd distance is invariant under congruence") {
    std::mt19937 g(15);
    std::normal_distribution<double> N(0, 1);
    for (int n : {2, 3}) {
        const Manifold m = Manifold::spd(n);
        for (int rep = 0; rep < 20; ++rep) {
            const Vec a = random_point(m, g), b = random_point(m, g);
            Eigen::MatrixXd G(n, n);
            for (int k = 0; k < G.size(); ++k) G.data()[k] = N(g);
            G += 2.0 * Eigen::MatrixXd::Identity(n, n);
            const Eigen::MatrixXd A = as_matrix(a, n), B = as_matrix(b, n);
            const Eigen::MatrixXd GA = G * A * G.transpose(), GB = G * B * G.transpose();
            CHECK(std::abs(m.dist(as_vec(GA), as_vec(GB)) - m.dist(a, b)) <= 1e-8);
        }
    }
}

TEST_CASE("Karcher mean is stationary") {
    std::mt19937 g(16);
    std::uniform_real_distribution<double> U(0.1, 1.0);
    for (const auto &m : all_manifolds()) {
        CAPTURE(m.name());
        for (int rep = 0; rep < 10; ++rep) {
            Eigen::MatrixXd pts(m.point_dim(), 5);
            Vec w(5);
            for (int k = 0; k < 5; ++k) {
                pts.col(k) = random_point(m, g, 0.4);
                w[k] = U(g);
            }
            const Vec f = m.karcher_mean(pts, w);
            Vec grad = Vec::Zero(m.point_dim());
            for (int k = 0; k < 5; ++k) grad += w[k] * m.log(f, pts.col(k));
            CHECK(m.norm(f, grad) / w.sum() <= 1e-8);
        }
    }
}

TEST_CASE("Karcher mean of commuting SPD matrices is the log-Euclidean mean") {
    std::mt19937 g(17);
    std::uniform_real_distribution<double> U(0.2, 4.0), W(0.1, 1.0);
    for (int n : {2, 3}) {
        const Manifold m = Manifold::spd(n);
        // Shared eigenvectors from a QR factorization.
        std::normal_distribution<double> N(0, 1);
        Eigen::MatrixXd X(n, n);
        for (int k = 0; k < X.size(); ++k) X.data()[k] = N(g);
        const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(X).householderQ();
        Eigen::MatrixXd pts(n * n, 4);
        Vec w(4);
        Eigen::VectorXd logmean = Eigen::VectorXd::Zero(n);
        for (int k = 0; k < 4; ++k) {
            Eigen::VectorXd lam(n);
            for (int r = 0; r < n; ++r) lam[r] = U(g);
            w[k] = W(g);
            logmean += w[k] * lam.array().log().matrix();
            pts.col(k) = as_vec(Q * lam.asDiagonal() * Q.transpose());
        }
        logmean /= w.sum();
        const Eigen::MatrixXd expected = Q * logmean.array().exp().matrix().asDiagonal() * Q.transpose();
        const Vec f = m.karcher_mean(pts, w);
        CHECK((as_matrix(f, n) - expected).norm() <= 1e-8);
    }
}

TEST_CASE("two-point Karcher mean is the geodesic point") {
    std::mt19937 g(18);
    for (const auto &m : all_manifolds()) {
        CAPTURE(m.name());
        const Vec p = random_point(m, g), q = random_point(m, g);
        Eigen::MatrixXd pts(m.point_dim(), 2);
        pts << p, q;
        const Vec f = m.karcher_mean(pts, Eigen::Vector2d(0.7, 0.3));
        CHECK(m.dist(f, m.geopoint(p, q, 0.3)) <= 1e-10);
    }
}

TEST_CASE("mean_derivative matches finite differences of the Karcher mean") {
    std::mt19937 g(19);
    std::uniform_real_distribution<double> U(0.2, 1.0);
    for (const auto &m : {Manifold::euclidean(2), Manifold::circle(), Manifold::sphere(2), Manifold::spd(2),
                          Manifold::spd(3), Manifold::hsv()}) {
        CAPTURE(m.name());
        for (int rep = 0; rep < 5; ++rep) {
            Eigen::MatrixXd pts(m.point_dim(), 4);
            Vec w(4), dw(4);
            for (int k = 0; k < 4; ++k) {
                pts.col(k) = random_point(m, g, 0.4);
                w[k] = U(g);
                dw[k] = U(g) - 0.6;
            }
            const double h = 1e-6;
            const Vec f = m.karcher_mean(pts, w);
            const Vec fp = m.karcher_mean(pts, w + h * dw), fm = m.karcher_mean(pts, w - h * dw);
            const Vec fd = (m.log(f, fp) - m.log(f, fm)) / (2 * h);
            const Vec xi = m.mean_derivative(f, pts, w, dw);
            CHECK((xi - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
        }
    }
}

TEST_CASE("membership checks") {
    CHECK(Manifold::sphere(2).contains(Vec::Unit(3, 2)));
    CHECK_FALSE(Manifold::sphere(2).contains(Vec::Constant(3, 1.0)));
    Vec notpd(4);
    notpd << 1, 2, 2, 1;
    CHECK_FALSE(Manifold::spd(2).contains(notpd));
    Vec asym(4);
    asym << 2, 0.5, 0.1, 2;
    CHECK_FALSE(Manifold::spd(2).contains(asym));
    CHECK_THROWS_AS(Manifold::parse("torus"), InvalidArgument);
    CHECK(Manifold::parse("spd(3)") == Manifold::spd(3));
}

TEST_CASE("cut locus is reported") {
    CHECK_THROWS_AS(Manifold::sphere(2).log(Vec::Unit(3, 0), -Vec::Unit(3, 0)), CutLocusError);
}
