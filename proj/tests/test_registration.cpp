#include "doctest.h"

#include "mvmorph/errors.hpp"
#include "mvmorph/imageops.hpp"
#include "mvmorph/synthetic.hpp"
#include "support.hpp"

using namespace mvmorph;
using testing::random_displacement;
using testing::random_image;

namespace {

double fd_relative_error(const Manifold &m, std::mt19937 &g, ImageDerivative derivative) {
    const int n = 6;
    const MvImage T = random_image(m, n, n, g, 0.3), R = random_image(m, n, n, g, 0.3);
    const Displacement v = random_displacement(n, n, g, 0.4);
    const RegularizerParams p = RegularizerParams::from_alpha(0.01);
    const Eigen::VectorXd gr = registration_gradient(T, R, v, p, derivative).flatten();
    const Eigen::VectorXd fd =
        testing::fd_gradient([&](const Displacement &u) { return registration_energy(T, R, u, p).total; }, v, 1e-5);
    return (gr - fd).norm() / fd.norm();
}

} // namespace

TEST_CASE("registration gradient matches central differences") {
    std::mt19937 g(51);
    CHECK(fd_relative_error(Manifold::euclidean(1), g, ImageDerivative::exact) <= 1e-5);
    CHECK(fd_relative_error(Manifold::sphere(2), g, ImageDerivative::exact) <= 1e-3);
    CHECK(fd_relative_error(Manifold::spd(2), g, ImageDerivative::exact) <= 1e-3);
    CHECK(fd_relative_error(Manifold::cb(), g, ImageDerivative::exact) <= 1e-3);
}

TEST_CASE("energy splits into regularizer and data") {
    std::mt19937 g(52);
    const MvImage T = random_image(Manifold::spd(2), 5, 5, g), R = random_image(Manifold::spd(2), 5, 5, g);
    const Displacement v = random_displacement(5, 5, g);
    const RegularizerParams p = RegularizerParams::from_alpha(0.1);
    const Energy e = registration_energy(T, R, v, p);
    CHECK(e.regularizer == doctest::Approx(regularizer_value(v, p)));
    CHECK(e.data == doctest::Approx(data_term(T, R, v)));
    CHECK(e.total == doctest::Approx(e.regularizer + e.data));
    CHECK(data_term(T, R, Displacement(5, 5)) == doctest::Approx(squared_l2_distance(T, R)));
}

TEST_CASE("Gauss-Newton direction is a descent direction") {
    std::mt19937 g(53);
    const MvImage T = random_image(Manifold::sphere(2), 8, 8, g), R = random_image(Manifold::sphere(2), 8, 8, g);
    const Displacement v = random_displacement(8, 8, g, 0.2);
    const RegularizerParams p = RegularizerParams::from_alpha(0.05);
    for (auto h : {HessianModel::structure_tensor, HessianModel::squared_distance}) {
        RegistrationOptions opts;
        opts.hessian = h;
        const DirectionResult d = gauss_newton_direction(T, R, v, p, opts);
        CHECK(d.direction.satisfies_boundary());
        CHECK(d.direction.dot(registration_gradient(T, R, v, p)) < 0.0);
    }
}

TEST_CASE("identical images register to zero") {
    std::mt19937 g(54);
    const MvImage T = random_image(Manifold::hsv(), 8, 8, g);
    const RegistrationResult r = register_images(T, T, RegularizerParams::from_alpha(0.005));
    CHECK(r.converged);
    CHECK(r.v.squared_norm() == 0.0);
    REQUIRE_FALSE(r.energy_trace.empty());
    CHECK(r.energy_trace.back().total == 0.0);
}

TEST_CASE("blob registration decreases the energy monotonically and keeps the grid unfolded") {
    const ImagePair pair = gaussian_blob_pair(16, 2.5, 1.0);
    const RegistrationResult r = register_images(pair.T, pair.R, RegularizerParams::from_alpha(0.005));
    REQUIRE(r.energy_trace.size() >= 2);
    for (std::size_t k = 1; k < r.energy_trace.size(); ++k) {
        CHECK(r.energy_trace[k].total < r.energy_trace[k - 1].total);
        CHECK(r.energy_trace[k].min_det > 0.0);
    }
    CHECK(r.energy_trace.back().data < 0.2 * r.energy_trace.front().data);
}

TEST_CASE("mismatched inputs are rejected") {
    const MvImage a(Manifold::euclidean(1), 5, 5), b(Manifold::euclidean(1), 5, 6), c(Manifold::circle(), 5, 5);
    CHECK_THROWS_AS(register_images(a, b, RegularizerParams::from_alpha(0.1)), InvalidArgument);
    CHECK_THROWS_AS(register_images(a, c, RegularizerParams::from_alpha(0.1)), InvalidArgument);
    CHECK_THROWS_AS(RegularizerParams::from_alpha(-1.0).validate(), InvalidArgument);
}
