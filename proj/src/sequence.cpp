// sequence.cpp - closed-form image sequence for fixed deformations.

#include "mvmorph/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mvmorph/errors.hpp"
#include "mvmorph/imageops.hpp"

namespace mvmorph {

using Eigen::MatrixXd;

DeformationSequence DeformationSequence::from_displacements(const std::vector<Displacement> &vs) {
    DeformationSequence seq;
    seq.phis.reserve(vs.size());
    for (const auto &v : vs) seq.phis.push_back(deformation_from(apply_P(v)));
    return seq;
}

std::vector<VectorField> compose_psi(const DeformationSequence &phis) {
    const int K = phis.K();
    if (K < 1) throw InvalidArgument("compose_psi: empty deformation sequence");
    const int n1 = phis.phis[0].n1(), n2 = phis.phis[0].n2();
    for (const auto &p : phis.phis)
        if (p.n1() != n1 || p.n2() != n2) throw InvalidArgument("compose_psi: deformations differ in size");

    std::vector<VectorField> psi(K + 1);
    psi[K] = VectorField::identity(n1, n2);
    for (int k = K; k >= 1; --k) {
        const VectorField &phi = phis.phis[k - 1];
        VectorField u = VectorField::identity(n1, n2);
        u.x1 -= phi.x1;
        u.x2 -= phi.x2;
        VectorField next(n1, n2);
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n2; ++j) {
                const double y1 = psi[k].x1(i, j), y2 = psi[k].x2(i, j);
                const auto d = sample_bilinear(u, y1, y2);
                next.x1(i, j) = y1 - d[0];
                next.x2(i, j) = y2 - d[1];
                if (!(next.x1(i, j) >= -1.5 && next.x1(i, j) <= n1 + 0.5 && next.x2(i, j) >= -1.5 &&
                      next.x2(i, j) <= n2 + 0.5)) {
                    std::ostringstream os;
                    os << "compose_psi: psi_" << (k - 1) << " at pixel (" << i << ", " << j << ") maps to ("
                       << next.x1(i, j) << ", " << next.x2(i, j) << "), outside the image domain";
                    throw DegenerateDeformation(os.str());
                }
            }
        psi[k - 1] = std::move(next);
    }
    return psi;
}

PathWeights path_weights(const DeformationSequence &phis, const std::vector<VectorField> &psis) {
    const int K = phis.K();
    if (static_cast<int>(psis.size()) != K + 1) throw InvalidArgument("path_weights: need K+1 composed grids");
    const int n1 = psis[K].n1(), n2 = psis[K].n2();

    PathWeights out;
    out.w.assign(K, MatrixXd::Ones(n1, n2));
    out.min_det = std::numeric_limits<double>::infinity();

    // acc holds prod_{i > k} |det D phi_i(psi_i(x))| while k walks down.
    MatrixXd acc = MatrixXd::Ones(n1, n2);
    for (int k = K; k >= 1; --k) {
        out.w[k - 1] = acc;
        const JacobianField jac = forward_jacobian(phis.phis[k - 1]);
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n2; ++j) {
                const double y1 = psis[k].x1(i, j), y2 = psis[k].x2(i, j);
                const double a11 = sample_bilinear(jac.a11, y1, y2), a12 = sample_bilinear(jac.a12, y1, y2);
                const double a21 = sample_bilinear(jac.a21, y1, y2), a22 = sample_bilinear(jac.a22, y1, y2);
                const double det = a11 * a22 - a12 * a21;
                out.min_det = std::min(out.min_det, det);
                acc(i, j) *= std::abs(det);
            }
    }
    for (auto &w : out.w)
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            if (!(w.data()[i] >= weight_floor)) {
                w.data()[i] = weight_floor;
                ++out.floored;
            }
        }
    return out;
}

std::vector<MatrixXd> path_times(const std::vector<MatrixXd> &w) {
    const int K = static_cast<int>(w.size());
    if (K < 1) throw InvalidArgument("path_times: no weights");
    for (const auto &wk : w)
        if (!(wk.array() > 0.0).all()) throw InvalidArgument("path_times: weights must be positive");
    MatrixXd total = MatrixXd::Zero(w[0].rows(), w[0].cols());
    for (const auto &wk : w) total += wk.cwiseInverse();
    std::vector<MatrixXd> t;
    MatrixXd partial = MatrixXd::Zero(total.rows(), total.cols());
    for (int k = 0; k + 1 < K; ++k) {
        partial += w[k].cwiseInverse();
        t.push_back(partial.cwiseQuotient(total));
    }
    return t;
}

std::vector<MvImage> geodesic_values(const MvImage &T, const MvImage &R, const VectorField &psi0,
                                     const std::vector<MatrixXd> &t) {
    const Manifold &m = T.manifold();
    const int n1 = T.n1(), n2 = T.n2();
    std::vector<MvImage> F;
    F.reserve(t.size() + 2);
    F.push_back(warp(T, psi0));
    for (const auto &tk : t) {
        MvImage img(m, n1, n2);
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n2; ++j) img.set(i, j, m.geopoint(F[0].pixel(i, j), R.pixel(i, j), tk(i, j)));
        F.push_back(std::move(img));
    }
    F.push_back(R);
    return F;
}

SequenceResult optimal_images(const MvImage &T, const MvImage &R, const DeformationSequence &phis) {
    if (T.manifold() != R.manifold() || !T.same_shape(R)) throw InvalidArgument("optimal_images: T and R mismatch");
    const int K = phis.K();
    if (K < 1) throw InvalidArgument("optimal_images: need at least one deformation");
    if (phis.phis[0].n1() != T.n1() || phis.phis[0].n2() != T.n2()) {
        throw InvalidArgument("optimal_images: deformation shape mismatch");
    }
    const int n1 = T.n1(), n2 = T.n2();

    SequenceResult res;
    res.psis = compose_psi(phis);
    res.weights = path_weights(phis, res.psis);
    res.times = path_times(res.weights.w);
    const std::vector<MvImage> F = geodesic_values(T, R, res.psis[0], res.times);

    for (int k = 1; k < K; ++k) {
        std::vector<std::array<double, 2>> sites;
        std::vector<Vec> values;
        sites.reserve(static_cast<std::size_t>(n1) * n2);
        values.reserve(sites.capacity());
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n2; ++j) {
                sites.push_back({std::clamp(res.psis[k].x1(i, j), -0.5, n1 - 0.5),
                                 std::clamp(res.psis[k].x2(i, j), -0.5, n2 - 0.5)});
                values.emplace_back(F[k].pixel(i, j));
            }
        res.images.push_back(scattered_interp(T.manifold(), sites, values, n1, n2));
    }
    return res;
}

} // namespace mvmorph
