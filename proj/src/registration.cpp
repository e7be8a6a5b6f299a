// registration.cpp - quasi-Newton registration with Armijo line search.

#include "mvmorph/registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>

#include "mvmorph/errors.hpp"
#include "mvmorph/imageops.hpp"

namespace mvmorph {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void check_pair(const MvImage &T, const MvImage &R, const Displacement &v) {
    if (T.manifold() != R.manifold()) throw InvalidArgument("registration: T and R live on different manifolds");
    if (!T.same_shape(R)) throw InvalidArgument("registration: T and R differ in size");
    if (v.n1() != T.n1() || v.n2() != T.n2()) throw InvalidArgument("registration: displacement shape mismatch");
}

struct CgResult {
    VectorXd x;
    int iterations = 0;
    double relative_residual = 0.0;
    bool breakdown = false;
};

// Jacobi-preconditioned conjugate gradients for an SPD operator.
CgResult conjugate_gradient(const std::function<VectorXd(const VectorXd &)> &apply, const VectorXd &b,
                            const VectorXd &inv_diag, int max_iter, double rtol) {
    CgResult res;
    res.x = VectorXd::Zero(b.size());
    const double bnorm = b.norm();
    if (bnorm == 0.0) return res;
    VectorXd r = b;
    VectorXd z = inv_diag.cwiseProduct(r);
    VectorXd p = z;
    double rz = r.dot(z);
    for (int k = 0; k < max_iter; ++k) {
        const VectorXd hp = apply(p);
        const double curv = p.dot(hp);
        if (!(curv > 0.0) || !std::isfinite(curv)) {
            res.breakdown = true;
            break;
        }
        const double a = rz / curv;
        res.x += a * p;
        r -= a * hp;
        res.iterations = k + 1;
        res.relative_residual = r.norm() / bnorm;
        if (res.relative_residual <= rtol) return res;
        z = inv_diag.cwiseProduct(r);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    return res;
}

Displacement masked(Displacement d) {
    d.enforce_boundary();
    return d;
}

} // namespace

double data_term(const MvImage &T, const MvImage &R, const Displacement &v) {
    check_pair(T, R, v);
    const VectorField pv = apply_P(v);
    double acc = 0.0;
    for (int i = 0; i < T.n1(); ++i)
        for (int j = 0; j < T.n2(); ++j) {
            const Vec y = bilinear_sample(T, i - pv.x1(i, j), j - pv.x2(i, j));
            acc += T.manifold().dist2(y, R.pixel(i, j));
        }
    return acc;
}

DataLinearization linearize_data(const MvImage &T, const MvImage &R, const Displacement &v,
                                 ImageDerivative derivative) {
    check_pair(T, R, v);
    const Manifold &m = T.manifold();
    const int n1 = T.n1(), n2 = T.n2();
    const VectorField pv = apply_P(v);
    DataLinearization lin;
    lin.c1 = MatrixXd::Zero(n1, n2);
    lin.c2 = MatrixXd::Zero(n1, n2);
    lin.g11 = MatrixXd::Zero(n1, n2);
    lin.g12 = MatrixXd::Zero(n1, n2);
    lin.g22 = MatrixXd::Zero(n1, n2);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            const double y1 = i - pv.x1(i, j), y2 = j - pv.x2(i, j);
            const ImageGradient g =
                derivative == ImageDerivative::exact ? image_derivative(T, y1, y2) : image_gradient(T, y1, y2);
            const Vec l = m.log(g.base, R.pixel(i, j));
            lin.value += m.dist2(g.base, R.pixel(i, j));
            lin.c1(i, j) = 2.0 * m.inner(g.base, l, g.d1);
            lin.c2(i, j) = 2.0 * m.inner(g.base, l, g.d2);
            lin.g11(i, j) = 2.0 * m.inner(g.base, g.d1, g.d1);
            lin.g12(i, j) = 2.0 * m.inner(g.base, g.d1, g.d2);
            lin.g22(i, j) = 2.0 * m.inner(g.base, g.d2, g.d2);
        }
    VectorField coeff(n1, n2);
    coeff.x1 = lin.c1;
    coeff.x2 = lin.c2;
    lin.gradient = apply_Pt(coeff);
    return lin;
}

Displacement data_gradient(const MvImage &T, const MvImage &R, const Displacement &v,
                           ImageDerivative derivative) {
    return linearize_data(T, R, v, derivative).gradient;
}

Energy registration_energy(const MvImage &T, const MvImage &R, const Displacement &v, const RegularizerParams &p) {
    const double reg = regularizer_value(v, p);
    const double dat = data_term(T, R, v);
    return {reg + dat, reg, dat};
}

Displacement registration_gradient(const MvImage &T, const MvImage &R, const Displacement &v,
                                   const RegularizerParams &p, ImageDerivative derivative) {
    return masked(regularizer_gradient(v, p) + data_gradient(T, R, v, derivative));
}

Displacement apply_JtJ(const MatrixXd &c1, const MatrixXd &c2, const Displacement &u) {
    const VectorField pu = apply_P(u);
    const MatrixXd w = (c1.array() * pu.x1.array() + c2.array() * pu.x2.array()).matrix();
    VectorField back(static_cast<int>(c1.rows()), static_cast<int>(c1.cols()));
    back.x1 = (c1.array() * w.array()).matrix();
    back.x2 = (c2.array() * w.array()).matrix();
    return apply_Pt(back);
}

Displacement apply_PtGP(const MatrixXd &g11, const MatrixXd &g12, const MatrixXd &g22, const Displacement &u) {
    const VectorField pu = apply_P(u);
    VectorField back(static_cast<int>(g11.rows()), static_cast<int>(g11.cols()));
    back.x1 = (g11.array() * pu.x1.array() + g12.array() * pu.x2.array()).matrix();
    back.x2 = (g12.array() * pu.x1.array() + g22.array() * pu.x2.array()).matrix();
    return apply_Pt(back);
}

namespace {

DirectionResult solve_direction(const DataLinearization &lin, const Displacement &grad, const RegularizerParams &p,
                                const VectorXd &sts_diag, const RegistrationOptions &opts) {
    const int n1 = grad.n1(), n2 = grad.n2();
    DirectionResult out;
    out.direction = Displacement(n1, n2);
    const VectorXd g = grad.flatten();
    if (g.squaredNorm() == 0.0) return out;

    const VectorXd mask = Displacement::free_mask(n1, n2);

    const bool st = opts.hessian == HessianModel::structure_tensor;
    const MatrixXd q1 = st ? lin.g11 : MatrixXd(lin.c1.cwiseAbs2());
    const MatrixXd q2 = st ? lin.g22 : MatrixXd(lin.c2.cwiseAbs2());

    // Diagonal of the data block: each staggered value feeds two nodes with weight 1/2.
    Displacement jd(n1, n2);
    for (int a = 0; a + 1 < n1; ++a)
        for (int j = 0; j < n2; ++j) {
            double s = 0.0;
            if (a >= 1) s += 0.25 * q1(a, j);
            if (a + 1 <= n1 - 2) s += 0.25 * q1(a + 1, j);
            jd.v1(a, j) = s;
        }
    for (int i = 0; i < n1; ++i)
        for (int b = 0; b + 1 < n2; ++b) {
            double s = 0.0;
            if (b >= 1) s += 0.25 * q2(i, b);
            if (b + 1 <= n2 - 2) s += 0.25 * q2(i, b + 1);
            jd.v2(i, b) = s;
        }
    VectorXd diag = 2.0 * sts_diag + jd.flatten();
    const double free_count = std::max(1.0, mask.sum());
    const double scale = diag.cwiseProduct(mask).sum() / free_count;
    const double shift = opts.hessian_shift * (scale > 0.0 ? scale : 1.0);
    diag.array() += shift;
    VectorXd inv_diag = mask.cwiseQuotient(diag);

    auto apply = [&](const VectorXd &x) -> VectorXd {
        const Displacement u = Displacement::unflatten(n1, n2, x);
        Displacement h = 2.0 * apply_StS(u, p) +
                         (st ? apply_PtGP(lin.g11, lin.g12, lin.g22, u) : apply_JtJ(lin.c1, lin.c2, u));
        VectorXd hx = h.flatten() + shift * x;
        return hx.cwiseProduct(mask);
    };

    const CgResult cg = conjugate_gradient(apply, -g.cwiseProduct(mask), inv_diag, opts.cg_max_iter, opts.cg_rtol);
    out.cg_iterations = cg.iterations;
    out.relative_residual = cg.relative_residual;
    out.truncated = !cg.breakdown && cg.relative_residual > opts.cg_rtol;
    VectorXd d = cg.x.cwiseProduct(mask);
    if (cg.breakdown && cg.iterations == 0) d.setZero();
    if (!(d.dot(g) < 0.0) || !d.allFinite()) {
        d = -g.cwiseProduct(mask);
        out.steepest_fallback = true;
        out.truncated = false;
    }
    out.direction = Displacement::unflatten(n1, n2, d);
    return out;
}

} // namespace

DirectionResult gauss_newton_direction(const MvImage &T, const MvImage &R, const Displacement &v,
                                       const RegularizerParams &p, const RegistrationOptions &opts) {
    p.validate();
    const DataLinearization lin = linearize_data(T, R, v, opts.derivative);
    const Displacement grad = masked(regularizer_gradient(v, p) + lin.gradient);
    return solve_direction(lin, grad, p, StS_diagonal(v.n1(), v.n2(), p), opts);
}

double min_jacobian_det(const Displacement &v) {
    return forward_jacobian(deformation_from(apply_P(v))).det().minCoeff();
}

RegistrationResult register_images(const MvImage &T, const MvImage &R, const RegularizerParams &p,
                                   const RegistrationOptions &opts) {
    return register_images(T, R, p, Displacement::zeros(T.n1(), T.n2()), opts);
}

RegistrationResult register_images(const MvImage &T, const MvImage &R, const RegularizerParams &p,
                                   const Displacement &v0, const RegistrationOptions &opts) {
    p.validate();
    check_pair(T, R, v0);
    const int n1 = T.n1(), n2 = T.n2();
    const double gtol = opts.gtol >= 0.0 ? opts.gtol : 1e-6 * n1 * n2;
    const VectorXd sts_diag = StS_diagonal(n1, n2, p);

    RegistrationResult res;
    res.v = v0;
    res.v.enforce_boundary();

    double reg = regularizer_value(res.v, p);
    DataLinearization lin = linearize_data(T, R, res.v, opts.derivative);
    double total = reg + lin.value;
    double det = min_jacobian_det(res.v);
    res.energy_trace.push_back({0, total, reg, lin.value, det});

    for (int it = 1; it <= opts.max_iter; ++it) {
        const Displacement grad = masked(regularizer_gradient(res.v, p) + lin.gradient);
        if (std::sqrt(grad.squared_norm()) <= gtol) {
            res.converged = true;
            break;
        }
        DirectionResult dir = solve_direction(lin, grad, p, sts_diag, opts);
        if (opts.max_step > 0.0) {
            const double len = std::max(dir.direction.v1.cwiseAbs().maxCoeff(), dir.direction.v2.cwiseAbs().maxCoeff());
            if (len > opts.max_step) dir.direction = (opts.max_step / len) * dir.direction;
        }
        if (dir.steepest_fallback) ++res.steepest_fallbacks;
        res.cg_iterations += dir.cg_iterations;
        const double slope = dir.direction.dot(grad);

        double tau = 1.0;
        bool accepted = false;
        Displacement trial;
        double trial_reg = 0.0, trial_data = 0.0, trial_det = 0.0;
        for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
            trial = res.v + tau * dir.direction;
            trial.enforce_boundary();
            trial_det = min_jacobian_det(trial);
            const bool feasible = !opts.reject_folds || trial_det > 0.0 || trial_det >= det;
            trial_reg = regularizer_value(trial, p);
            trial_data = feasible ? data_term(T, R, trial) : std::numeric_limits<double>::infinity();
            const double e = trial_reg + trial_data;
            if (std::isfinite(e) && e <= total + opts.armijo_c * tau * slope && e < total) {
                accepted = true;
                break;
            }
            tau *= opts.contraction;
            ++res.backtracks;
        }
        res.iterations = it;
        if (!accepted) {
            res.converged = false;
            return res;
        }
        const double moved =
            tau * std::max(dir.direction.v1.cwiseAbs().maxCoeff(), dir.direction.v2.cwiseAbs().maxCoeff());
        const double new_total = trial_reg + trial_data;
        const double rel = (total - new_total) / std::max(std::abs(total), 1e-300);
        res.v = std::move(trial);
        reg = trial_reg;
        total = new_total;
        det = trial_det;
        res.energy_trace.push_back({it, total, reg, trial_data, det});
        if (rel <= opts.ftol || moved <= opts.xtol) {
            res.converged = true;
            return res;
        }
        lin = linearize_data(T, R, res.v, opts.derivative);
    }
    return res;
}

} // namespace mvmorph
