// registration.hpp - elastic registration of manifold-valued images.
//
// Minimizes R(v) = |S v|^2 + sum_x d^2(T(x - (Pv)(x)), R(x)) over staggered
// displacements v with a quasi-Newton iteration: Gauss-Newton Hessian
// H = 2 S^T S + J^T J, conjugate gradients for H d = -grad, Armijo backtracking.

#pragma once

#include <vector>

#include "mvmorph/grid.hpp"
#include "mvmorph/image.hpp"

namespace mvmorph {

// How the image derivative inside the data gradient is formed.
enum class ImageDerivative {
    exact,  // derivative of the Karcher bilinear interpolant (image_derivative)
    secant, // one-sided geodesic secant (image_gradient)
};

// Data part of the Hessian approximation.
enum class HessianModel {
    // J^T J with J the Jacobian of the per-pixel squared distances:
    // P^T diag(c c^T) P, c = 2 <log_{T(y)} R, grad T>.
    squared_distance,
    // Gauss-Newton for the tangent residual log_{T(y)} R:
    // P^T diag(2 <d_a T, d_b T>) P.
    structure_tensor,
};

struct RegistrationOptions {
    ImageDerivative derivative = ImageDerivative::exact;
    HessianModel hessian = HessianModel::structure_tensor;
    double gtol = -1.0;        // gradient norm threshold; negative means 1e-6 * n1 * n2
    double ftol = 1e-6;        // relative energy decrease threshold
    int max_iter = 100;
    double armijo_c = 1e-4;
    double contraction = 0.5;
    int max_backtracks = 30;
    int cg_max_iter = 200;
    double cg_rtol = 1e-8;
    double hessian_shift = 1e-8; // relative to the mean Hessian diagonal
    // Directions whose largest staggered entry exceeds this many pixels are
    // scaled down before the line search; nonpositive disables the cap.
    double max_step = 1.0;
    // Stop once an accepted step moves no staggered entry by more than this
    // many pixels; nonpositive disables the test.
    double xtol = 1e-4;
    // Treat trial steps whose grid Jacobian determinant drops to zero or below
    // as infinite energy. A folded starting point only needs to not get worse.
    bool reject_folds = true;
};

struct EnergyEntry {
    int iteration;
    double total;
    double regularizer;
    double data;
    double min_det; // min det D(id - Pv) over the grid
};

struct RegistrationResult {
    Displacement v;
    std::vector<EnergyEntry> energy_trace;
    bool converged = false;
    int iterations = 0;
    int steepest_fallbacks = 0;
    int backtracks = 0;    // rejected line search trials
    int cg_iterations = 0; // summed over all directions
};

// Data term, its gradient and the Gauss-Newton coefficients at one v.
struct DataLinearization {
    double value = 0.0;
    Displacement gradient;
    // Per pixel 2 <log_{T(y)} R(x), d_{x1} T(y)>, y = x - Pv(x), and the x2 analogue.
    Eigen::MatrixXd c1, c2;
    // Per pixel 2 <d_a T(y), d_b T(y)>.
    Eigen::MatrixXd g11, g12, g22;
};

struct Energy {
    double total, regularizer, data;
};

double data_term(const MvImage &T, const MvImage &R, const Displacement &v);
Displacement data_gradient(const MvImage &T, const MvImage &R, const Displacement &v,
                           ImageDerivative derivative = ImageDerivative::exact);
DataLinearization linearize_data(const MvImage &T, const MvImage &R, const Displacement &v,
                                 ImageDerivative derivative = ImageDerivative::exact);
Energy registration_energy(const MvImage &T, const MvImage &R, const Displacement &v, const RegularizerParams &p);

// Full gradient 2 S^T S v + G(v), with pinned boundary entries zeroed.
Displacement registration_gradient(const MvImage &T, const MvImage &R, const Displacement &v,
                                   const RegularizerParams &p, ImageDerivative derivative = ImageDerivative::exact);

// J^T J u for the coefficients of a linearization (unprojected).
Displacement apply_JtJ(const Eigen::MatrixXd &c1, const Eigen::MatrixXd &c2, const Displacement &u);
// P^T G P u with the per-pixel symmetric 2x2 tensor G = [g11 g12; g12 g22].
Displacement apply_PtGP(const Eigen::MatrixXd &g11, const Eigen::MatrixXd &g12, const Eigen::MatrixXd &g22,
                        const Displacement &u);

struct DirectionResult {
    Displacement direction;
    bool steepest_fallback = false;
    bool truncated = false; // CG hit its iteration cap; direction is still a descent direction
    int cg_iterations = 0;
    double relative_residual = 0.0;
};

DirectionResult gauss_newton_direction(const MvImage &T, const MvImage &R, const Displacement &v,
                                       const RegularizerParams &p, const RegistrationOptions &opts = {});

// `register` is reserved, hence the name.
RegistrationResult register_images(const MvImage &T, const MvImage &R, const RegularizerParams &p,
                                   const Displacement &v0, const RegistrationOptions &opts = {});
RegistrationResult register_images(const MvImage &T, const MvImage &R, const RegularizerParams &p,
                                   const RegistrationOptions &opts = {});

// Smallest Jacobian determinant of id - Pv.
double min_jacobian_det(const Displacement &v);

} // namespace mvmorph
