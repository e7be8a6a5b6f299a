// sequence.hpp - optimal intermediate images for fixed deformations.
//
// For deformations phi_1..phi_K the path energy
//   sum_k d_2^2(I_{k-1} o phi_k, I_k),  I_0 = T, I_K = R
// is minimized in closed form: with psi_K = id and psi_{k-1} = phi_k o psi_k,
// every F_k = I_k o psi_k lies on the geodesic from T o psi_0 to R at the time
//   t_k = (sum_{i<=k} 1/w_i) / (sum_{i<=K} 1/w_i),   w_k = |det D psi_k|.
// The images are finally pushed back to the pixel grid by scattered
// interpolation from the sites psi_k(x).

#pragma once

#include <vector>

#include "mvmorph/grid.hpp"
#include "mvmorph/image.hpp"

namespace mvmorph {

// phi_k node maps, k = 1..K stored at index k-1.
struct DeformationSequence {
    std::vector<VectorField> phis;

    int K() const { return static_cast<int>(phis.size()); }
    static DeformationSequence from_displacements(const std::vector<Displacement> &vs);
};

// psi_0..psi_K (index k). Throws DegenerateDeformation when a composed grid
// leaves the image domain by more than one pixel.
std::vector<VectorField> compose_psi(const DeformationSequence &phis);

struct PathWeights {
    std::vector<Eigen::MatrixXd> w; // w_1..w_K at index k-1
    int floored = 0;                // pixel weights raised to the floor
    double min_det = 0.0;           // smallest det D phi_k sampled along the chain
};

inline constexpr double weight_floor = 1e-6;

// w_k(x) = prod_{i>k} |det D phi_i(psi_i(x))| with forward-difference Jacobians
// bilinearly interpolated at psi_i(x).
PathWeights path_weights(const DeformationSequence &phis, const std::vector<VectorField> &psis);

// t_1..t_{K-1} at index k-1. Throws InvalidArgument on nonpositive weights.
std::vector<Eigen::MatrixXd> path_times(const std::vector<Eigen::MatrixXd> &w);

// F_0..F_K on the pixel grid (before pushback).
std::vector<MvImage> geodesic_values(const MvImage &T, const MvImage &R, const VectorField &psi0,
                                     const std::vector<Eigen::MatrixXd> &t);

struct SequenceResult {
    std::vector<MvImage> images; // I_1..I_{K-1}
    std::vector<VectorField> psis;
    PathWeights weights;
    std::vector<Eigen::MatrixXd> times;
};

SequenceResult optimal_images(const MvImage &T, const MvImage &R, const DeformationSequence &phis);

} // namespace mvmorph
