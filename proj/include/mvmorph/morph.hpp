// morph.hpp - alternating minimization of the discrete path energy and the
// coarse-to-fine driver.
//
// The path energy of images I_0 = T, ..., I_K = R and displacements v_1..v_K is
//   J = sum_k |S v_k|^2 + sum_x d^2(I_{k-1}(x - Pv_k(x)), I_k(x)).
// One sweep registers every neighbouring pair with the images fixed, then
// replaces the inner images by the closed-form optimum for the new
// deformations.

#pragma once

#include <string>
#include <vector>

#include "mvmorph/grid.hpp"
#include "mvmorph/image.hpp"
#include "mvmorph/registration.hpp"

namespace mvmorph {

struct MorphConfig {
    int K = 0;                 // number of segments; 0 means derived from `inserts`
    double alpha = 0.005;      // mu = lambda = gamma = alpha
    double eta = 0.0;
    int m = 3;
    int levels = 1;            // coarsest pyramid level; the pyramid has levels + 1 grids
    double scale_factor = 0.5; // per-level size ratio
    // Images inserted per segment when entering level levels-1, levels-2, ...;
    // missing trailing entries mean no insertion.
    std::vector<int> inserts;
    int sweeps_per_level = 3;
    double kernel_sigma = 1.0;
    bool parallel = true; // register the K pairs concurrently
    RegistrationOptions registration;

    RegularizerParams regularizer() const { return RegularizerParams::from_alpha(alpha, eta, m); }
    // Inserts for pyramid level l (0 = finest), after padding.
    int inserts_at(int level) const;
    // prod_l (1 + inserts_at(l)).
    int scheduled_K() const;
    // Throws InvalidArgument on an inconsistent configuration.
    void validate() const;
};

struct EnergyRecord {
    int level;
    int sweep;         // 0 for rows written before the first sweep of a level
    std::string phase; // "coarse", "init", "register" or "sequence"
    double total;
    double regularizer;
    double data;
    double min_det; // min over k of det D(id - Pv_k) on the grid
    int floored;    // path weights raised to the floor in the last sequence step
};

struct MorphState {
    std::vector<MvImage> images;             // I_0..I_K
    std::vector<Displacement> displacements; // v_1..v_K
    std::vector<EnergyRecord> ledger;
    int level = 0;
    bool aborted = false;
    std::string message; // reason for an abort

    int K() const { return static_cast<int>(displacements.size()); }
};

// Pointwise geodesic images I_k = geopoint(T, R, k/K), k = 1..K-1.
std::vector<MvImage> geodesic_init(const MvImage &T, const MvImage &R, int K);

// Node map phi^{-1} by scattered interpolation of x at the sites phi(x).
VectorField invert_deformation(const VectorField &phi);

// The segments-1 images I_k(x) = G_k(x - (k/segments) Pv(x)) with
// G_k = geopoint(T, R o phi^{-1}, k/segments), phi = id - Pv.
std::vector<MvImage> insert_intermediate(const MvImage &T, const MvImage &R, const Displacement &v, int segments);

// Bilinear resampling of a staggered displacement to an m1 x m2 grid; values
// are rescaled to the pixel units of the new grid and the boundary is pinned.
Displacement resample_displacement(const Displacement &v, int m1, int m2);

// Total path energy and its two parts.
Energy path_energy(const std::vector<MvImage> &images, const std::vector<Displacement> &displacements,
                   const RegularizerParams &p);

// min over k of the grid Jacobian determinant of id - Pv_k.
double min_det(const std::vector<Displacement> &displacements);

// State with geodesic images and zero displacements.
MorphState initial_state(const MvImage &T, const MvImage &R, int K);

// One sweep: registration of all pairs, then the sequence step. Appends a
// ledger row after each half-step. A DegenerateDeformation in the sequence
// step leaves the state at the last consistent point and sets `aborted`.
void alternate(MorphState &state, const MorphConfig &cfg, int sweep);

// Smoothed pyramid T_0 = T, T_{l+1} = smooth_downsample(T_l).
std::vector<MvImage> build_pyramid(const MvImage &img, int levels, double factor, double kernel_sigma);

// Coarse-to-fine morph returning the finest-level state with K+1 images.
MorphState multiscale(const MvImage &T, const MvImage &R, const MorphConfig &cfg);

// Coarse-to-fine single registration of T to R (K = 1, no images in between).
RegistrationResult multiscale_register(const MvImage &T, const MvImage &R, const RegularizerParams &p, int levels,
                                       double factor, double kernel_sigma = 1.0,
                                       const RegistrationOptions &opts = {});

} // namespace mvmorph
