// imageops.hpp - interpolation, gradients and resampling of manifold-valued images.
//
// Pixel centres are the integer nodes (i, j); the image covers
// [-1/2, n1-1/2] x [-1/2, n2-1/2]. Sampling queries are clamped to the node
// hull [0, n1-1] x [0, n2-1].

#pragma once

#include <array>
#include <vector>

#include "mvmorph/grid.hpp"
#include "mvmorph/image.hpp"

namespace mvmorph {

// Karcher mean of the four surrounding pixels with bilinear weights. Exact at
// nodes; on cell edges it is the geodesic between the two edge pixels.
Vec bilinear_sample(const MvImage &img, double x1, double x2, const KarcherOptions &opts = {});

struct ImageGradient {
    Vec base; // T(x)
    Vec d1;   // tangent at base, derivative along x1
    Vec d2;   // tangent at base, derivative along x2
};

// One-sided secant gradient: d1 = log_{T(x)} T(c, x2) / (c - x1) with c the
// next node above x1 (the previous one at the last row). Components along a
// clamped axis are zero.
ImageGradient image_gradient(const MvImage &img, double x1, double x2, const KarcherOptions &opts = {});

// Exact partial derivatives of bilinear_sample, obtained by differentiating the
// Karcher mean condition with respect to the bilinear weights. One-sided from
// the cell containing x (the forward cell on cell edges, the last cell at the
// far boundary). Components along a clamped axis are zero.
ImageGradient image_derivative(const MvImage &img, double x1, double x2, const KarcherOptions &opts = {});

// Piecewise-linear interpolation over the Delaunay triangulation of `sites`,
// evaluated at every node of an n1 x n2 grid. Triangle values are barycentric
// Karcher means; queries outside the hull take the nearest site's value.
MvImage scattered_interp(const Manifold &m, const std::vector<std::array<double, 2>> &sites,
                         const std::vector<Vec> &values, int n1, int n2, const KarcherOptions &opts = {});

struct PyramidOptions {
    double kernel_sigma = 1.0; // in fine pixels, truncated at 2 sigma
};

// Per-pixel Gaussian-weighted Karcher mean, truncated at radius floor(2 sigma)
// with weights renormalized at the border.
MvImage gaussian_smooth(const MvImage &img, double sigma);

// gaussian_smooth followed by bilinear_sample at the coarse pixel centres.
// Output size round(n * factor) per axis, at least 4.
MvImage smooth_downsample(const MvImage &img, double factor, double kernel_sigma = 1.0);

// Karcher bilinear resampling onto an m1 x m2 grid covering the same domain.
MvImage resample(const MvImage &img, int m1, int m2);

// Coordinate of the target pixel centre `c` in the source grid when an n-pixel
// axis is resampled to m pixels.
inline double map_coordinate(double c, int n_src, int m_dst) {
    return (c + 0.5) * static_cast<double>(n_src) / m_dst - 0.5;
}

// Geodesic point per pixel.
MvImage pointwise_geodesic(const MvImage &a, const MvImage &b, double t);

// Sum over pixels of squared distances.
double squared_l2_distance(const MvImage &a, const MvImage &b);

// Evaluates img at every node of `positions` (a node map) with bilinear_sample.
MvImage warp(const MvImage &img, const VectorField &positions);

} // namespace mvmorph
