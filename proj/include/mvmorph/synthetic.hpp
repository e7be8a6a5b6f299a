// synthetic.hpp - synthetic image pairs used by the configs and acceptance runs.

#pragma once

#include "mvmorph/image.hpp"

namespace mvmorph {

struct ImagePair {
    MvImage T;
    MvImage R;
};

// 32x32 euclidean(1) Gaussian bumps (sigma 4 px) centered at (14, 16) in T
// and (16, 16) in R, so R(x) = T(x - (2, 0)).
ImagePair gaussian_blob_pair(int n = 32, double sigma = 4.0, double shift = 2.0);

// 21x33 SPD(3) pair on a 3 I_3 background. T holds
//   A_T = [3 2 1; 2 4 -1; 1 -1 2]
// in rows 4..9, columns 10..22; R holds A_R = exp_{3I}(2 log_{3I} A_T) in
// rows 10..15 of the same columns.
ImagePair spd3_rectangle_pair();

// n x n SPD(2) whirl pair. T is a spiral tensor field with
//   principal angle atan2(y) + pi/2 + 2 r,  eigenvalues 1 + 3 exp(-((r - 0.5) / 0.25)^2) and 0.7,
// where r is the distance to the center in units of n/2. R is T rotated by
// amplitude * exp(-r^2 / (2 * 0.35^2)) about the center and pushed away from
// the identity: R(x) = exp_I(1.5 log_I T(rot(x))).
ImagePair spd2_whirl_pair(int n = 64, double amplitude = 1.2);

} // namespace mvmorph
