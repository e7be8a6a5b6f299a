// image.hpp - raster of manifold-valued pixels.

#pragma once

#include <vector>

#include <Eigen/Core>

#include "mvmorph/manifold.hpp"

namespace mvmorph {

// n1 x n2 pixels, each a point of `manifold()`, stored contiguously with the
// second index fastest.
class MvImage {
  public:
    MvImage() : manifold_(Manifold::euclidean(1)) {}
    MvImage(Manifold m, int n1, int n2);
    // Every pixel set to `value`.
    MvImage(Manifold m, int n1, int n2, VecCRef value);

    const Manifold &manifold() const { return manifold_; }
    int n1() const { return n1_; }
    int n2() const { return n2_; }
    int dof() const { return manifold_.point_dim(); }
    bool same_shape(const MvImage &o) const { return n1_ == o.n1_ && n2_ == o.n2_; }

    Eigen::Map<const Vec> pixel(int i, int j) const {
        return Eigen::Map<const Vec>(data_.data() + offset(i, j), dof());
    }
    Eigen::Map<Vec> pixel(int i, int j) { return Eigen::Map<Vec>(data_.data() + offset(i, j), dof()); }
    void set(int i, int j, VecCRef p) { pixel(i, j) = p; }

    const std::vector<double> &data() const { return data_; }
    std::vector<double> &data() { return data_; }

    // Throws InvalidArgument naming the first pixel that is not a manifold point.
    void validate(double tol = 1e-10) const;

    bool operator==(const MvImage &o) const {
        return manifold_ == o.manifold_ && n1_ == o.n1_ && n2_ == o.n2_ && data_ == o.data_;
    }

  private:
    std::size_t offset(int i, int j) const {
        return (static_cast<std::size_t>(i) * n2_ + j) * static_cast<std::size_t>(dof());
    }

    Manifold manifold_;
    int n1_ = 0, n2_ = 0;
    std::vector<double> data_;
};

} // namespace mvmorph
