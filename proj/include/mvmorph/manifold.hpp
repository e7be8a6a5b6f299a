// manifold.hpp - Riemannian manifolds used as pixel value spaces.
//
// Points and tangent vectors are stored as flat Eigen vectors in an ambient
// representation:
//
//   euclidean(d)  d coordinates
//   circle        one angle in (-pi, pi]
//   sphere(d)     d+1 coordinates of unit Euclidean norm
//   spd(n)        n*n entries of a symmetric positive definite matrix
//   product       concatenation of the factor representations
//
// Tangent vectors use the same storage length as points (ambient tangent
// coordinates: orthogonal to the base point on the sphere, a symmetric matrix
// on spd). All member functions are const and reentrant.

#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace mvmorph {

using Vec = Eigen::VectorXd;
using VecCRef = const Eigen::Ref<const Eigen::VectorXd> &;
using MatCRef = const Eigen::Ref<const Eigen::MatrixXd> &;

struct KarcherOptions {
    double tol = 1e-10;  // stop once |sum w_i log_f p_i|_f <= tol * sum w_i
    int max_iter = 100;
};

class Manifold;

// A tangent vector together with its base point. The checked overloads of
// exp/inner reject tangents attached to a different base.
struct Tangent {
    Vec base;
    Vec coords;
};

class Manifold {
  public:
    enum class Kind { euclidean, circle, sphere, spd, product };

    struct Factor;

    static Manifold euclidean(int d);
    static Manifold circle();
    static Manifold sphere(int d);
    static Manifold spd(int n);
    static Manifold product(std::vector<std::pair<Manifold, double>> factors);

    // S^1 x R^2, hue first. Weights default to the plain product metric.
    static Manifold hsv(double hue_weight = 1.0, double sv_weight = 1.0);
    // S^2 x R^1, chromaticity first.
    static Manifold cb(double chroma_weight = 1.0, double brightness_weight = 1.0);

    // Parses "euclidean(3)", "circle", "sphere(2)", "spd(3)", "hsv", "cb".
    static Manifold parse(const std::string &name);

    Kind kind() const { return kind_; }
    // Storage length of points and of tangent vectors.
    int point_dim() const { return point_dim_; }
    int tangent_dim() const { return point_dim_; }
    // Intrinsic dimension.
    int dimension() const;
    // d for euclidean/sphere, n for spd, 0 otherwise.
    int parameter() const { return n_; }
    const std::vector<Factor> &factors() const;
    std::string name() const;

    bool operator==(const Manifold &other) const;
    bool operator!=(const Manifold &other) const { return !(*this == other); }

    double dist(VecCRef p, VecCRef q) const;
    double dist2(VecCRef p, VecCRef q) const;
    Vec exp(VecCRef p, VecCRef v) const;
    Vec log(VecCRef p, VecCRef q) const;
    Vec geopoint(VecCRef p, VecCRef q, double t) const;
    double inner(VecCRef p, VecCRef u, VecCRef v) const;
    double norm(VecCRef p, VecCRef v) const;

    // Checked variants carrying the base point.
    Tangent log_tangent(VecCRef p, VecCRef q) const;
    Vec exp(VecCRef p, const Tangent &v) const;
    double inner(VecCRef p, const Tangent &u, const Tangent &v) const;

    // Weighted Karcher mean of the columns of `points`. Throws InvalidArgument when
    // all weights vanish and ConvergenceError after opts.max_iter iterations.
    Vec karcher_mean(MatCRef points, VecCRef weights, const KarcherOptions &opts = {}) const;
    Vec karcher_mean(MatCRef points, VecCRef weights, VecCRef initial,
                     const KarcherOptions &opts = {}) const;

    // Derivative of the weighted Karcher mean `mean` of `points` when the
    // weights move along `dweights`: solves (sum_i w_i Hess f_i) xi = sum_i dw_i log_mean p_i
    // with f_i = d^2(., p_i) / 2. Returns a tangent vector at `mean`.
    Vec mean_derivative(VecCRef mean, MatCRef points, VecCRef weights, VecCRef dweights) const;

    // Membership test (unit norm, symmetry + positive eigenvalues, angle range).
    bool contains(VecCRef p, double tol = 1e-10) const;
    bool is_tangent(VecCRef p, VecCRef v, double tol = 1e-10) const;
    // Throws InvalidArgument naming `what` if p is not a point of the manifold.
    void check_point(VecCRef p, const std::string &what) const;
    // Snaps a nearly valid point back onto the manifold (wrap, renormalize, symmetrize).
    Vec canonicalize(VecCRef p) const;
    Vec zero_tangent() const { return Vec::Zero(point_dim_); }

  private:
    Manifold(Kind k, int n, int point_dim);

    void check_dim(VecCRef x, const char *what) const;
    Vec karcher_iterate(MatCRef points, VecCRef weights, Vec f, const KarcherOptions &opts) const;

    Kind kind_ = Kind::euclidean;
    int n_ = 0;
    int point_dim_ = 0;
    std::shared_ptr<const std::vector<Factor>> factors_;
};

struct Manifold::Factor {
    Manifold manifold;
    double weight;
    int offset;
};

} // namespace mvmorph
