// manifold.cpp - distance, exp/log maps and Karcher means.

#include "mvmorph/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <type_traits>

#include <Eigen/Eigenvalues>

#include "mvmorph/errors.hpp"

namespace mvmorph {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double eig_floor = 1e-12;

// Wraps an angle into (-pi, pi].
double wrap_angle(double a) {
    double w = std::remainder(a, 2.0 * pi);
    if (w <= -pi) w += 2.0 * pi;
    return w;
}

double circle_log(double p, double q) {
    const double d = wrap_angle(q - p);
    if (std::abs(std::abs(d) - pi) < 1e-12) {
        throw CutLocusError("circle: log between antipodal angles is not unique");
    }
    return d;
}

// Symmetric 2x2 eigendecomposition in closed form, ascending eigenvalues. This
// sits on the innermost loop of every SPD(2) interpolation.
struct Sym2Eig {
    Eigen::Vector2d lam;
    Eigen::Matrix2d vec;

    explicit Sym2Eig(const Eigen::Matrix2d &s) {
        const double a = s(0, 0), b = s(0, 1), c = s(1, 1);
        const double mid = 0.5 * (a + c), d = 0.5 * (a - c), h = std::hypot(d, b);
        const double hi = mid + h;
        // det / hi avoids the cancellation in mid - h for the small eigenvalue.
        const double lo = hi > 0.0 ? (a * c - b * b) / hi : mid - h;
        lam << lo, hi;
        if (h == 0.0) {
            vec.setIdentity();
            return;
        }
        Eigen::Vector2d v1 = d >= 0.0 ? Eigen::Vector2d(d + h, b) : Eigen::Vector2d(b, h - d);
        v1.normalize();
        vec << -v1[1], v1[0], v1[0], v1[1];
    }
    const Eigen::Vector2d &eigenvalues() const { return lam; }
    const Eigen::Matrix2d &eigenvectors() const { return vec; }
};

// Symmetric positive definite matrices with the affine invariant metric. Mat is
// a fixed-size Eigen matrix for n = 2, 3 and MatrixXd otherwise.
template <typename Mat> struct Spd {
    using EigVec = typename Eigen::SelfAdjointEigenSolver<Mat>::RealVectorType;
    static constexpr bool two = Mat::RowsAtCompileTime == 2;
    using Solver = std::conditional_t<two, Sym2Eig, Eigen::SelfAdjointEigenSolver<Mat>>;

    static Solver eig(const Mat &s, int options = Eigen::ComputeEigenvectors) {
        if constexpr (two) {
            (void)options;
            return Sym2Eig(s);
        } else {
            Solver es;
            es.compute(s, options);
            return es;
        }
    }

    static Mat load(VecCRef v, int n) {
        Mat m(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) m(r, c) = v[r * n + c];
        return m;
    }

    static Vec store(const Mat &m) {
        const auto n = m.rows();
        Vec v(n * n);
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c < n; ++c) v[r * n + c] = 0.5 * (m(r, c) + m(c, r));
        return v;
    }

    template <typename F> static Mat apply(const Mat &s, F f) {
        const Solver es = eig(Mat(0.5 * (s + s.transpose())));
        EigVec lam = es.eigenvalues();
        for (Eigen::Index i = 0; i < lam.size(); ++i) lam[i] = f(lam[i]);
        return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    }

    static Mat logm(const Mat &s) {
        return apply(s, [](double x) { return std::log(std::max(x, eig_floor)); });
    }
    static Mat expm(const Mat &s) {
        return apply(s, [](double x) { return std::exp(x); });
    }

    // Square root and inverse square root of a base point.
    struct Roots {
        Mat sq, isq;
    };
    static Roots roots(const Mat &a) {
        const Solver es = eig(Mat(0.5 * (a + a.transpose())));
        EigVec lam = es.eigenvalues();
        EigVec s(lam.size()), is(lam.size());
        for (Eigen::Index i = 0; i < lam.size(); ++i) {
            const double l = std::max(lam[i], eig_floor);
            s[i] = std::sqrt(l);
            is[i] = 1.0 / s[i];
        }
        const Mat &u = es.eigenvectors();
        return {u * s.asDiagonal() * u.transpose(), u * is.asDiagonal() * u.transpose()};
    }

    static Mat whiten(const Roots &r, const Mat &b) {
        Mat s = r.isq * b * r.isq;
        return 0.5 * (s + s.transpose());
    }

    static double dist(VecCRef p, VecCRef q, int n) {
        const Mat a = load(p, n), b = load(q, n);
        const Mat s = whiten(roots(a), b);
        const Solver es = eig(s, Eigen::EigenvaluesOnly);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
            const double l = std::log(std::max(es.eigenvalues()[i], eig_floor));
            acc += l * l;
        }
        return std::sqrt(acc);
    }

    static Vec log(VecCRef p, VecCRef q, int n) {
        const Roots r = roots(load(p, n));
        return store(r.sq * logm(whiten(r, load(q, n))) * r.sq);
    }

    static Vec exp(VecCRef p, VecCRef v, int n) {
        const Roots r = roots(load(p, n));
        return store(r.sq * expm(whiten(r, load(v, n))) * r.sq);
    }

    static Vec geopoint(VecCRef p, VecCRef q, double t, int n) {
        const Roots r = roots(load(p, n));
        const Mat s = whiten(r, load(q, n));
        const Mat st = apply(s, [t](double x) { return std::exp(t * std::log(std::max(x, eig_floor))); });
        return store(r.sq * st * r.sq);
    }

    static double inner(VecCRef p, VecCRef u, VecCRef v, int n) {
        const Roots r = roots(load(p, n));
        const Mat wu = r.isq * load(u, n) * r.isq;
        const Mat wv = r.isq * load(v, n) * r.isq;
        return (wu.array() * wv.transpose().array()).sum();
    }

    static bool contains(VecCRef p, int n, double tol) {
        const Mat a = load(p, n);
        const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
        if (((a - a.transpose()).cwiseAbs().maxCoeff()) > tol * scale) return false;
        const Solver es = eig(Mat(0.5 * (a + a.transpose())), Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff() > 0.0 && std::isfinite(es.eigenvalues().maxCoeff());
    }

    // Fixed point iteration f <- f^{1/2} Exp(mean whitened log) f^{1/2}.
    static Vec karcher(MatCRef pts, VecCRef w, Vec f0, const KarcherOptions &opts, int n) {
        const double wsum = w.sum();
        std::vector<Mat> mats;
        std::vector<double> ws;
        mats.reserve(static_cast<std::size_t>(pts.cols()));
        ws.reserve(static_cast<std::size_t>(pts.cols()));
        for (Eigen::Index i = 0; i < pts.cols(); ++i) {
            if (w[i] > 0.0) {
                mats.push_back(load(pts.col(i), n));
                ws.push_back(w[i]);
            }
        }
        Mat f = load(f0, n);
        for (int it = 0; it <= opts.max_iter; ++it) {
            const Roots r = roots(f);
            Mat g = Mat::Zero(n, n);
            for (std::size_t i = 0; i < mats.size(); ++i) g += ws[i] * logm(whiten(r, mats[i]));
            g /= wsum;
            if (g.norm() <= opts.tol) return store(f);
            if (it == opts.max_iter) break;
            f = r.sq * expm(g) * r.sq;
            f = 0.5 * (f + f.transpose());
        }
        throw ConvergenceError("spd: Karcher mean did not converge", store(f));
    }

    // In whitened coordinates the Hessian of d^2(., p) / 2 at the identity acts
    // on the eigenbasis of L = Log(p) entrywise by x coth x, x = (l_a - l_b) / 2.
    static Vec mean_derivative(VecCRef mean, MatCRef pts, VecCRef w, VecCRef dw, int n) {
        const Roots r = roots(load(mean, n));
        const int nb = n * (n + 1) / 2;
        Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(nb, nb);
        Mat rhs = Mat::Zero(n, n);
        auto coth_ratio = [](double x) { return std::abs(x) < 1e-8 ? 1.0 + x * x / 3.0 : x / std::tanh(x); };
        for (Eigen::Index i = 0; i < pts.cols(); ++i) {
            if (w[i] == 0.0 && dw[i] == 0.0) continue;
            const Solver es = eig(whiten(r, load(pts.col(i), n)));
            const Mat &q = es.eigenvectors();
            EigVec l = es.eigenvalues();
            for (Eigen::Index a = 0; a < l.size(); ++a) l[a] = std::log(std::max(l[a], eig_floor));
            if (dw[i] != 0.0) rhs += dw[i] * (q * l.asDiagonal() * q.transpose());
            if (w[i] == 0.0) continue;
            int col = 0;
            for (int a = 0; a < n; ++a)
                for (int b = a; b < n; ++b, ++col) {
                    Mat e = Mat::Zero(n, n);
                    e(a, b) = 1.0;
                    e(b, a) = 1.0;
                    Mat y = q.transpose() * e * q;
                    for (int c = 0; c < n; ++c)
                        for (int d = 0; d < n; ++d) y(c, d) *= coth_ratio(0.5 * (l[c] - l[d]));
                    y = q * y * q.transpose();
                    int row = 0;
                    for (int c = 0; c < n; ++c)
                        for (int d = c; d < n; ++d, ++row) sys(row, col) += w[i] * y(c, d);
                }
        }
        Eigen::VectorXd b(nb);
        int row = 0;
        for (int c = 0; c < n; ++c)
            for (int d = c; d < n; ++d, ++row) b[row] = rhs(c, d);
        const Eigen::VectorXd coef = sys.partialPivLu().solve(b);
        Mat y = Mat::Zero(n, n);
        int col = 0;
        for (int a = 0; a < n; ++a)
            for (int c = a; c < n; ++c, ++col) {
                y(a, c) += coef[col];
                if (c != a) y(c, a) += coef[col];
            }
        return store(r.sq * y * r.sq);
    }
};

template <typename F> decltype(auto) spd_dispatch(int n, F &&f) {
    switch (n) {
    case 2: return f(Spd<Eigen::Matrix2d>{});
    case 3: return f(Spd<Eigen::Matrix3d>{});
    default: return f(Spd<Eigen::MatrixXd>{});
    }
}

Vec sphere_exp(VecCRef p, VecCRef v) {
    const double nv = v.norm();
    if (nv < 1e-300) return p;
    Vec q = std::cos(nv) * p + (std::sin(nv) / nv) * v;
    return q / q.norm();
}

Vec sphere_log(VecCRef p, VecCRef q) {
    const double c = p.dot(q);
    Vec perp = q - c * p;
    const double s = perp.norm();
    const double theta = std::atan2(s, c);
    if (pi - theta < 1e-10) {
        throw CutLocusError("sphere: log between antipodal points is not unique");
    }
    if (s < 1e-300) return Vec::Zero(p.size());
    return (theta / s) * perp;
}

double sphere_dist(VecCRef p, VecCRef q) {
    const double c = p.dot(q);
    const double s = (q - c * p).norm();
    return std::atan2(s, c);
}

} // namespace

Manifold::Manifold(Kind k, int n, int point_dim) : kind_(k), n_(n), point_dim_(point_dim) {}

Manifold Manifold::euclidean(int d) {
    if (d < 1) throw InvalidArgument("euclidean: dimension must be positive");
    return Manifold(Kind::euclidean, d, d);
}

Manifold Manifold::circle() { return Manifold(Kind::circle, 0, 1); }

Manifold Manifold::sphere(int d) {
    if (d < 1) throw InvalidArgument("sphere: dimension must be positive");
    return Manifold(Kind::sphere, d, d + 1);
}

Manifold Manifold::spd(int n) {
    if (n < 1) throw InvalidArgument("spd: matrix size must be positive");
    return Manifold(Kind::spd, n, n * n);
}

Manifold Manifold::product(std::vector<std::pair<Manifold, double>> factors) {
    if (factors.empty()) throw InvalidArgument("product: needs at least one factor");
    auto list = std::make_shared<std::vector<Factor>>();
    int offset = 0;
    for (auto &[m, w] : factors) {
        if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("product: weights must be strictly positive");
        list->push_back(Factor{m, w, offset});
        offset += m.point_dim();
    }
    Manifold out(Kind::product, 0, offset);
    out.factors_ = std::move(list);
    return out;
}

Manifold Manifold::hsv(double hue_weight, double sv_weight) {
    return product({{circle(), hue_weight}, {euclidean(2), sv_weight}});
}

Manifold Manifold::cb(double chroma_weight, double brightness_weight) {
    return product({{sphere(2), chroma_weight}, {euclidean(1), brightness_weight}});
}

Manifold Manifold::parse(const std::string &name) {
    auto arg = [&](const std::string &prefix) -> int {
        const auto open = prefix.size();
        if (name.size() < open + 2 || name.back() != ')') throw InvalidArgument("bad manifold name: " + name);
        return std::stoi(name.substr(open + 1, name.size() - open - 2));
    };
    if (name == "circle") return circle();
    if (name == "hsv") return hsv();
    if (name == "cb") return cb();
    if (name.rfind("euclidean", 0) == 0) return euclidean(arg("euclidean"));
    if (name.rfind("sphere", 0) == 0) return sphere(arg("sphere"));
    if (name.rfind("spd", 0) == 0) return spd(arg("spd"));
    throw InvalidArgument("unknown manifold: " + name);
}

int Manifold::dimension() const {
    switch (kind_) {
    case Kind::euclidean: return n_;
    case Kind::circle: return 1;
    case Kind::sphere: return n_;
    case Kind::spd: return n_ * (n_ + 1) / 2;
    case Kind::product: {
        int d = 0;
        for (const auto &f : *factors_) d += f.manifold.dimension();
        return d;
    }
    }
    return 0;
}

const std::vector<Manifold::Factor> &Manifold::factors() const {
    static const std::vector<Factor> none;
    return factors_ ? *factors_ : none;
}

std::string Manifold::name() const {
    std::ostringstream os;
    switch (kind_) {
    case Kind::euclidean: os << "euclidean(" << n_ << ")"; break;
    case Kind::circle: os << "circle"; break;
    case Kind::sphere: os << "sphere(" << n_ << ")"; break;
    case Kind::spd: os << "spd(" << n_ << ")"; break;
    case Kind::product: {
        os << "product(";
        bool first = true;
        for (const auto &f : *factors_) {
            if (!first) os << ", ";
            first = false;
            os << f.manifold.name() << ":" << f.weight;
        }
        os << ")";
        break;
    }
    }
    return os.str();
}

bool Manifold::operator==(const Manifold &other) const {
    if (kind_ != other.kind_ || n_ != other.n_ || point_dim_ != other.point_dim_) return false;
    if (kind_ != Kind::product) return true;
    const auto &a = *factors_;
    const auto &b = *other.factors_;
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].weight != b[i].weight || a[i].manifold != b[i].manifold) return false;
    }
    return true;
}

void Manifold::check_dim(VecCRef x, const char *what) const {
    if (x.size() != point_dim_) {
        std::ostringstream os;
        os << name() << ": " << what << " has length " << x.size() << ", expected " << point_dim_;
        throw InvalidArgument(os.str());
    }
}

double Manifold::dist(VecCRef p, VecCRef q) const {
    check_dim(p, "p");
    check_dim(q, "q");
    switch (kind_) {
    case Kind::euclidean: return (q - p).norm();
    case Kind::circle: return std::abs(wrap_angle(q[0] - p[0]));
    case Kind::sphere: return sphere_dist(p, q);
    case Kind::spd: return spd_dispatch(n_, [&](auto ops) { return ops.dist(p, q, n_); });
    case Kind::product: return std::sqrt(dist2(p, q));
    }
    return 0.0;
}

double Manifold::dist2(VecCRef p, VecCRef q) const {
    if (kind_ != Kind::product) {
        const double d = dist(p, q);
        return d * d;
    }
    check_dim(p, "p");
    check_dim(q, "q");
    double acc = 0.0;
    for (const auto &f : *factors_) {
        const int k = f.manifold.point_dim();
        acc += f.weight * f.manifold.dist2(p.segment(f.offset, k), q.segment(f.offset, k));
    }
    return acc;
}

Vec Manifold::exp(VecCRef p, VecCRef v) const {
    check_dim(p, "p");
    check_dim(v, "v");
    switch (kind_) {
    case Kind::euclidean: return p + v;
    case Kind::circle: return Vec::Constant(1, wrap_angle(p[0] + v[0]));
    case Kind::sphere: return sphere_exp(p, v);
    case Kind::spd: return spd_dispatch(n_, [&](auto ops) { return ops.exp(p, v, n_); });
    case Kind::product: {
        Vec out(point_dim_);
        for (const auto &f : *factors_) {
            const int k = f.manifold.point_dim();
            out.segment(f.offset, k) = f.manifold.exp(p.segment(f.offset, k), v.segment(f.offset, k));
        }
        return out;
    }
    }
    return p;
}

Vec Manifold::log(VecCRef p, VecCRef q) const {
    check_dim(p, "p");
    check_dim(q, "q");
    switch (kind_) {
    case Kind::euclidean: return q - p;
    case Kind::circle: return Vec::Constant(1, circle_log(p[0], q[0]));
    case Kind::sphere: return sphere_log(p, q);
    case Kind::spd: return spd_dispatch(n_, [&](auto ops) { return ops.log(p, q, n_); });
    case Kind::product: {
        Vec out(point_dim_);
        for (const auto &f : *factors_) {
            const int k = f.manifold.point_dim();
            out.segment(f.offset, k) = f.manifold.log(p.segment(f.offset, k), q.segment(f.offset, k));
        }
        return out;
    }
    }
    return Vec::Zero(point_dim_);
}

Vec Manifold::geopoint(VecCRef p, VecCRef q, double t) const {
    check_dim(p, "p");
    check_dim(q, "q");
    if (t == 0.0) {
        log(p, q); // cut-locus pairs still raise
        return p;
    }
    if (t == 1.0) {
        log(p, q);
        return q;
    }
    switch (kind_) {
    case Kind::euclidean: return p + t * (q - p);
    case Kind::spd: return spd_dispatch(n_, [&](auto ops) { return ops.geopoint(p, q, t, n_); });
    case Kind::product: {
        Vec out(point_dim_);
        for (const auto &f : *factors_) {
            const int k = f.manifold.point_dim();
            out.segment(f.offset, k) = f.manifold.geopoint(p.segment(f.offset, k), q.segment(f.offset, k), t);
        }
        return out;
    }
    default: return exp(p, t * log(p, q));
    }
}

double Manifold::inner(VecCRef p, VecCRef u, VecCRef v) const {
    check_dim(p, "p");
    check_dim(u, "u");
    check_dim(v, "v");
    switch (kind_) {
    case Kind::euclidean:
    case Kind::circle:
    case Kind::sphere: return u.dot(v);
    case Kind::spd: return spd_dispatch(n_, [&](auto ops) { return ops.inner(p, u, v, n_); });
    case Kind::product: {
        double acc = 0.0;
        for (const auto &f : *factors_) {
            const int k = f.manifold.point_dim();
            acc += f.weight * f.manifold.inner(p.segment(f.offset, k), u.segment(f.offset, k), v.segment(f.offset, k));
        }
        return acc;
    }
    }
    return 0.0;
}

double Manifold::norm(VecCRef p, VecCRef v) const { return std::sqrt(std::max(0.0, inner(p, v, v))); }

Tangent Manifold::log_tangent(VecCRef p, VecCRef q) const { return Tangent{p, log(p, q)}; }

Vec Manifold::exp(VecCRef p, const Tangent &v) const {
    if (v.base.size() != p.size() || v.base != p) throw InvalidArgument(name() + ": tangent is based at a different point");
    return exp(p, v.coords);
}

double Manifold::inner(VecCRef p, const Tangent &u, const Tangent &v) const {
    if (u.base.size() != p.size() || v.base.size() != p.size() || u.base != p || v.base != p) {
        throw InvalidArgument(name() + ": tangent is based at a different point");
    }
    return inner(p, u.coords, v.coords);
}

Vec Manifold::karcher_mean(MatCRef points, VecCRef weights, const KarcherOptions &opts) const {
    if (points.cols() == 0 || points.cols() != weights.size()) {
        throw InvalidArgument("karcher_mean: need one weight per point");
    }
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < weights.size(); ++i)
        if (weights[i] > weights[best]) best = i;
    return karcher_mean(points, weights, points.col(best), opts);
}

Vec Manifold::karcher_mean(MatCRef points, VecCRef weights, VecCRef initial, const KarcherOptions &opts) const {
    if (points.rows() != point_dim_) throw InvalidArgument("karcher_mean: point dimension mismatch");
    if (points.cols() == 0 || points.cols() != weights.size()) {
        throw InvalidArgument("karcher_mean: need one weight per point");
    }
    double wsum = 0.0;
    int active = 0;
    Eigen::Index first = -1, second = -1;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        if (weights[i] < 0.0 || !std::isfinite(weights[i])) throw InvalidArgument("karcher_mean: weights must be nonnegative");
        if (weights[i] > 0.0) {
            wsum += weights[i];
            ++active;
            if (first < 0)
                first = i;
            else if (second < 0)
                second = i;
        }
    }
    if (active == 0) throw InvalidArgument("karcher_mean: all weights are zero");
    if (active == 1) return points.col(first);
    if (active == 2) return geopoint(points.col(first), points.col(second), weights[second] / (weights[first] + weights[second]));

    switch (kind_) {
    case Kind::euclidean: return points * weights / wsum;
    case Kind::product: {
        Vec out(point_dim_);
        for (const auto &f : *factors_) {
            const int k = f.manifold.point_dim();
            out.segment(f.offset, k) =
                f.manifold.karcher_mean(points.middleRows(f.offset, k), weights, initial.segment(f.offset, k), opts);
        }
        return out;
    }
    case Kind::spd:
        return spd_dispatch(n_, [&](auto ops) { return ops.karcher(points, weights, Vec(initial), opts, n_); });
    default: return karcher_iterate(points, weights, Vec(initial), opts);
    }
}

Vec Manifold::mean_derivative(VecCRef mean, MatCRef points, VecCRef weights, VecCRef dweights) const {
    if (points.rows() != point_dim_ || points.cols() != weights.size() || weights.size() != dweights.size()) {
        throw InvalidArgument("mean_derivative: size mismatch");
    }
    const double wsum = weights.sum();
    if (!(wsum > 0.0)) throw InvalidArgument("mean_derivative: all weights are zero");
    switch (kind_) {
    case Kind::euclidean: return (points * dweights - dweights.sum() * mean) / wsum;
    case Kind::circle: {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < points.cols(); ++i)
            if (dweights[i] != 0.0) acc += dweights[i] * circle_log(mean[0], points(0, i));
        return Vec::Constant(1, acc / wsum);
    }
    case Kind::sphere: {
        const Eigen::Index d = point_dim_;
        Eigen::MatrixXd sys = mean * mean.transpose();
        Vec rhs = Vec::Zero(d);
        const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(d, d) - sys;
        for (Eigen::Index i = 0; i < points.cols(); ++i) {
            if (weights[i] == 0.0 && dweights[i] == 0.0) continue;
            const Vec l = sphere_log(mean, points.col(i));
            if (dweights[i] != 0.0) rhs += dweights[i] * l;
            if (weights[i] == 0.0) continue;
            const double theta = l.norm();
            if (theta < 1e-12) {
                sys += weights[i] * proj;
                continue;
            }
            const Vec u = l / theta;
            const double c = theta / std::tan(theta);
            sys += weights[i] * (u * u.transpose() + c * (proj - u * u.transpose()));
        }
        return sys.partialPivLu().solve(rhs);
    }
    case Kind::spd:
        return spd_dispatch(n_, [&](auto ops) { return ops.mean_derivative(mean, points, weights, dweights, n_); });
    case Kind::product: {
        Vec out(point_dim_);
        for (const auto &f : *factors_) {
            const int k = f.manifold.point_dim();
            out.segment(f.offset, k) = f.manifold.mean_derivative(mean.segment(f.offset, k),
                                                                  points.middleRows(f.offset, k), weights, dweights);
        }
        return out;
    }
    }
    return zero_tangent();
}

Vec Manifold::karcher_iterate(MatCRef points, VecCRef weights, Vec f, const KarcherOptions &opts) const {
    const double wsum = weights.sum();
    for (int it = 0; it <= opts.max_iter; ++it) {
        Vec g = Vec::Zero(point_dim_);
        for (Eigen::Index i = 0; i < points.cols(); ++i) {
            if (weights[i] > 0.0) g += weights[i] * log(f, points.col(i));
        }
        g /= wsum;
        if (norm(f, g) <= opts.tol) return f;
        if (it == opts.max_iter) break;
        f = exp(f, g);
    }
    throw ConvergenceError(name() + ": Karcher mean did not converge", f);
}

bool Manifold::contains(VecCRef p, double tol) const {
    if (p.size() != point_dim_ || !p.allFinite()) return false;
    switch (kind_) {
    case Kind::euclidean: return true;
    case Kind::circle: return p[0] > -pi - tol && p[0] <= pi + tol;
    case Kind::sphere: return std::abs(p.norm() - 1.0) <= tol;
    case Kind::spd: return spd_dispatch(n_, [&](auto ops) { return ops.contains(p, n_, tol); });
    case Kind::product:
        for (const auto &f : *factors_) {
            if (!f.manifold.contains(p.segment(f.offset, f.manifold.point_dim()), tol)) return false;
        }
        return true;
    }
    return false;
}

bool Manifold::is_tangent(VecCRef p, VecCRef v, double tol) const {
    if (v.size() != point_dim_ || !v.allFinite()) return false;
    switch (kind_) {
    case Kind::sphere: return std::abs(p.dot(v)) <= tol * std::max(1.0, v.norm());
    case Kind::spd: {
        for (int r = 0; r < n_; ++r)
            for (int c = r + 1; c < n_; ++c)
                if (std::abs(v[r * n_ + c] - v[c * n_ + r]) > tol * std::max(1.0, v.cwiseAbs().maxCoeff())) return false;
        return true;
    }
    case Kind::product:
        for (const auto &f : *factors_) {
            const int k = f.manifold.point_dim();
            if (!f.manifold.is_tangent(p.segment(f.offset, k), v.segment(f.offset, k), tol)) return false;
        }
        return true;
    default: return true;
    }
}

void Manifold::check_point(VecCRef p, const std::string &what) const {
    if (!contains(p, 1e-10)) throw InvalidArgument(name() + ": " + what + " is not a valid point");
}

Vec Manifold::canonicalize(VecCRef p) const {
    check_dim(p, "p");
    switch (kind_) {
    case Kind::circle: return Vec::Constant(1, wrap_angle(p[0]));
    case Kind::sphere: return p / p.norm();
    case Kind::spd: {
        Vec out = p;
        for (int r = 0; r < n_; ++r)
            for (int c = r + 1; c < n_; ++c) out[r * n_ + c] = out[c * n_ + r] = 0.5 * (p[r * n_ + c] + p[c * n_ + r]);
        return out;
    }
    case Kind::product: {
        Vec out(point_dim_);
        for (const auto &f : *factors_) {
            const int k = f.manifold.point_dim();
            out.segment(f.offset, k) = f.manifold.canonicalize(p.segment(f.offset, k));
        }
        return out;
    }
    default: return p;
    }
}

} // namespace mvmorph
