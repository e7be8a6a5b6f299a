// morph.cpp - alternating minimization and the coarse-to-fine driver.

#include "mvmorph/morph.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "mvmorph/errors.hpp"
#include "mvmorph/imageops.hpp"
#include "mvmorph/sequence.hpp"

namespace mvmorph {

using Eigen::MatrixXd;

int MorphConfig::inserts_at(int level) const {
    const int idx = levels - 1 - level;
    if (idx < 0 || idx >= static_cast<int>(inserts.size())) return 0;
    return inserts[idx];
}

int MorphConfig::scheduled_K() const {
    int k = 1;
    for (int l = levels - 1; l >= 0; --l) k *= 1 + inserts_at(l);
    return k;
}

void MorphConfig::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("config: alpha must be positive");
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw InvalidArgument("config: eta must be nonnegative");
    if (m < 1) throw InvalidArgument("config: m must be at least 1");
    if (levels < 0) throw InvalidArgument("config: levels must be nonnegative");
    if (!(scale_factor > 0.0 && scale_factor < 1.0)) throw InvalidArgument("config: scale_factor must lie in (0, 1)");
    if (static_cast<int>(inserts.size()) > levels) {
        throw InvalidArgument("config: the inserts schedule has more entries than levels");
    }
    for (int n : inserts)
        if (n < 0) throw InvalidArgument("config: inserts must be nonnegative");
    if (sweeps_per_level < 0) throw InvalidArgument("config: sweeps_per_level must be nonnegative");
    if (kernel_sigma < 0.0) throw InvalidArgument("config: kernel_sigma must be nonnegative");
    const int k = scheduled_K();
    if (levels == 0 && K < 2) throw InvalidArgument("config: a single-level run needs K >= 2");
    if (levels > 0 && k < 2) throw InvalidArgument("config: the inserts schedule yields no intermediate image");
    if (levels > 0 && K != 0 && K != k) {
        throw InvalidArgument("config: K = " + std::to_string(K) + " but the inserts schedule yields " +
                              std::to_string(k));
    }
}

std::vector<MvImage> geodesic_init(const MvImage &T, const MvImage &R, int K) {
    if (K < 1) throw InvalidArgument("geodesic_init: K must be positive");
    if (T.manifold() != R.manifold() || !T.same_shape(R)) throw InvalidArgument("geodesic_init: T and R mismatch");
    std::vector<MvImage> out;
    for (int k = 1; k < K; ++k) out.push_back(pointwise_geodesic(T, R, static_cast<double>(k) / K));
    return out;
}

VectorField invert_deformation(const VectorField &phi) {
    const int n1 = phi.n1(), n2 = phi.n2();
    std::vector<std::array<double, 2>> sites;
    std::vector<Vec> values;
    sites.reserve(static_cast<std::size_t>(n1) * n2);
    values.reserve(sites.capacity());
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            sites.push_back({phi.x1(i, j), phi.x2(i, j)});
            values.push_back(Eigen::Vector2d(i, j));
        }
    const MvImage inv = scattered_interp(Manifold::euclidean(2), sites, values, n1, n2);
    VectorField out(n1, n2);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            out.x1(i, j) = inv.pixel(i, j)[0];
            out.x2(i, j) = inv.pixel(i, j)[1];
        }
    return out;
}

std::vector<MvImage> insert_intermediate(const MvImage &T, const MvImage &R, const Displacement &v, int segments) {
    if (segments < 1) throw InvalidArgument("insert_intermediate: need at least one segment");
    if (T.manifold() != R.manifold() || !T.same_shape(R)) throw InvalidArgument("insert_intermediate: T and R mismatch");
    if (v.n1() != T.n1() || v.n2() != T.n2()) throw InvalidArgument("insert_intermediate: displacement shape mismatch");
    std::vector<MvImage> out;
    if (segments == 1) return out;
    const VectorField pv = apply_P(v);
    const MvImage r_back = warp(R, invert_deformation(deformation_from(pv)));
    for (int k = 1; k < segments; ++k) {
        const double s = static_cast<double>(k) / segments;
        const MvImage g = pointwise_geodesic(T, r_back, s);
        MvImage img(T.manifold(), T.n1(), T.n2());
        for (int i = 0; i < T.n1(); ++i)
            for (int j = 0; j < T.n2(); ++j) img.set(i, j, bilinear_sample(g, i - s * pv.x1(i, j), j - s * pv.x2(i, j)));
        out.push_back(std::move(img));
    }
    return out;
}

Displacement resample_displacement(const Displacement &v, int m1, int m2) {
    const int n1 = v.n1(), n2 = v.n2();
    if (m1 < 2 || m2 < 2) throw InvalidArgument("resample_displacement: target grid must be at least 2x2");
    Displacement out(m1, m2);
    const double s1 = static_cast<double>(m1) / n1, s2 = static_cast<double>(m2) / n2;
    // v1(a, j) sits at (a + 1/2, j): row coordinate a = x1 - 1/2 in the stored array.
    for (int a = 0; a + 1 < m1; ++a)
        for (int j = 0; j < m2; ++j) {
            const double y1 = map_coordinate(a + 0.5, n1, m1) - 0.5;
            const double y2 = map_coordinate(j, n2, m2);
            out.v1(a, j) = s1 * sample_bilinear(v.v1, y1, y2);
        }
    for (int i = 0; i < m1; ++i)
        for (int b = 0; b + 1 < m2; ++b) {
            const double y1 = map_coordinate(i, n1, m1);
            const double y2 = map_coordinate(b + 0.5, n2, m2) - 0.5;
            out.v2(i, b) = s2 * sample_bilinear(v.v2, y1, y2);
        }
    out.enforce_boundary();
    return out;
}

Energy path_energy(const std::vector<MvImage> &images, const std::vector<Displacement> &displacements,
                   const RegularizerParams &p) {
    if (images.size() != displacements.size() + 1) throw InvalidArgument("path_energy: need K+1 images for K displacements");
    Energy e{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < displacements.size(); ++k) {
        e.regularizer += regularizer_value(displacements[k], p);
        e.data += data_term(images[k], images[k + 1], displacements[k]);
    }
    e.total = e.regularizer + e.data;
    return e;
}

double min_det(const std::vector<Displacement> &displacements) {
    double out = std::numeric_limits<double>::infinity();
    for (const auto &v : displacements) out = std::min(out, min_jacobian_det(v));
    return out;
}

MorphState initial_state(const MvImage &T, const MvImage &R, int K) {
    MorphState s;
    s.images.push_back(T);
    for (auto &img : geodesic_init(T, R, K)) s.images.push_back(std::move(img));
    s.images.push_back(R);
    s.displacements.assign(K, Displacement::zeros(T.n1(), T.n2()));
    return s;
}

namespace {

void log_row(MorphState &s, const MorphConfig &cfg, int sweep, const std::string &phase, int floored) {
    const Energy e = path_energy(s.images, s.displacements, cfg.regularizer());
    s.ledger.push_back({s.level, sweep, phase, e.total, e.regularizer, e.data, min_det(s.displacements), floored});
}

int last_floored(const MorphState &s) { return s.ledger.empty() ? 0 : s.ledger.back().floored; }

} // namespace

void alternate(MorphState &state, const MorphConfig &cfg, int sweep) {
    const int K = state.K();
    if (K < 1 || static_cast<int>(state.images.size()) != K + 1) throw InvalidArgument("alternate: inconsistent state");
    const RegularizerParams p = cfg.regularizer();

    // (a) registrations of the K neighbouring pairs.
    std::vector<Displacement> next(K);
    if (cfg.parallel && K > 1) {
        std::vector<std::future<Displacement>> jobs;
        jobs.reserve(K);
        for (int k = 0; k < K; ++k) {
            jobs.push_back(std::async(std::launch::async, [&, k] {
                return register_images(state.images[k], state.images[k + 1], p, state.displacements[k],
                                       cfg.registration)
                    .v;
            }));
        }
        for (int k = 0; k < K; ++k) next[k] = jobs[k].get();
    } else {
        for (int k = 0; k < K; ++k)
            next[k] = register_images(state.images[k], state.images[k + 1], p, state.displacements[k], cfg.registration).v;
    }
    state.displacements = std::move(next);
    log_row(state, cfg, sweep, "register", last_floored(state));

    // (b) closed-form images for the new deformations.
    if (K < 2) return;
    try {
        const SequenceResult seq = optimal_images(state.images.front(), state.images.back(),
                                                  DeformationSequence::from_displacements(state.displacements));
        for (int k = 1; k < K; ++k) state.images[k] = seq.images[k - 1];
        log_row(state, cfg, sweep, "sequence", seq.weights.floored);
    } catch (const DegenerateDeformation &e) {
        state.aborted = true;
        state.message = e.what();
    }
}

std::vector<MvImage> build_pyramid(const MvImage &img, int levels, double factor, double kernel_sigma) {
    std::vector<MvImage> out{img};
    for (int l = 1; l <= levels; ++l) out.push_back(smooth_downsample(out.back(), factor, kernel_sigma));
    return out;
}

namespace {

MvImage resample_to(const MvImage &img, const MvImage &like) { return resample(img, like.n1(), like.n2()); }

} // namespace

MorphState multiscale(const MvImage &T, const MvImage &R, const MorphConfig &cfg) {
    cfg.validate();
    if (T.manifold() != R.manifold() || !T.same_shape(R)) throw InvalidArgument("multiscale: T and R mismatch");
    const RegularizerParams p = cfg.regularizer();

    if (cfg.levels == 0) {
        MorphState s = initial_state(T, R, cfg.K);
        log_row(s, cfg, 0, "init", 0);
        for (int sw = 1; sw <= cfg.sweeps_per_level && !s.aborted; ++sw) alternate(s, cfg, sw);
        return s;
    }

    const std::vector<MvImage> Tp = build_pyramid(T, cfg.levels, cfg.scale_factor, cfg.kernel_sigma);
    const std::vector<MvImage> Rp = build_pyramid(R, cfg.levels, cfg.scale_factor, cfg.kernel_sigma);

    MorphState s;
    s.level = cfg.levels;
    s.images = {Tp[cfg.levels], Rp[cfg.levels]};
    s.displacements = {register_images(Tp[cfg.levels], Rp[cfg.levels], p, cfg.registration).v};
    log_row(s, cfg, 0, "coarse", 0);

    for (int l = cfg.levels - 1; l >= 0; --l) {
        const MvImage &Tl = Tp[l], &Rl = Rp[l];
        const int n1 = Tl.n1(), n2 = Tl.n2();

        // Prolongation of the current path; the endpoints come from the pyramid.
        std::vector<MvImage> imgs{Tl};
        for (int k = 1; k + 1 < static_cast<int>(s.images.size()); ++k) imgs.push_back(resample_to(s.images[k], Tl));
        imgs.push_back(Rl);
        std::vector<Displacement> vs;
        for (const auto &v : s.displacements) vs.push_back(resample_displacement(v, n1, n2));

        // Insertion between neighbours.
        const int ins = cfg.inserts_at(l);
        MorphState next;
        next.level = l;
        next.ledger = std::move(s.ledger);
        if (ins == 0) {
            next.images = std::move(imgs);
            next.displacements = std::move(vs);
        } else {
            next.images.push_back(imgs.front());
            for (std::size_t k = 0; k < vs.size(); ++k) {
                for (auto &img : insert_intermediate(imgs[k], imgs[k + 1], vs[k], ins + 1))
                    next.images.push_back(std::move(img));
                next.images.push_back(imgs[k + 1]);
                for (int r = 0; r <= ins; ++r) next.displacements.push_back((1.0 / (ins + 1)) * vs[k]);
            }
        }
        s = std::move(next);
        log_row(s, cfg, 0, "init", last_floored(s));

        for (int sw = 1; sw <= cfg.sweeps_per_level; ++sw) {
            alternate(s, cfg, sw);
            if (s.aborted) return s;
        }
    }
    return s;
}

RegistrationResult multiscale_register(const MvImage &T, const MvImage &R, const RegularizerParams &p, int levels,
                                       double factor, double kernel_sigma, const RegistrationOptions &opts) {
    if (levels < 0) throw InvalidArgument("multiscale_register: levels must be nonnegative");
    const std::vector<MvImage> Tp = build_pyramid(T, levels, factor, kernel_sigma);
    const std::vector<MvImage> Rp = build_pyramid(R, levels, factor, kernel_sigma);
    RegistrationResult res = register_images(Tp[levels], Rp[levels], p, opts);
    for (int l = levels - 1; l >= 0; --l) {
        const Displacement v0 = resample_displacement(res.v, Tp[l].n1(), Tp[l].n2());
        res = register_images(Tp[l], Rp[l], p, v0, opts);
    }
    return res;
}

} // namespace mvmorph
