// module.cpp - Python bindings (mvmorph._core).

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mvmorph/errors.hpp"
#include "mvmorph/io.hpp"
#include "mvmorph/morph.hpp"
#include "mvmorph/registration.hpp"
#include "mvmorph/sequence.hpp"
#include "mvmorph/synthetic.hpp"

namespace py = pybind11;
using namespace mvmorph;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

MvImage image_from_array(const Manifold &m, const Array &a) {
    if (a.ndim() != 3) throw InvalidArgument("expected an array of shape (n1, n2, dof)");
    if (a.shape(2) != m.point_dim()) {
        throw InvalidArgument("last axis has length " + std::to_string(a.shape(2)) + ", " + m.name() + " needs " +
                              std::to_string(m.point_dim()));
    }
    MvImage img(m, static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), img.data().begin());
    img.validate(1e-8);
    return img;
}

Array image_to_array(const MvImage &img) {
    Array a({img.n1(), img.n2(), img.dof()});
    std::copy(img.data().begin(), img.data().end(), a.mutable_data());
    return a;
}

py::dict ledger_row(const EnergyRecord &r) {
    py::dict d;
    d["level"] = r.level;
    d["sweep"] = r.sweep;
    d["phase"] = r.phase;
    d["J_total"] = r.total;
    d["J_reg"] = r.regularizer;
    d["J_data"] = r.data;
    d["min_det"] = r.min_det;
    d["floored"] = r.floored;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "Morphing of manifold-valued images";

    py::register_exception<InvalidArgument>(mod, "InvalidArgument", PyExc_ValueError);
    py::register_exception<ParseError>(mod, "ParseError", PyExc_ValueError);
    py::register_exception<DegenerateDeformation>(mod, "DegenerateDeformation", PyExc_RuntimeError);
    py::register_exception<CutLocusError>(mod, "CutLocusError", PyExc_ValueError);

    py::class_<Manifold>(mod, "Manifold")
        .def_static("euclidean", &Manifold::euclidean, py::arg("d"))
        .def_static("circle", &Manifold::circle)
        .def_static("sphere", &Manifold::sphere, py::arg("d"))
        .def_static("spd", &Manifold::spd, py::arg("n"))
        .def_static("hsv", &Manifold::hsv, py::arg("hue_weight") = 1.0, py::arg("sv_weight") = 1.0)
        .def_static("cb", &Manifold::cb, py::arg("chroma_weight") = 1.0, py::arg("brightness_weight") = 1.0)
        .def_static("parse", &Manifold::parse)
        .def_property_readonly("name", &Manifold::name)
        .def_property_readonly("point_dim", &Manifold::point_dim)
        .def_property_readonly("dimension", &Manifold::dimension)
        .def("dist", &Manifold::dist)
        .def("exp", py::overload_cast<VecCRef, VecCRef>(&Manifold::exp, py::const_))
        .def("log", &Manifold::log)
        .def("geopoint", &Manifold::geopoint)
        .def("inner", py::overload_cast<VecCRef, VecCRef, VecCRef>(&Manifold::inner, py::const_))
        .def("contains", &Manifold::contains, py::arg("p"), py::arg("tol") = 1e-10)
        .def(
            "karcher_mean",
            [](const Manifold &m, const Eigen::MatrixXd &points, const Eigen::VectorXd &weights) {
                // Rows are points on the Python side.
                return m.karcher_mean(points.transpose(), weights);
            },
            py::arg("points"), py::arg("weights"))
        .def("__eq__", &Manifold::operator==)
        .def("__repr__", [](const Manifold &m) { return "Manifold(" + m.name() + ")"; });

    mod.def(
        "register",
        [](const Manifold &m, const Array &T, const Array &R, double alpha, double eta) {
            const MvImage t = image_from_array(m, T), r = image_from_array(m, R);
            const RegistrationResult res = register_images(t, r, RegularizerParams::from_alpha(alpha, eta, 3));
            py::list trace;
            for (const auto &e : res.energy_trace) trace.append(e.total);
            py::dict d;
            d["v1"] = res.v.v1;
            d["v2"] = res.v.v2;
            const VectorField pv = apply_P(res.v);
            d["u1"] = pv.x1;
            d["u2"] = pv.x2;
            d["energy"] = trace;
            d["converged"] = res.converged;
            d["iterations"] = res.iterations;
            return d;
        },
        py::arg("manifold"), py::arg("template"), py::arg("reference"), py::arg("alpha") = 0.005,
        py::arg("eta") = 0.0,
        "Registers template to reference. Returns the staggered displacement (v1, v2), its node "
        "average (u1, u2) and the energy trace.");

    mod.def(
        "optimal_images",
        [](const Manifold &m, const Array &T, const Array &R, const std::vector<Eigen::MatrixXd> &u1,
           const std::vector<Eigen::MatrixXd> &u2) {
            if (u1.size() != u2.size() || u1.empty()) throw InvalidArgument("need matching, nonempty u1 and u2 lists");
            const MvImage t = image_from_array(m, T), r = image_from_array(m, R);
            DeformationSequence seq;
            for (std::size_t k = 0; k < u1.size(); ++k) {
                VectorField u(t.n1(), t.n2());
                if (u1[k].rows() != t.n1() || u1[k].cols() != t.n2() || u2[k].rows() != t.n1() || u2[k].cols() != t.n2())
                    throw InvalidArgument("displacement shape mismatch");
                u.x1 = u1[k];
                u.x2 = u2[k];
                seq.phis.push_back(deformation_from(u));
            }
            const SequenceResult res = optimal_images(t, r, seq);
            py::list out;
            for (const auto &img : res.images) out.append(image_to_array(img));
            return out;
        },
        py::arg("manifold"), py::arg("template"), py::arg("reference"), py::arg("u1"), py::arg("u2"),
        "Optimal intermediate images I_1..I_{K-1} for node displacements u_k (phi_k = id - u_k).");

    mod.def(
        "morph",
        [](const Manifold &m, const Array &T, const Array &R, int frames, double alpha, double eta, int levels,
           double scale_factor, std::vector<int> inserts, int sweeps, bool parallel) {
            MorphConfig cfg;
            cfg.K = frames;
            cfg.alpha = alpha;
            cfg.eta = eta;
            cfg.levels = levels;
            cfg.scale_factor = scale_factor;
            cfg.inserts = std::move(inserts);
            cfg.sweeps_per_level = sweeps;
            cfg.parallel = parallel;
            const MvImage t = image_from_array(m, T), r = image_from_array(m, R);
            MorphState s;
            {
                py::gil_scoped_release release;
                s = multiscale(t, r, cfg);
            }
            py::list imgs, ledger;
            for (const auto &img : s.images) imgs.append(image_to_array(img));
            for (const auto &row : s.ledger) ledger.append(ledger_row(row));
            py::dict d;
            d["frames"] = imgs;
            d["ledger"] = ledger;
            d["aborted"] = s.aborted;
            d["message"] = s.message;
            return d;
        },
        py::arg("manifold"), py::arg("template"), py::arg("reference"), py::arg("frames") = 0,
        py::arg("alpha") = 0.005, py::arg("eta") = 0.0, py::arg("levels") = 0, py::arg("scale_factor") = 0.5,
        py::arg("inserts") = std::vector<int>{}, py::arg("sweeps") = 3, py::arg("parallel") = true,
        "Coarse-to-fine morph; returns the K + 1 frames and the energy ledger.");

    mod.def(
        "read_mvr",
        [](const std::filesystem::path &p) {
            const MvImage img = read_mvr(p);
            return py::make_tuple(img.manifold(), image_to_array(img));
        },
        py::arg("path"), "Returns (manifold, array of shape (n1, n2, dof)).");
    mod.def(
        "write_mvr",
        [](const std::filesystem::path &p, const Manifold &m, const Array &a) { write_mvr(p, image_from_array(m, a)); },
        py::arg("path"), py::arg("manifold"), py::arg("image"));

    mod.def(
        "synthetic_pair",
        [](const std::string &name, int size, double amplitude) {
            ImagePair p;
            if (name == "blob") p = gaussian_blob_pair();
            else if (name == "rectangle") p = spd3_rectangle_pair();
            else if (name == "whirl") p = spd2_whirl_pair(size, amplitude);
            else throw InvalidArgument("unknown synthetic pair '" + name + "'");
            return py::make_tuple(p.T.manifold(), image_to_array(p.T), image_to_array(p.R));
        },
        py::arg("name"), py::arg("size") = 64, py::arg("amplitude") = 1.2,
        "Returns (manifold, T, R) for 'blob', 'rectangle' or 'whirl'.");
}
