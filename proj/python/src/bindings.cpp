#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "eqd/errors.hpp"
#include "eqd/fibers.hpp"
#include "eqd/measure.hpp"
#include "eqd/stats.hpp"
#include "eqd/transfer.hpp"
#include "eqd/version.hpp"

namespace py = pybind11;
using namespace eqd;

namespace {

using CArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;

ProjPoint to_point(const std::vector<cplx>& coords) { return ProjPoint::normalize(std::span<const cplx>(coords)); }

CArray points_array(const std::vector<ProjPoint>& pts, int dim) {
    CArray out({static_cast<py::ssize_t>(pts.size()), static_cast<py::ssize_t>(dim + 1)});
    auto a = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (int j = 0; j <= dim; ++j) a(static_cast<py::ssize_t>(i), j) = pts[i][j];
    return out;
}

std::vector<ProjPoint> points_from(const CArray& arr) {
    if (arr.ndim() != 2 || arr.shape(1) < 2 || arr.shape(1) > 3)
        throw DimMismatch("expected an (N, 2) or (N, 3) complex array");
    auto a = arr.unchecked<2>();
    std::vector<ProjPoint> pts;
    pts.reserve(static_cast<std::size_t>(a.shape(0)));
    for (py::ssize_t i = 0; i < a.shape(0); ++i) {
        std::vector<cplx> c(static_cast<std::size_t>(a.shape(1)));
        for (py::ssize_t j = 0; j < a.shape(1); ++j) c[static_cast<std::size_t>(j)] = a(i, j);
        pts.push_back(to_point(c));
    }
    return pts;
}

Observable as_observable(const py::object& o) {
    if (py::isinstance<py::str>(o)) return Observable::parse(o.cast<std::string>());
    return o.cast<Observable>();
}

std::vector<py::dict> entries_dicts(const std::vector<CorrelationEntry>& es) {
    std::vector<py::dict> out;
    for (const auto& e : es) out.push_back(py::dict(py::arg("n") = e.n, py::arg("corr") = e.corr, py::arg("std_err") = e.std_err));
    return out;
}

}  // namespace

PYBIND11_MODULE(_eqd, m) {
    m.doc() = "Equidistribution and statistics of holomorphic maps on P^1 and P^2";
    m.attr("__version__") = EQD_VERSION;

    auto base = py::register_exception<Error>(m, "EqdError", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<DimMismatch>(m, "DimMismatch", base.ptr());
    py::register_exception<InvalidMap>(m, "InvalidMap", base.ptr());
    py::register_exception<HypothesisViolated>(m, "HypothesisViolated", base.ptr());
    py::register_exception<TreeTooLarge>(m, "TreeTooLarge", base.ptr());
    py::register_exception<BudgetExceeded>(m, "BudgetExceeded", base.ptr());
    py::register_exception<IndeterminacyPoint>(m, "IndeterminacyPoint", base.ptr());
    py::register_exception<NormUnavailable>(m, "NormUnavailable", base.ptr());

    py::class_<DynMap>(m, "DynMap")
        .def_static("parse", &DynMap::parse, py::arg("spec"))
        .def_static("monomial", [](long a, long b, long c, long d) { return DynMap::monomial2d({{{a, b}, {c, d}}}); })
        .def_property_readonly("dim", &DynMap::dim)
        .def_property_readonly("degree", &DynMap::degree)
        .def_property_readonly("family", [](const DynMap& f) { return to_string(f.family()); })
        .def_property_readonly("spec", &DynMap::spec)
        .def_property_readonly("hash", &DynMap::hash)
        .def("__call__", [](const DynMap& f, const std::vector<cplx>& z) {
            const auto p = evaluate(f, to_point(z));
            return std::vector<cplx>(p.coords().begin(), p.coords().end());
        })
        .def("__repr__", [](const DynMap& f) { return "DynMap('" + f.spec() + "')"; });

    m.def("degrees", [](const DynMap& f) {
        const auto r = degrees(f);
        return py::dict(py::arg("d_t") = r.d_t, py::arg("d_list") = r.d_list, py::arg("delta_base") = r.delta_base,
                        py::arg("delta_is_leading_order") = r.delta_is_leading_order,
                        py::arg("hypothesis_margin") = r.hypothesis_margin);
    });
    m.def("check_hypothesis", &check_hypothesis);

    m.def("fiber", [](const DynMap& f, const std::vector<cplx>& z) {
        const auto fb = fiber(f, to_point(z));
        py::list pts;
        for (const auto& p : fb.points)
            pts.append(py::dict(py::arg("point") = std::vector<cplx>(p.point.coords().begin(), p.point.coords().end()),
                                py::arg("multiplicity") = p.multiplicity, py::arg("residual") = p.residual));
        return py::dict(py::arg("points") = pts, py::arg("flagged") = fb.flagged);
    });

    py::class_<Observable>(m, "Observable")
        .def_static("parse", &Observable::parse, py::arg("spec"))
        .def_property_readonly("spec", &Observable::spec)
        .def_property_readonly("kind", [](const Observable& o) { return to_string(o.kind()); })
        .def("__call__", [](const Observable& o, const std::vector<cplx>& z) { return o(to_point(z)); })
        .def("values", [](const Observable& o, const CArray& pts) {
            std::vector<double> v;
            for (const auto& p : points_from(pts)) v.push_back(o(p));
            return v;
        })
        .def("centered", [](const Observable& o, double c) { return centered(o, c); })
        .def("coboundary", [](const Observable& o, const DynMap& f) { return coboundary(f, o); })
        .def("__repr__", [](const Observable& o) { return "Observable('" + o.spec() + "')"; });

    m.def("star_norm", [](const py::object& phi, std::size_t grid_n) { return star_norm_p1(as_observable(phi), grid_n); },
          py::arg("phi"), py::arg("grid_n") = 40000);

    py::class_<SampleSet>(m, "SampleSet")
        .def_readonly("dim", &SampleSet::dim)
        .def_readonly("uniform", &SampleSet::uniform)
        .def_readonly("dropped", &SampleSet::dropped)
        .def_readonly("weights", &SampleSet::weights)
        .def_property_readonly("points", [](const SampleSet& s) { return points_array(s.points, s.dim); })
        .def_property_readonly("method", [](const SampleSet& s) { return to_string(s.provenance.method); })
        .def("__len__", &SampleSet::size)
        .def("to_text", &format_sample_set)
        .def_static("from_text", &parse_sample_set);

    m.def("pullback_tree", [](const DynMap& f, const std::vector<cplx>& a, int n) { return pullback_tree(f, to_point(a), n); },
          py::arg("map"), py::arg("a"), py::arg("n"));
    m.def(
        "sample",
        [](const DynMap& f, const std::vector<cplx>& a, int burn_in, std::size_t N, std::uint64_t seed, unsigned workers) {
            py::gil_scoped_release nogil;
            return backward_orbit_sample(f, to_point(a), burn_in, N, Stream(seed, 1), workers);
        },
        py::arg("map"), py::arg("a"), py::arg("burn_in") = 40, py::arg("N") = 10000, py::arg("seed") = 0,
        py::arg("workers") = 0);

    m.def("integrate", [](const SampleSet& s, const py::object& phi) {
        const auto r = integrate(s, as_observable(phi));
        return py::dict(py::arg("mean") = r.mean, py::arg("std_err") = r.std_err, py::arg("dropped") = r.dropped,
                        py::arg("polar_warning") = r.polar_warning);
    });

    m.def(
        "decompose",
        [](const DynMap& f, const py::object& phi, int N, std::size_t nodes, std::uint64_t seed) {
            const auto o = as_observable(phi);
            py::gil_scoped_release nogil;
            return decompose(f, o, N, nodes, Stream(seed, 5));
        },
        py::arg("map"), py::arg("phi"), py::arg("N") = 8, py::arg("nodes") = 10000, py::arg("seed") = 0);
    py::class_<DecompositionTrace>(m, "DecompositionTrace")
        .def_readonly("c", &DecompositionTrace::c)
        .def_readonly("b", &DecompositionTrace::b)
        .def_readonly("std_err", &DecompositionTrace::std_err)
        .def_readonly("phi_tail_l2", &DecompositionTrace::phi_tail_l2)
        .def_readonly("phi_tail_sup", &DecompositionTrace::phi_tail_sup)
        .def_readonly("c_phi", &DecompositionTrace::c_phi)
        .def_readonly("c_phi_std_err", &DecompositionTrace::c_phi_std_err)
        .def("to_csv", &DecompositionTrace::to_csv);

    m.def(
        "correlation_series",
        [](const DynMap& f, const SampleSet& mu, const py::object& psi, const py::object& phi, int n_max) {
            const auto a = as_observable(psi), b = as_observable(phi);
            CorrelationSeries s;
            {
                py::gil_scoped_release nogil;
                s = correlation_series(f, mu, a, b, n_max);
            }
            return entries_dicts(s.entries);
        },
        py::arg("map"), py::arg("mu"), py::arg("psi"), py::arg("phi"), py::arg("n_max"));

    m.def(
        "decay_fit",
        [](const std::vector<py::dict>& entries, int n_lo, int n_hi) {
            std::vector<CorrelationEntry> es;
            for (const auto& d : entries)
                es.push_back({d["n"].cast<int>(), d["corr"].cast<double>(), d["std_err"].cast<double>()});
            const auto r = decay_fit(es, n_lo, n_hi);
            return py::dict(py::arg("rate") = r.rate, py::arg("ci_lo") = r.ci_lo, py::arg("ci_hi") = r.ci_hi,
                            py::arg("used") = r.used, py::arg("insufficient_signal") = r.insufficient_signal);
        },
        py::arg("entries"), py::arg("n_lo") = 0, py::arg("n_hi") = -1);

    m.def(
        "green_kubo",
        [](const DynMap& f, const SampleSet& mu, const py::object& phi, int n_max) {
            const auto o = as_observable(phi);
            GreenKubo g;
            {
                py::gil_scoped_release nogil;
                g = green_kubo_sigma2(f, mu, o, n_max);
            }
            return py::dict(py::arg("sigma2") = g.sigma2, py::arg("std_err") = g.std_err, py::arg("tail") = g.tail,
                            py::arg("phi_mean") = g.phi_mean);
        },
        py::arg("map"), py::arg("mu"), py::arg("phi"), py::arg("n_max") = 6);

    m.def(
        "clt",
        [](const DynMap& f, const SampleSet& mu, const py::object& phi, int n_block, int trajectories,
           std::uint64_t seed, std::optional<double> reference_sigma2) {
            const auto o = as_observable(phi);
            CltOptions opt;
            opt.reference_sigma2 = reference_sigma2;
            CltReport r;
            {
                py::gil_scoped_release nogil;
                r = birkhoff_clt(f, mu, o, n_block, trajectories, Stream(seed, 4), opt);
            }
            return py::dict(py::arg("sigma2_gk") = r.sigma2_gk, py::arg("sigma2_emp") = r.sigma2_emp,
                            py::arg("sigma2_emp_std_err") = r.sigma2_emp_std_err, py::arg("ks_stat") = r.ks_stat,
                            py::arg("ks_p") = r.ks_p, py::arg("degenerate") = r.degenerate,
                            py::arg("trajectory_stats") = r.trajectory_stats);
        },
        py::arg("map"), py::arg("mu"), py::arg("phi"), py::arg("n_block"), py::arg("trajectories"), py::arg("seed") = 0,
        py::arg("reference_sigma2") = py::none());
}
