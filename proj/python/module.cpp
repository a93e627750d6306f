#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "bb84sim/cascade.hpp"
#include "bb84sim/error.hpp"
#include "bb84sim/harness.hpp"
#include "bb84sim/quantum_core.hpp"
#include "bb84sim/weak_measurement.hpp"

namespace py = pybind11;
using namespace bb84sim;

namespace {

py::dict detector_dict(const DetectorDistribution& dist) {
    py::dict d;
    for (DetectorId id : kDetectorOrder) d[py::str(std::string(to_string(id)))] = dist[id];
    return d;
}

py::list branch_list(const BranchState& state) {
    py::list out;
    for (const Branch& b : state.branches()) {
        std::string history;
        for (std::size_t i = 0; i < b.history.size(); ++i) history += to_string(b.history[i]);
        out.append(py::make_tuple(b.pol == PolLabel::H ? "H" : "V", history, b.amp));
    }
    return out;
}

py::dict stats_dict(const SessionStats& s) {
    py::dict d;
    d["n_pulses"] = s.n_pulses;
    d["n_sifted"] = s.n_sifted;
    d["qber"] = s.qber;
    d["eve_accuracy"] = s.eve_accuracy;
    d["qber_rectilinear"] = s.qber_by_basis[0];
    d["qber_diagonal"] = s.qber_by_basis[1];
    d["empty_session"] = s.empty_session();
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Cascade, weak-measurement and BB84 session simulation";
    m.attr("__version__") = "0.1.0";

    py::register_exception<Error>(m, "Error", PyExc_ValueError);

    py::enum_<Bb84Symbol>(m, "Symbol")
        .value("H", Bb84Symbol::H)
        .value("V", Bb84Symbol::V)
        .value("D", Bb84Symbol::D)
        .value("A", Bb84Symbol::A);
    py::enum_<Basis>(m, "Basis")
        .value("Rectilinear", Basis::Rectilinear)
        .value("Diagonal", Basis::Diagonal);
    py::enum_<DetectorId>(m, "Detector")
        .value("OuterH", DetectorId::OuterH)
        .value("OuterV", DetectorId::OuterV)
        .value("InnerD", DetectorId::InnerD)
        .value("InnerA", DetectorId::InnerA);

    py::class_<PolarizationState>(m, "PolarizationState")
        .def(py::init<ComplexAmp, ComplexAmp>(), py::arg("alpha"), py::arg("beta"))
        .def_property_readonly("alpha", &PolarizationState::alpha)
        .def_property_readonly("beta", &PolarizationState::beta)
        .def("norm_sq", &PolarizationState::norm_sq)
        .def("__repr__", [](const PolarizationState& s) {
            return "PolarizationState(" + std::to_string(s.alpha().real()) + "+" +
                   std::to_string(s.alpha().imag()) + "j, " + std::to_string(s.beta().real()) +
                   "+" + std::to_string(s.beta().imag()) + "j)";
        });

    m.def("make_bb84_state", &make_bb84_state, py::arg("symbol"));
    m.def(
        "measure_polarization",
        [](const PolarizationState& s, Basis b, double rand) {
            const Measurement r = measure_polarization(s, b, rand);
            return py::make_tuple(r.outcome, r.collapsed);
        },
        py::arg("state"), py::arg("basis"), py::arg("rand"));
    m.def("fidelity", &fidelity, py::arg("a"), py::arg("b"));
    m.def(
        "renormalize", [](ComplexAmp a, ComplexAmp b) { return renormalize(a, b); },
        py::arg("alpha"), py::arg("beta"));

    m.def(
        "propagate_cascade",
        [](const PolarizationState& s) {
            const CascadeResult r = propagate_cascade(s);
            return py::make_tuple(branch_list(r.final), detector_dict(r.dist));
        },
        py::arg("state"),
        "Returns (branches, probabilities); branches are (pol, history, amplitude).");
    m.def("khokhlov_predicted_detector", &khokhlov_predicted_detector, py::arg("symbol"));

    m.def(
        "pointer_amplitude",
        [](double mean, double sigma, double p) {
            return pointer_amplitude(GaussianPointer(mean, sigma), p);
        },
        py::arg("mean"), py::arg("sigma"), py::arg("p"));
    m.def(
        "momentum_pdf",
        [](const PolarizationState& s, double sigma, double p) {
            return momentum_pdf(couple(s, sigma), p);
        },
        py::arg("state"), py::arg("sigma"), py::arg("p"));
    m.def(
        "readout_collapse",
        [](const PolarizationState& s, double sigma, double p0) {
            const ReadoutResult r = readout_collapse(couple(s, sigma), p0);
            return py::make_tuple(r.collapsed, r.guess == PolLabel::H ? "H" : "V");
        },
        py::arg("state"), py::arg("sigma"), py::arg("p0"));
    m.def("info_gain", &info_gain, py::arg("sigma"));
    m.def("avg_fidelity", &avg_fidelity, py::arg("state"), py::arg("sigma"),
          py::arg("quadrature_points") = 2000);
    m.def(
        "tradeoff_curve",
        [](const std::vector<double>& grid, std::size_t points) {
            py::list rows;
            for (const TradeoffRow& r : tradeoff_curve(grid, points)) {
                rows.append(py::make_tuple(r.sigma, r.info_gain, r.avg_fidelity_d));
            }
            return rows;
        },
        py::arg("sigma_grid"), py::arg("quadrature_points") = 2000);

    m.def(
        "run_session",
        [](std::size_t pulses, const std::string& eve, std::optional<double> sigma,
           std::uint64_t seed, unsigned threads) {
            SessionResult r;
            {
                py::gil_scoped_release release;
                r = run_session({pulses, EveStrategy::parse(eve, sigma), seed, Fault::None},
                                RunOptions{threads});
            }
            return stats_dict(r.stats);
        },
        py::arg("pulses"), py::arg("eve"), py::arg("sigma") = py::none(), py::arg("seed") = 0,
        py::arg("threads") = 0);
    m.def(
        "enumerate_exact",
        [](const std::string& eve, std::optional<double> sigma) {
            const ExactResult r = enumerate_exact(EveStrategy::parse(eve, sigma));
            py::dict d;
            d["qber"] = r.qber;
            d["eve_accuracy"] = r.eve_accuracy;
            d["qber_rectilinear"] = r.qber_by_basis[0];
            d["qber_diagonal"] = r.qber_by_basis[1];
            return d;
        },
        py::arg("eve"), py::arg("sigma") = py::none());
}
