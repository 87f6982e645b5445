#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "framescope/error.hpp"
#include "framescope/flow.hpp"
#include "framescope/generate.hpp"
#include "framescope/io.hpp"
#include "framescope/measure.hpp"
#include "framescope/potentials.hpp"
#include "framescope/transport.hpp"
#include "framescope/verify.hpp"

namespace py = pybind11;
using namespace framescope;

namespace {

py::dict check_to_dict(const CheckResult& r) {
  py::dict d;
  d["name"] = r.name;
  d["holds"] = r.holds;
  d["lhs"] = r.lhs;
  d["rhs"] = r.rhs;
  d["slack"] = r.slack;
  d["tolerance"] = r.tolerance;
  d["equality"] = r.equality;
  return d;
}

py::dict report_to_dict(const PotentialReport& r) {
  py::dict d;
  d["value"] = r.value;
  d["lower_bound"] = r.lower_bound;
  d["gap"] = r.gap;
  d["spectral_value"] = r.spectral_value ? py::cast(*r.spectral_value) : py::none();
  d["operator_norm"] = r.operator_norm ? py::cast(*r.operator_norm) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Probabilistic frames, frame potentials, Wasserstein transport and tightness flows.";

  static py::exception<Error> framescope_error(m, "FramescopeError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = framescope_error;
      PyErr_SetObject(exc.ptr(), py::make_tuple(to_string(e.code()), e.what()).ptr());
    }
  });

  py::class_<DiscreteMeasure>(m, "DiscreteMeasure")
      .def(py::init([](const Matrix& points, const Vector& weights) { return DiscreteMeasure::create(points, weights); }),
           py::arg("points"), py::arg("weights"))
      .def_property_readonly("points", &DiscreteMeasure::points)
      .def_property_readonly("weights", &DiscreteMeasure::weights)
      .def_property_readonly("dim", &DiscreteMeasure::dim)
      .def_property_readonly("size", &DiscreteMeasure::size)
      .def("transformed", &DiscreteMeasure::transformed, py::arg("q"))
      .def("dilated", &DiscreteMeasure::dilated, py::arg("c"))
      .def("to_json", [](const DiscreteMeasure& mu) { return measure_to_json(mu).dump(); })
      .def_static("from_json", [](const std::string& s) { return measure_from_json(json::parse(s)); })
      .def("__repr__", [](const DiscreteMeasure& mu) {
        return "DiscreteMeasure(N=" + std::to_string(mu.size()) + ", d=" + std::to_string(mu.dim()) + ")";
      });

  py::class_<FrameDiagnostics>(m, "FrameDiagnostics")
      .def_readonly("lower_bound", &FrameDiagnostics::lower_bound)
      .def_readonly("upper_bound", &FrameDiagnostics::upper_bound)
      .def_readonly("is_frame", &FrameDiagnostics::is_frame)
      .def_readonly("is_tight", &FrameDiagnostics::is_tight)
      .def_readonly("tightness_gap", &FrameDiagnostics::tightness_gap)
      .def_readonly("second_moment", &FrameDiagnostics::second_moment);

  m.def("moment", &moment, py::arg("mu"), py::arg("p"));
  m.def("frame_operator", [](const DiscreteMeasure& mu) { return frame_operator(mu).matrix(); }, py::arg("mu"));
  m.def("diagnostics", &diagnostics, py::arg("mu"), py::arg("frame_tol") = kDefaultFrameTol,
        py::arg("tight_tol") = kDefaultTightTol);

  m.def("pfp", &pfp, py::arg("mu"));
  m.def("fp", &fp, py::arg("frame"));
  m.def("tp", &tp_value, py::arg("mu"));
  m.def("tightness_potential", [](const DiscreteMeasure& mu) { return report_to_dict(tightness_potential(mu)); },
        py::arg("mu"));
  m.def("tightness_operator", [](const DiscreteMeasure& mu) { return tightness_operator(mu).matrix(); },
        py::arg("mu"));
  m.def("tp_gradient", [](const DiscreteMeasure& mu) { return tp_gradient(mu).euclidean(); }, py::arg("mu"),
        "Euclidean gradient of TP with respect to the atom positions (one row per atom).");
  m.def("pframe_potential", [](const DiscreteMeasure& mu, int p) { return report_to_dict(pframe_potential(mu, p)); },
        py::arg("mu"), py::arg("p"));
  m.def("cp_constant", &cp_constant, py::arg("d"), py::arg("p"));
  m.def("pframe_barycenter", &pframe_barycenter, py::arg("mu"), py::arg("z"), py::arg("p"));

  m.def(
      "wasserstein",
      [](const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, std::optional<double> reg) {
        TransportResult r;
        if (reg) {
          EntropicOptions options;
          options.reg = *reg;
          r = wasserstein_entropic(mu, nu, p, options);
        } else {
          r = wasserstein_exact(mu, nu, p);
        }
        return py::make_tuple(r.distance, r.plan.coupling);
      },
      py::arg("mu"), py::arg("nu"), py::arg("p") = 2.0, py::arg("reg") = py::none(),
      "Returns (distance, coupling). Pass reg for the entropic solver.");

  m.def(
      "generate",
      [](const std::string& kind, int d, int n, std::uint64_t seed, double magnitude, double eps) {
        static const std::map<std::string, GeneratorKind> kinds = {{"random-unit-norm", GeneratorKind::RandomUnitNorm},
                                                                   {"perturbed-onb", GeneratorKind::PerturbedOnb},
                                                                   {"paulsen", GeneratorKind::PaulsenInstance}};
        const auto it = kinds.find(kind);
        if (it == kinds.end()) throw Error(ErrorCode::InvalidArgument, "unknown generator " + kind);
        GeneratorSpec spec;
        spec.kind = it->second;
        spec.d = d;
        spec.n = n;
        spec.seed = seed;
        spec.magnitude = magnitude;
        spec.eps = eps;
        return generate(spec);
      },
      py::arg("kind"), py::arg("d"), py::arg("n"), py::arg("seed") = 0, py::arg("magnitude") = 0.1,
      py::arg("eps") = 0.1);

  py::class_<FlowTrajectory>(m, "FlowTrajectory")
      .def_readonly("steps", &FlowTrajectory::steps)
      .def_readonly("times", &FlowTrajectory::times)
      .def_readonly("tp", &FlowTrajectory::tp_values)
      .def_readonly("m2", &FlowTrajectory::m2_values)
      .def_readonly("w2_steps", &FlowTrajectory::w2_steps)
      .def_readonly("steps_taken", &FlowTrajectory::steps_taken)
      .def_property_readonly("termination", [](const FlowTrajectory& t) { return to_string(t.termination); })
      .def_property_readonly("final_state", &FlowTrajectory::final_state)
      .def("energy_holds", [](const FlowTrajectory& t, std::size_t a, std::size_t b) {
        return energy_report(t, a, b).holds;
      });

  m.def(
      "run_flow",
      [](const DiscreteMeasure& mu0, const std::string& config_json) {
        return run_flow(mu0, config_from_json(json::parse(config_json.empty() ? "{}" : config_json)));
      },
      py::arg("mu0"), py::arg("config") = "",
      "Run the explicit or JKO scheme; config is a JSON string with FlowConfig fields.");
  m.def("explicit_step", &explicit_step, py::arg("mu"), py::arg("dt"), py::arg("epsilon") = 0.0);

  m.def(
      "run_suite",
      [](const std::vector<std::string>& suites, int instances, std::uint64_t seed) {
        const SuiteOutcome out = run_suite(suites, instances, seed);
        py::list results;
        for (const auto& r : out.results) results.append(check_to_dict(r));
        return py::make_tuple(out.failures, results);
      },
      py::arg("suites") = std::vector<std::string>{"all"}, py::arg("instances") = 10, py::arg("seed") = 0);
  m.def("check_nearest_tight_bound", [](const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    return check_to_dict(check_nearest_tight_bound(mu, nu));
  });
}
