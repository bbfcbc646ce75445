// Python bindings: laws as float64 arrays of shape (atoms, nodes, modes).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "mflab/analysis.hpp"
#include "mflab/commands.hpp"
#include "mflab/config.hpp"
#include "mflab/error.hpp"
#include "mflab/io.hpp"
#include "mflab/noise.hpp"
#include "mflab/sim.hpp"
#include "mflab/spectral.hpp"

namespace py = pybind11;
using namespace mflab;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<double> to_array(const EmpiricalLaw& law) {
  const std::size_t n = law.size(), nodes = law.grid().nodes(), K = law.modes();
  py::array_t<double> out({n, nodes, K});
  double* dst = out.mutable_data();
  for (const auto& a : law.atoms()) dst = std::copy(a.data().begin(), a.data().end(), dst);
  return out;
}

EmpiricalLaw from_array(const Array& a, double T, std::optional<std::vector<double>> weights) {
  if (a.ndim() != 3) throw Error(ErrorKind::DimensionMismatch, "law array must have shape (atoms, nodes, modes)");
  const auto n = static_cast<std::size_t>(a.shape(0));
  const auto nodes = static_cast<std::size_t>(a.shape(1));
  const auto K = static_cast<std::size_t>(a.shape(2));
  if (nodes < 2) throw Error(ErrorKind::DimensionMismatch, "law array needs at least two time nodes");
  const TimeGrid grid(T, nodes - 1);
  std::vector<PathSample> atoms;
  atoms.reserve(n);
  const double* src = a.data();
  for (std::size_t i = 0; i < n; ++i, src += nodes * K) {
    atoms.emplace_back(grid, K, std::vector<double>(src, src + nodes * K));
  }
  if (weights) return EmpiricalLaw(std::move(atoms), std::move(*weights));
  return EmpiricalLaw(std::move(atoms));
}

py::dict report_dict(const ConditionReport& r) {
  py::dict d;
  d["verdict"] = std::string(to_string(r.verdict));
  d["witness"] = r.witness ? py::cast(*r.witness) : py::none();
  d["statistic"] = r.statistic;
  d["partial_sum"] = r.partial_sum;
  d["tail_bound"] = r.tail_bound;
  d["detail"] = r.detail;
  return d;
}

py::object study_dict(ConvergenceStudy s, const ExperimentConfig& cfg) {
  s.config_hash = cfg.hash;
  return py::module_::import("json").attr("loads")(study_to_json(s).dump());
}

std::vector<std::size_t> ns_or_default(const std::optional<std::vector<std::size_t>>& ns,
                                       const ExperimentConfig& cfg) {
  return ns ? *ns : cfg.study.ns;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mean-field SPDE control laboratory (compiled core)";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  m.def("run",
        [](const std::string& command, const std::string& config, std::optional<std::string> out,
           std::optional<std::uint64_t> seed, std::size_t threads, bool force) {
          RunOptions opt{config, seed, threads, out.value_or(""), force};
          std::ostringstream os, err;
          int code;
          {
            py::gil_scoped_release release;
            code = run_command(command, opt, os, err);
          }
          return py::make_tuple(code, os.str(), err.str());
        },
        py::arg("command"), py::arg("config"), py::arg("out") = py::none(),
        py::arg("seed") = py::none(), py::arg("threads") = 1, py::arg("force") = false,
        "Run a subcommand; returns (exit_code, stdout, stderr).");
  m.def("commands", &command_names);

  py::class_<ExperimentConfig>(m, "Config")
      .def_readonly("hash", &ExperimentConfig::hash)
      .def_readonly("lambdas", &ExperimentConfig::lambdas)
      .def_readonly("x0", &ExperimentConfig::x0)
      .def_readonly("n", &ExperimentConfig::n)
      .def_readonly("sections", &ExperimentConfig::sections)
      .def_property_readonly("model", [](const ExperimentConfig& c) { return std::string(c.model->type()); })
      .def_property_readonly("seed", [](const ExperimentConfig& c) { return c.sim.seed; })
      .def_property_readonly("steps", [](const ExperimentConfig& c) { return c.sim.grid.steps(); })
      .def_property_readonly("T", [](const ExperimentConfig& c) { return c.constants.T; })
      .def_property_readonly("controls", [](const ExperimentConfig& c) {
        std::vector<std::string> out;
        for (const auto& f : c.controls) out.push_back(f.describe());
        return out;
      });
  m.def("load_config", &load_config, py::arg("path"), py::arg("seed") = py::none());
  m.def("parse_config", &parse_config_text, py::arg("text"), py::arg("seed") = py::none());

  m.def("constants_violation", &constants_violation, py::arg("alpha"), py::arg("p"), py::arg("q"),
        py::arg("rho"), py::arg("T"),
        "Name of the first violated constraint, or None when admissible.");
  m.def("summation_condition",
        [](std::vector<double> lambdas, std::vector<double> c, double alpha, double p, double q,
           double rho, double T) {
          return report_dict(summation_condition(
              SpectralSpace(std::move(lambdas), std::move(c), validate_constants(alpha, p, q, rho, T))));
        },
        py::arg("lambdas"), py::arg("c"), py::arg("alpha"), py::arg("p"), py::arg("q"),
        py::arg("rho"), py::arg("T"));

  m.def("wasserstein",
        [](const Array& a, const Array& b, double p, double T,
           std::optional<std::vector<double>> wa, std::optional<std::vector<double>> wb,
           std::size_t cap) {
          return wasserstein_paths(from_array(a, T, std::move(wa)), from_array(b, T, std::move(wb)), p, cap);
        },
        py::arg("a"), py::arg("b"), py::arg("p") = 2.0, py::arg("T") = 1.0,
        py::arg("weights_a") = py::none(), py::arg("weights_b") = py::none(),
        py::arg("cap") = kDefaultOtCap,
        "Exact p-Wasserstein distance between path laws with sup-norm ground cost.");

  m.def("philox", &philox4x32_10, py::arg("counter"), py::arg("key"));

  m.def("simulate",
        [](const ExperimentConfig& c, std::optional<std::size_t> n, std::uint32_t replication) {
          py::gil_scoped_release release;
          return simulate_particles(c.dynamics(), c.control(), c.x0, n.value_or(c.n), c.sim, replication).paths;
        },
        py::arg("config"), py::arg("n") = py::none(), py::arg("replication") = 0);
  m.def("law_array", &to_array, py::arg("law"));
  py::class_<EmpiricalLaw>(m, "EmpiricalLaw")
      .def("__len__", &EmpiricalLaw::size)
      .def_property_readonly("weights", &EmpiricalLaw::weights)
      .def("array", &to_array);

  m.def("solve_mkv",
        [](const ExperimentConfig& c) {
          MkvResult r;
          {
            py::gil_scoped_release release;
            r = solve_mkv(c.dynamics(), c.control(), c.x0, c.sim);
          }
          py::dict d;
          d["law"] = to_array(r.law);
          d["trace"] = r.trace;
          d["iterations"] = r.iterations;
          return d;
        },
        py::arg("config"));

  m.def("poc_study",
        [](const ExperimentConfig& c, std::optional<std::vector<std::size_t>> ns) {
          PocOptions opt;
          opt.q = c.study.q;
          opt.shared_draw = c.study.shared_draw;
          ConvergenceStudy s;
          {
            py::gil_scoped_release release;
            s = poc_study(c.dynamics(), c.control(), c.x0, ns_or_default(ns, c), c.sim, opt);
          }
          return study_dict(std::move(s), c);
        },
        py::arg("config"), py::arg("ns") = py::none());
  m.def("hausdorff_study",
        [](const ExperimentConfig& c, std::optional<std::vector<std::size_t>> ns) {
          HausdorffOptions opt;
          opt.q = c.study.q;
          opt.identical_sets = c.study.identical_sets;
          ConvergenceStudy s;
          {
            py::gil_scoped_release release;
            s = hausdorff_study(c.dynamics(), c.family(), c.x0, ns_or_default(ns, c), c.sim, opt);
          }
          return study_dict(std::move(s), c);
        },
        py::arg("config"), py::arg("ns") = py::none());
  m.def("value_estimate",
        [](const ExperimentConfig& c, std::optional<std::size_t> n) {
          if (!c.psi) throw Error(ErrorKind::ConfigError, "config has no [psi] section");
          ValueReport r;
          {
            py::gil_scoped_release release;
            r = value_estimate(ValueProblem{*c.model, c.lambdas, c.x0, n.value_or(c.n), *c.psi},
                               c.family(), c.sim);
          }
          py::dict d;
          std::vector<double> est, se;
          for (const auto& e : r.estimates) {
            est.push_back(e.value);
            se.push_back(e.std_error);
          }
          d["estimates"] = est;
          d["std_errors"] = se;
          d["argmax"] = r.argmax;
          d["sup"] = r.sup;
          return d;
        },
        py::arg("config"), py::arg("n") = py::none(),
        "Value of every family member; n = 0 selects the mean-field value.");
}
