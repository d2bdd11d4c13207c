#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "scb/safety.hpp"
#include "scb/scenario.hpp"
#include "scb/simulation.hpp"

namespace py = pybind11;
using namespace scb;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

AugmentedState augmented(const Eigen::Ref<const Vector10d>& xh) { return AugmentedState::unpack(xh); }

SafetyFilter filter_for(const Scenario& s) {
  return SafetyFilter(s.constraints, s.cbf, s.env, s.vehicle, s.gains.lag_rate);
}

py::dict composite_dict(const CompositeCbf& c) {
  py::dict d;
  d["h"] = c.h;
  d["components"] = c.components;
  d["weights"] = c.weights;
  d["dh_dx"] = Vector7d(c.dh_dx);
  d["dh_du"] = Eigen::Vector3d(c.dh_du);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Safe small-body landing: scenarios, closed-loop runs and the safety filter";

  py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);
  py::register_exception<FilterInfeasible>(m, "FilterInfeasible", PyExc_RuntimeError);
  py::register_exception<ApexGuardTripped>(m, "ApexGuardTripped", PyExc_RuntimeError);
  py::register_exception<GravityDomainError>(m, "GravityDomainError", PyExc_ValueError);

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("name", &Scenario::name)
      .def_readwrite("r0", &Scenario::r0)
      .def_readwrite("v0", &Scenario::v0)
      .def_property_readonly("r_f", [](const Scenario& s) { return s.constraints.r_f; })
      .def_property_readonly("v_f", [](const Scenario& s) { return s.constraints.v_f; })
      .def_property_readonly("omega", [](const Scenario& s) { return s.env.omega; })
      .def_property_readonly("thrust_bounds",
                             [](const Scenario& s) { return std::pair(s.vehicle.thrust_min, s.vehicle.thrust_max); })
      .def_property_readonly("wet_mass", [](const Scenario& s) { return s.vehicle.wet_mass; })
      .def_property_readonly("lag_rate", [](const Scenario& s) { return s.gains.lag_rate; })
      .def_property_readonly("gamma", [](const Scenario& s) { return s.cbf.gamma; })
      .def_property_readonly("rho", [](const Scenario& s) { return s.cbf.rho; })
      .def_property_readonly("source", [](const Scenario& s) { return to_python(s.source); })
      .def("truth_gravity", [](const Scenario& s, const Eigen::Vector3d& r) { return s.env.truth().gradient(r); })
      .def("nominal_gravity", [](const Scenario& s, const Eigen::Vector3d& r) { return s.env.nominal().gradient(r); })
      .def("disturbance", [](const Scenario& s, const Eigen::Vector3d& r) { return s.env.gravity.disturbance(r); })
      .def("reference", [](const Scenario& s, double t) {
        const ReferenceSample rs = s.build_reference().sample(t);
        py::dict d;
        d["r"] = rs.r;
        d["v"] = rs.v;
        d["m"] = rs.m;
        d["u"] = rs.u;
        return d;
      });

  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def(
      "scenario_from_json",
      [](const std::string& text, const std::filesystem::path& base_dir) {
        return scenario_from_json(nlohmann::json::parse(text, nullptr, true, true), base_dir);
      },
      py::arg("text"), py::arg("base_dir") = std::filesystem::path{});

  m.def(
      "run",
      [](const Scenario& s, std::optional<std::string> control, std::optional<double> t_max) {
        RunOptions opts;
        if (control) opts.control = parse_control_mode(*control);
        opts.t_max = t_max;
        RunOutput out;
        {
          py::gil_scoped_release release;
          out = run(s, opts);
        }
        const auto& rows = out.telemetry.rows;
        const auto n_cols = static_cast<py::ssize_t>(out.telemetry.columns.size());
        py::array_t<double> table({static_cast<py::ssize_t>(rows.size()), n_cols});
        auto view = table.mutable_unchecked<2>();
        for (py::ssize_t i = 0; i < view.shape(0); ++i) {
          for (py::ssize_t k = 0; k < n_cols; ++k) view(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        }
        nlohmann::json metrics = out.result;
        py::dict d;
        d["result"] = to_python(metrics);
        d["exit_code"] = exit_code(out.result);
        d["columns"] = out.telemetry.columns;
        d["telemetry"] = table;
        return d;
      },
      py::arg("scenario"), py::arg("control") = py::none(), py::arg("t_max") = py::none());

  m.def(
      "softmin", [](const std::vector<double>& z, double rho) { return softmin(z, rho); }, py::arg("values"),
      py::arg("rho"));

  m.def(
      "composite",
      [](const Scenario& s, const Eigen::Ref<const Vector10d>& xh, const Eigen::Vector3d& w_hat) {
        return composite_dict(filter_for(s).composite(augmented(xh), w_hat));
      },
      py::arg("scenario"), py::arg("xh"), py::arg("w_hat") = Eigen::Vector3d::Zero().eval());

  m.def(
      "relaxed_constraint_b",
      [](const Scenario& s, const Eigen::Ref<const Vector10d>& xh, const Eigen::Vector3d& w_hat,
         const Eigen::Vector3d& zeta, double kappa) {
        return filter_for(s).relaxed_constraint_b(augmented(xh), w_hat, zeta, kappa);
      },
      py::arg("scenario"), py::arg("xh"), py::arg("w_hat"), py::arg("zeta"), py::arg("kappa"));

  m.def(
      "filter",
      [](const Scenario& s, const Eigen::Ref<const Vector10d>& xh, const Eigen::Vector3d& w_hat,
         const Eigen::Vector3d& zeta_d) {
        const FilterDecision fd = filter_for(s).filter(augmented(xh), w_hat, zeta_d);
        py::dict d;
        d["zeta"] = fd.zeta_star;
        d["kappa"] = fd.kappa_star;
        d["lambda"] = fd.lambda;
        d["phi"] = fd.phi;
        d["h"] = fd.h;
        d["active"] = fd.active;
        d["cbf"] = composite_dict(fd.cbf);
        return d;
      },
      py::arg("scenario"), py::arg("xh"), py::arg("w_hat"), py::arg("zeta_d"));
}
