#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stealthlq/evaluate.hpp"
#include "stealthlq/multiround.hpp"

namespace py = pybind11;
using namespace stealthlq;

namespace {

// Opaque carriers so Python callers never re-solve by accident.
struct PyModel {
  SystemModel model;
};

struct PyGains {
  FilterGains filter;
  AgentGains agent;
};

struct PyAttack {
  AttackStrategy strategy;
  double adaptive_value = 0.0;
  double reflection_gap = 0.0;
};

Matrix grid_to_array(const GridFunction& g) {
  const int n = g.grid().n_nodes();
  Matrix out(n, g.rows() * g.cols());
  for (int k = 0; k < n; ++k) {
    out.row(k) = Eigen::Map<const Vector>(g.at_node(k).data(), g.rows() * g.cols());
  }
  return out;
}

GridFunction array_to_grid(const TimeGrid& grid, const Matrix& values, int rows) {
  if (values.rows() != grid.n_nodes() || values.cols() != rows) {
    throw ShapeError("expected an (n_nodes x dim) array on the model grid");
  }
  std::vector<Matrix> vals(static_cast<size_t>(grid.n_nodes()));
  for (int k = 0; k < grid.n_nodes(); ++k) {
    vals[static_cast<size_t>(k)] = values.row(k).transpose();
  }
  return GridFunction(grid, std::move(vals));
}

py::dict report_to_dict(const ObjectiveReport& r) {
  py::dict d;
  d["method"] = r.method;
  d["D"] = r.D;
  d["S"] = r.S;
  d["rho_energy"] = r.rho_energy;
  d["objective"] = r.objective;
  d["se_D"] = r.se_D;
  d["se_S"] = r.se_S;
  d["se_energy"] = r.se_energy;
  d["se_objective"] = r.se_objective;
  d["n_paths"] = r.n_paths;
  d["base_seed"] = r.base_seed;
  return d;
}

}  // namespace

PYBIND11_MODULE(stealthlq, m) {
  m.doc() = "Stealthy attack synthesis and evaluation for partially observed LQG systems";

  py::register_exception<Error>(m, "StealthlqError");

  py::class_<PyModel>(m, "Model")
      .def_property(
          "lam", [](const PyModel& pm) { return pm.model.lambda; },
          [](PyModel& pm, double v) { pm.model.lambda = v; })
      .def_property_readonly("d", [](const PyModel& pm) { return pm.model.d; })
      .def_property_readonly("m", [](const PyModel& pm) { return pm.model.m; })
      .def_property_readonly("T", [](const PyModel& pm) { return pm.model.horizon.T; })
      .def_property_readonly("n_steps",
                             [](const PyModel& pm) { return pm.model.horizon.n_steps; })
      .def("nodes",
           [](const PyModel& pm) {
             Vector t(pm.model.horizon.n_nodes());
             for (int k = 0; k < pm.model.horizon.n_nodes(); ++k) {
               t(k) = pm.model.horizon.node(k);
             }
             return t;
           })
      .def("to_json", [](const PyModel& pm) { return model_to_json(pm.model).dump(); })
      .def("__repr__", [](const PyModel& pm) {
        return "<stealthlq.Model d=" + std::to_string(pm.model.d) +
               " m=" + std::to_string(pm.model.m) +
               " lambda=" + std::to_string(pm.model.lambda) + ">";
      });

  py::class_<PyGains>(m, "Gains")
      .def_property_readonly("R", [](const PyGains& g) { return grid_to_array(g.filter.R); })
      .def_property_readonly("F", [](const PyGains& g) { return grid_to_array(g.agent.F); })
      .def_property_readonly("f",
                             [](const PyGains& g) { return grid_to_array(g.agent.f_vec); })
      .def_property_readonly("int_trace_QR",
                             [](const PyGains& g) { return g.filter.int_trace_QR; });

  py::class_<PyAttack>(m, "Attack")
      .def_property_readonly("kind",
                             [](const PyAttack& a) { return a.strategy.kind_name(); })
      .def_property_readonly("rho",
                             [](const PyAttack& a) {
                               return grid_to_array(a.strategy.rho_path);
                             })
      .def_property_readonly("tau",
                             [](const PyAttack& a) {
                               return grid_to_array(a.strategy.tau_path);
                             })
      .def_property_readonly("value", [](const PyAttack& a) { return a.adaptive_value; })
      .def_property_readonly("reflection_gap",
                             [](const PyAttack& a) { return a.reflection_gap; });

  m.def("preset_names", &preset_names);
  m.def("preset", [](const std::string& name) { return PyModel{preset(name).model}; });
  m.def("model_from_json", [](const std::string& text) {
    return PyModel{model_from_json(nlohmann::json::parse(text))};
  });
  m.def("validate", [](const PyModel& pm) { return validate(pm.model); });

  m.def("solve_gains", [](const PyModel& pm) {
    return PyGains{solve_filter(pm.model), solve_agent(pm.model)};
  });
  m.def("existence_bound", [](const PyModel& pm, const PyGains& g) {
    return existence_bound(pm.model, g.filter, g.agent);
  });

  m.def("zero_attack", [] { return PyAttack{AttackStrategy::zero()}; });
  m.def(
      "sinusoid_attack",
      [](double amplitude, double omega) {
        return PyAttack{AttackStrategy::sinusoid(amplitude, omega)};
      },
      py::arg("amplitude") = 1.0, py::arg("omega") = 8.0 * M_PI);
  m.def(
      "gaussian_attack",
      [](double std_rho, double std_tau, std::uint64_t seed_offset) {
        return PyAttack{AttackStrategy::gaussian_white(std_rho, std_tau, seed_offset)};
      },
      py::arg("std_rho") = 1.0, py::arg("std_tau") = 1.0, py::arg("seed_offset") = 0);
  m.def("deterministic_attack", [](const PyModel& pm, const Matrix& rho, const Matrix& tau) {
    return PyAttack{AttackStrategy::deterministic(
        array_to_grid(pm.model.horizon, rho, pm.model.d),
        array_to_grid(pm.model.horizon, tau, pm.model.m))};
  });

  m.def("build_optimal_det", [](const PyModel& pm, const PyGains& g) {
    const auto det = solve_det_attack(pm.model, g.filter, g.agent);
    auto [strategy, means] = build_optimal_det(pm.model, g.filter, g.agent, det);
    return PyAttack{std::move(strategy)};
  });
  m.def("build_optimal_adaptive", [](const PyModel& pm, const PyGains& g) {
    auto bundle = build_optimal_adaptive(pm.model, g.filter, g.agent);
    PyAttack out{std::move(bundle.strategy)};
    out.adaptive_value = adaptive_value(out.strategy.rho_gains,
                                        AdaptiveCoeffs(pm.model, g.filter, g.agent).phi0());
    out.reflection_gap = bundle.reflection_gap;
    return out;
  });

  m.def(
      "simulate_path",
      [](const PyModel& pm, const PyGains& g, const PyAttack& a, std::uint64_t seed,
         std::uint64_t path_index) {
        const auto b =
            simulate_path(pm.model, g.filter, g.agent, a.strategy, seed, path_index);
        py::dict d;
        d["Xc"] = b.Xc;
        d["Yc"] = b.Yc;
        d["Xhat_a"] = b.Xhat_a;
        d["Xhat_c"] = b.Xhat_c;
        d["dX"] = b.dX;
        d["Ia"] = b.Ia;
        d["ua"] = b.ua;
        d["rho"] = b.rho;
        d["tau"] = b.tau;
        d["log_likelihood"] = log_likelihood(b, pm.model);
        return d;
      },
      py::arg("model"), py::arg("gains"), py::arg("attack"), py::arg("seed") = 0,
      py::arg("path_index") = 0);

  m.def(
      "mc_objective",
      [](const PyModel& pm, const PyGains& g, const PyAttack& a, int n_paths,
         std::uint64_t seed, int workers) {
        return report_to_dict(mc_objective(pm.model, g.filter, g.agent, a.strategy, n_paths,
                                           seed, workers));
      },
      py::arg("model"), py::arg("gains"), py::arg("attack"), py::arg("n_paths") = 1000,
      py::arg("seed") = 0, py::arg("workers") = 0);

  m.def("exact_objective",
        [](const PyModel& pm, const PyGains& g, const Matrix& rho, const Matrix& tau) {
          return report_to_dict(exact_objective(
              pm.model, g.filter, g.agent, array_to_grid(pm.model.horizon, rho, pm.model.d),
              array_to_grid(pm.model.horizon, tau, pm.model.m)));
        });

  m.def("detectability_residual",
        [](const PyModel& pm, const Matrix& rho, const Matrix& tau) {
          return grid_to_array(detectability_residual(
              array_to_grid(pm.model.horizon, rho, pm.model.d),
              array_to_grid(pm.model.horizon, tau, pm.model.m), pm.model));
        });

  m.def(
      "run_rounds",
      [](const PyModel& pm, double lam, int rounds) {
        const auto result = run_rounds(pm.model, lam, rounds);
        py::list out;
        for (const auto& r : result.rounds) {
          py::dict d;
          d["round"] = r.round;
          d["rho_sup"] = r.rho_sup;
          d["tau_sup"] = r.tau_sup;
          d["D"] = r.D;
          d["S"] = r.S;
          d["objective"] = r.objective;
          out.append(d);
        }
        return out;
      },
      py::arg("model"), py::arg("lam"), py::arg("rounds") = 5);
}
