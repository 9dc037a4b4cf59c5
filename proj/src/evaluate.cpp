#include "stealthlq/evaluate.hpp"

#include <cmath>

namespace stealthlq {

using nlohmann::json;

namespace {

void require_model_grid(const SystemModel& model, const GridFunction* rho,
                        const GridFunction* tau, const char* who) {
  if ((rho != nullptr && !(rho->grid() == model.horizon)) ||
      (tau != nullptr && !(tau->grid() == model.horizon))) {
    throw ShapeError(std::string(who) + ": attack paths must live on the model grid");
  }
}

}  // namespace

MomentState solve_moments(const SystemModel& model, const FilterGains& filter,
                          const AgentGains& agent, const GridFunction* rho,
                          const GridFunction* tau) {
  require_model_grid(model, rho, tau, "solve_moments");
  const int d = model.d;
  const int d2 = 2 * d;
  const NoiseAlgebra na = noise_algebra(model);

  OdeProblem problem;
  problem.grid = model.horizon;
  problem.direction = Direction::Forward;
  Vector init(d2 + d2 * d2);
  init.head(d) = model.x0;
  init.segment(d, d) = model.x0;
  Matrix Sigma0 = Matrix::Zero(d2, d2);
  Sigma0.topLeftCorner(d, d) = model.R0;
  init.tail(d2 * d2) = flatten(Sigma0);
  problem.boundary_value = init;

  problem.rhs = [&](double t, const Vector& state) {
    const Vector mean = state.head(d2);
    const Matrix Sigma = unflatten(state.tail(d2 * d2), d2, d2);

    const Matrix A = model.A.eval(t);
    const Matrix F = agent.F.eval(t);
    const Matrix K = agent.K.eval(t);
    const Vector fv = agent.f_vec.eval(t);
    const Matrix Th = filter.Theta.eval(t);
    const Matrix Tg = filter.T_cal.eval(t);
    const Matrix KF = K * F;

    Matrix Acal(d2, d2);
    Acal << A, -KF, Th, A - KF - Th;

    const Vector drift = Vector(model.a_drift.eval(t)) - 0.5 * K * fv;
    Vector dm(d2);
    dm.noalias() = Acal * mean;
    dm.head(d) += drift;
    dm.tail(d) += drift;
    if (rho != nullptr) dm.head(d) += Vector(rho->eval(t));
    if (tau != nullptr) dm.tail(d) += Tg * Vector(tau->eval(t));

    Matrix VV(d2, d2);
    VV.setZero();
    VV.topLeftCorner(d, d) = na.VV;
    VV.bottomRightCorner(d, d) = Tg * na.WW * Tg.transpose();
    Matrix dSigma = Sigma * Acal.transpose() + Acal * Sigma + VV;

    Vector out(d2 + d2 * d2);
    out << dm, flatten(dSigma);
    return out;
  };
  problem.post_step = [d2](Vector& state) {
    Eigen::Map<Matrix> S(state.data() + d2, d2, d2);
    S = ((S + S.transpose()) / 2.0).eval();
  };

  const std::vector<Vector> states = integrate(problem);
  MomentState ms;
  ms.mean = to_grid_function(model.horizon, states, d2, 1, 0);
  ms.Sigma = to_grid_function(model.horizon, states, d2, d2, d2);
  return ms;
}

namespace {

double degradation_quadrature(const SystemModel& model, const AgentGains& agent,
                              const MomentState& ms) {
  const int d = model.d;
  const TimeGrid& grid = model.horizon;
  std::vector<double> integrand(static_cast<size_t>(grid.n_nodes()));
  for (int k = 0; k < grid.n_nodes(); ++k) {
    const double t = grid.node(k);
    const Vector mean = ms.mean.at_node(k);
    const Vector mc = mean.head(d);
    const Vector ma = mean.tail(d);
    const Matrix& Sigma = ms.Sigma.at_node(k);
    const Matrix Scc = Sigma.topLeftCorner(d, d);
    const Matrix Saa = Sigma.bottomRightCorner(d, d);
    const Matrix Q = model.Q.eval(t);
    const Matrix& F = agent.F.at_node(k);
    const Matrix& K = agent.K.at_node(k);
    const Vector fv = agent.f_vec.at_node(k);
    const Vector r = model.r_ref.eval(t);
    const Vector dc = mc - r;
    const Vector ua_mean = F * ma + 0.5 * fv;
    integrand[static_cast<size_t>(k)] = (Q * Scc).trace() + dc.dot(Vector(Q * dc)) +
                                        (F * K * F * Saa).trace() +
                                        ua_mean.dot(Vector(K * ua_mean));
  }
  return quadrature(grid, integrand);
}

}  // namespace

double exact_D(const SystemModel& model, const FilterGains& filter, const AgentGains& agent,
               const GridFunction& rho, const GridFunction& tau) {
  const MomentState ms = solve_moments(model, filter, agent, &rho, &tau);
  return degradation_quadrature(model, agent, ms);
}

ObjectiveReport exact_objective(const SystemModel& model, const FilterGains& filter,
                                const AgentGains& agent, const GridFunction& rho,
                                const GridFunction& tau) {
  const int d = model.d;
  const TimeGrid& grid = model.horizon;
  const MomentState ms = solve_moments(model, filter, agent, &rho, &tau);

  ObjectiveReport report;
  report.method = "exact-quadrature";
  report.D = degradation_quadrature(model, agent, ms);

  // For deterministic attacks the discrepancy equals the mean gap.
  std::vector<Matrix> dx(static_cast<size_t>(grid.n_nodes()));
  for (int k = 0; k < grid.n_nodes(); ++k) {
    const Vector mean = ms.mean.at_node(k);
    dx[static_cast<size_t>(k)] = mean.head(d) - mean.tail(d);
  }
  report.S = stealthiness_closed_form(GridFunction(grid, std::move(dx)), tau, model);

  std::vector<double> energy(static_cast<size_t>(grid.n_nodes()));
  for (int k = 0; k < grid.n_nodes(); ++k) {
    const Vector rk = rho.at_node(k);
    const Matrix P = model.P.eval(grid.node(k));
    energy[static_cast<size_t>(k)] = rk.dot(Vector(P * rk));
  }
  report.rho_energy = 0.5 * quadrature(grid, energy);

  report.objective = report.S - model.lambda * report.D + report.rho_energy;
  return report;
}

ObjectiveReport mc_objective(const SystemModel& model, const FilterGains& filter,
                             const AgentGains& agent, const AttackStrategy& strategy,
                             int n_paths, std::uint64_t base_seed, int workers) {
  if (n_paths < 1) throw DomainError("mc_objective: n_paths must be >= 1");
  const Simulator sim(model, filter, agent, strategy);
  const TimeGrid& grid = model.horizon;
  const double h = grid.step();
  const int n = grid.n_steps;

  // Node cost coefficients shared by every path.
  std::vector<Matrix> Qk(static_cast<size_t>(n)), Sk(static_cast<size_t>(n)),
      Pk(static_cast<size_t>(n));
  std::vector<Vector> rk(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double t = grid.node(k);
    Qk[static_cast<size_t>(k)] = model.Q.eval(t);
    Sk[static_cast<size_t>(k)] = model.S.eval(t);
    Pk[static_cast<size_t>(k)] = model.P.eval(t);
    rk[static_cast<size_t>(k)] = model.r_ref.eval(t);
  }

  struct PathStats {
    double D = 0.0, ell = 0.0, energy = 0.0;
  };
  auto per_path = [&](int, const TrajectoryBundle& b) {
    PathStats ps;
    for (int k = 0; k < n; ++k) {
      const Vector xc = b.Xc.row(k);
      const Vector u = b.ua.row(k);
      const Vector rho = b.rho.row(k);
      const Vector dxc = xc - rk[static_cast<size_t>(k)];
      ps.D += (dxc.dot(Vector(Qk[static_cast<size_t>(k)] * dxc)) +
               u.dot(Vector(Sk[static_cast<size_t>(k)] * u))) *
              h;
      ps.energy += rho.dot(Vector(Pk[static_cast<size_t>(k)] * rho)) * h;
    }
    ps.energy *= 0.5;
    ps.ell = b.ito_sum - 0.5 * b.quad_sum;
    return ps;
  };

  const std::vector<PathStats> stats = simulate_map<PathStats>(
      sim, n_paths, base_seed, workers, per_path);

  // Order-fixed reduction.
  double sum_D = 0, sum_ell = 0, sum_E = 0, sum_obj = 0;
  for (const auto& ps : stats) {
    sum_D += ps.D;
    sum_ell += ps.ell;
    sum_E += ps.energy;
    sum_obj += ps.ell - model.lambda * ps.D + ps.energy;
  }
  const double inv_n = 1.0 / n_paths;
  ObjectiveReport report;
  report.method = "monte-carlo";
  report.n_paths = n_paths;
  report.base_seed = base_seed;
  report.D = sum_D * inv_n;
  report.S = sum_ell * inv_n;
  report.rho_energy = sum_E * inv_n;
  report.objective = report.S - model.lambda * report.D + report.rho_energy;

  const double mean_obj = sum_obj * inv_n;
  double v_D = 0, v_ell = 0, v_E = 0, v_obj = 0;
  for (const auto& ps : stats) {
    v_D += (ps.D - report.D) * (ps.D - report.D);
    v_ell += (ps.ell - report.S) * (ps.ell - report.S);
    v_E += (ps.energy - report.rho_energy) * (ps.energy - report.rho_energy);
    const double obj = ps.ell - model.lambda * ps.D + ps.energy;
    v_obj += (obj - mean_obj) * (obj - mean_obj);
  }
  if (n_paths > 1) {
    const double denom = static_cast<double>(n_paths) * (n_paths - 1);
    report.se_D = std::sqrt(v_D / denom);
    report.se_S = std::sqrt(v_ell / denom);
    report.se_energy = std::sqrt(v_E / denom);
    report.se_objective = std::sqrt(v_obj / denom);
  }
  return report;
}

json objective_report_to_json(const ObjectiveReport& report) {
  json j;
  j["method"] = report.method;
  j["D"] = report.D;
  j["S"] = report.S;
  j["rho_energy"] = report.rho_energy;
  j["objective"] = report.objective;
  if (report.method == "monte-carlo") {
    j["se_D"] = report.se_D;
    j["se_S"] = report.se_S;
    j["se_energy"] = report.se_energy;
    j["se_objective"] = report.se_objective;
    j["n_paths"] = report.n_paths;
    j["base_seed"] = report.base_seed;
  }
  return j;
}

}  // namespace stealthlq
