#include <doctest.h>

#include <cmath>

#include "stealthlq/evaluate.hpp"

using namespace stealthlq;

namespace {

struct Solved {
  SystemModel model;
  FilterGains filter;
  AgentGains agent;
};

Solved solve_1d(double lambda) {
  Solved s;
  s.model = preset("1d-mean-revert").model;
  s.model.lambda = lambda;
  s.filter = solve_filter(s.model);
  s.agent = solve_agent(s.model);
  return s;
}

GridFunction zero_path(const TimeGrid& grid, int rows) {
  return GridFunction::constant(grid, Matrix::Zero(rows, 1));
}

}  // namespace

TEST_CASE("degradation vanishes when every cost weight is off") {
  auto s = solve_1d(0.3);
  s.model.Q = TimeVaryingMatrix::constant(Matrix::Zero(1, 1));
  s.model.r_ref = TimeVaryingMatrix::constant(Matrix::Zero(1, 1));
  s.agent = solve_agent(s.model);  // F and f vanish with Q and r
  const auto zr = zero_path(s.model.horizon, 1);
  CHECK(exact_D(s.model, s.filter, s.agent, zr, zr) == 0.0);
}

TEST_CASE("zero attack objective is minus lambda times the baseline cost") {
  auto s = solve_1d(0.3);
  const auto zr = zero_path(s.model.horizon, 1);
  const auto report = exact_objective(s.model, s.filter, s.agent, zr, zr);
  CHECK(report.S < 1e-12);
  CHECK(report.rho_energy == 0.0);
  CHECK(report.objective == doctest::Approx(-0.3 * report.D).epsilon(1e-12));
  CHECK(report.D > 0.0);
}

TEST_CASE("covariance flow ignores the attack") {
  auto s = solve_1d(0.3);
  const auto zr = zero_path(s.model.horizon, 1);
  const auto ms0 = solve_moments(s.model, s.filter, s.agent, &zr, &zr);

  std::vector<Matrix> rho(static_cast<size_t>(s.model.horizon.n_nodes())),
      tau(static_cast<size_t>(s.model.horizon.n_nodes()));
  for (int k = 0; k < s.model.horizon.n_nodes(); ++k) {
    const double t = s.model.horizon.node(k);
    rho[static_cast<size_t>(k)] = Matrix::Constant(1, 1, std::sin(9.0 * t) + 0.3);
    tau[static_cast<size_t>(k)] = Matrix::Constant(1, 1, std::cos(4.0 * t));
  }
  const GridFunction gr(s.model.horizon, rho), gt(s.model.horizon, tau);
  const auto ms1 = solve_moments(s.model, s.filter, s.agent, &gr, &gt);
  double worst = 0.0;
  for (int k = 0; k < s.model.horizon.n_nodes(); ++k) {
    worst = std::max(worst, (ms0.Sigma.at_node(k) - ms1.Sigma.at_node(k)).norm());
  }
  CHECK(worst < 1e-12);
  CHECK(ms0.Sigma.at_node(0)(0, 0) == s.model.R0(0, 0));
  CHECK(ms0.mean.at_node(0)(0) == 0.5);
  CHECK(ms0.mean.at_node(0)(1) == 0.5);
}

TEST_CASE("degradation decomposes into trace and mean parts") {
  auto s = solve_1d(0.3);
  const auto zr = zero_path(s.model.horizon, 1);
  const auto ms = solve_moments(s.model, s.filter, s.agent, &zr, &zr);
  const TimeGrid& grid = s.model.horizon;
  std::vector<double> trace_part(static_cast<size_t>(grid.n_nodes())),
      mean_part(static_cast<size_t>(grid.n_nodes()));
  for (int k = 0; k < grid.n_nodes(); ++k) {
    const double t = grid.node(k);
    const Matrix Q = s.model.Q.eval(t);
    const Matrix& F = s.agent.F.at_node(k);
    const Matrix& K = s.agent.K.at_node(k);
    const Vector fv = s.agent.f_vec.at_node(k);
    const Vector r = s.model.r_ref.eval(t);
    const Vector mean = ms.mean.at_node(k);
    const Matrix& Sig = ms.Sigma.at_node(k);
    trace_part[static_cast<size_t>(k)] =
        (Q * Sig.topLeftCorner(1, 1)).trace() + (F * K * F * Sig.bottomRightCorner(1, 1)).trace();
    const Vector dc = mean.head(1) - r;
    const Vector um = F * mean.tail(1) + 0.5 * fv;
    mean_part[static_cast<size_t>(k)] = dc.dot(Vector(Q * dc)) + um.dot(Vector(K * um));
  }
  const double split = quadrature(grid, trace_part) + quadrature(grid, mean_part);
  const double total = exact_D(s.model, s.filter, s.agent, zr, zr);
  CHECK(std::abs(split - total) < 1e-12 * (1.0 + std::abs(total)));
}

TEST_CASE("monte carlo zero strategy has exactly zero likelihood spread") {
  auto s = solve_1d(0.3);
  const auto report =
      mc_objective(s.model, s.filter, s.agent, AttackStrategy::zero(), 200, 1234, 2);
  CHECK(report.S == 0.0);
  CHECK(report.se_S == 0.0);
  CHECK(report.rho_energy == 0.0);
  CHECK(report.objective == doctest::Approx(-0.3 * report.D).epsilon(1e-12));
  CHECK(report.objective == report.S - s.model.lambda * report.D + report.rho_energy);
}

TEST_CASE("monte carlo matches exact quadrature for the zero strategy") {
  auto s = solve_1d(0.3);
  const auto zr = zero_path(s.model.horizon, 1);
  const double exact = exact_D(s.model, s.filter, s.agent, zr, zr);
  const auto report =
      mc_objective(s.model, s.filter, s.agent, AttackStrategy::zero(), 2000, 88, 2);
  CHECK(std::abs(report.D - exact) < 3.0 * report.se_D);
}

TEST_CASE("stealthiness routes agree at scale on a visible attack") {
  // Three routes to the same number for the sinusoid attack: quadrature of
  // the discrepancy ODE, quadrature of the moment-gap discrepancy, and the
  // Monte Carlo mean of the pathwise log-likelihood. The attack is large
  // enough that a factor or sign error could not hide inside the noise.
  auto s = solve_1d(0.3);
  const TimeGrid& grid = s.model.horizon;
  std::vector<Matrix> rv(static_cast<size_t>(grid.n_nodes())),
      tv(static_cast<size_t>(grid.n_nodes()));
  for (int k = 0; k < grid.n_nodes(); ++k) {
    const double v = std::sin(8.0 * M_PI * grid.node(k));
    rv[static_cast<size_t>(k)] = Matrix::Constant(1, 1, v);
    tv[static_cast<size_t>(k)] = Matrix::Constant(1, 1, -v);
  }
  const GridFunction rho(grid, std::move(rv)), tau(grid, std::move(tv));

  const GridFunction dx = delta_x_ode(s.model, s.filter, rho, tau);
  const double S_ode = stealthiness_closed_form(dx, tau, s.model);
  const double S_moments = exact_objective(s.model, s.filter, s.agent, rho, tau).S;
  CHECK(S_ode > 0.1);  // plainly visible
  CHECK(S_ode == doctest::Approx(S_moments).epsilon(1e-8));

  const auto mc = mc_objective(s.model, s.filter, s.agent,
                               AttackStrategy::deterministic(rho, tau), 500, 2024, 2);
  CHECK(std::abs(mc.S - S_ode) < 3.0 * mc.se_S);
  CHECK(mc.se_S == doctest::Approx(std::sqrt(2.0 * S_ode / 500)).epsilon(0.3));
}

TEST_CASE("sampled states stay gaussian under deterministic attacks") {
  auto s = solve_1d(0.3);
  const auto sine = AttackStrategy::sinusoid(1.0, 8.0 * M_PI);
  const Simulator sim(s.model, s.filter, s.agent, sine);
  const int n_paths = 2000;
  const int node = s.model.horizon.n_steps / 2;
  const auto vals = simulate_map<double>(
      sim, n_paths, 777, 2, [&](int, const TrajectoryBundle& b) { return b.Xc(node, 0); });
  double m1 = 0;
  for (double v : vals) m1 += v;
  m1 /= n_paths;
  double m2 = 0, m3 = 0;
  for (double v : vals) {
    m2 += (v - m1) * (v - m1);
    m3 += (v - m1) * (v - m1) * (v - m1);
  }
  m2 /= n_paths;
  m3 /= n_paths;
  const double skew = m3 / std::pow(m2, 1.5);
  CHECK(std::abs(skew) < 5.0 * std::sqrt(6.0 / n_paths));
}

TEST_CASE("2d adaptive value identity against monte carlo") {
  // The tracking scenario has a nonzero reference and affine agent gains, so
  // every source term of the adaptive system is active here.
  auto model = preset("2d-tracking").model;
  model.lambda = 0.3;
  const auto filter = solve_filter(model);
  const auto agent = solve_agent(model);
  const auto bundle = build_optimal_adaptive(model, filter, agent);
  const double value = adaptive_value(bundle.strategy.rho_gains,
                                      AdaptiveCoeffs(model, filter, agent).phi0());
  const auto mc =
      mc_objective(model, filter, agent, bundle.strategy, 800, 991, 2);
  const double target = value - model.lambda * filter.int_trace_QR;
  CHECK(std::abs(mc.objective - target) < 4.0 * mc.se_objective);

  // And tau* beats the no-observation-attack alternative for the same inner
  // problem.
  const auto rho0 = solve_adaptive_rho(model, filter, agent);
  const auto at_zero = solve_f_phi_c_phi(
      model, filter, agent, rho0,
      GridFunction::constant(model.horizon, Matrix::Zero(model.m, 1)));
  CHECK(value <= adaptive_value(at_zero, AdaptiveCoeffs(model, filter, agent).phi0()) + 1e-8);
}

TEST_CASE("2d deterministic attack is first-order optimal") {
  auto model = preset("2d-tracking").model;
  model.lambda = 0.3;
  const auto filter = solve_filter(model);
  const auto agent = solve_agent(model);
  const auto det = solve_det_attack(model, filter, agent);
  const auto [strategy, means] = build_optimal_det(model, filter, agent, det);
  const auto best = exact_objective(model, filter, agent, strategy.rho_path,
                                    strategy.tau_path);

  const TimeGrid& grid = model.horizon;
  NoiseStream rng(314, 0, 0);
  for (int trial = 0; trial < 5; ++trial) {
    const double eps = 1e-3;
    std::vector<Matrix> pr(static_cast<size_t>(grid.n_nodes())),
        pt(static_cast<size_t>(grid.n_nodes()));
    Vector ar(4), br(4), at(4), bt(4);
    rng.fill_normal(ar);
    rng.fill_normal(br);
    rng.fill_normal(at);
    rng.fill_normal(bt);
    for (int k = 0; k < grid.n_nodes(); ++k) {
      const double t = grid.node(k);
      Vector dr(2), dt(2);
      for (int j = 0; j < 2; ++j) {
        dr(j) = ar(j) * std::cos(2.0 * M_PI * t / grid.T) +
                br(j) * std::sin(4.0 * M_PI * t / grid.T);
        dt(j) = at(j) * std::cos(6.0 * M_PI * t / grid.T) + bt(j);
      }
      pr[static_cast<size_t>(k)] = Matrix(strategy.rho_path.at_node(k)) + eps * dr;
      pt[static_cast<size_t>(k)] = Matrix(strategy.tau_path.at_node(k)) + eps * dt;
    }
    const auto pert = exact_objective(model, filter, agent, GridFunction(grid, std::move(pr)),
                                      GridFunction(grid, std::move(pt)));
    CHECK(pert.objective >= best.objective - 1e-8);
  }
}

TEST_CASE("mismatched attack grids are rejected") {
  auto s = solve_1d(0.3);
  const TimeGrid coarse(0.5, 10);
  const auto wrong = GridFunction::constant(coarse, Matrix::Zero(1, 1));
  const auto right = zero_path(s.model.horizon, 1);
  CHECK_THROWS_AS(exact_objective(s.model, s.filter, s.agent, wrong, right), ShapeError);
  CHECK_THROWS_AS(detectability_residual(wrong, right, s.model), ShapeError);
  CHECK_THROWS_AS(Simulator(s.model, s.filter, s.agent,
                            AttackStrategy::deterministic(wrong, wrong)),
                  ShapeError);
}

TEST_CASE("objective report serializes with stable keys") {
  auto s = solve_1d(0.3);
  const auto report =
      mc_objective(s.model, s.filter, s.agent, AttackStrategy::zero(), 50, 5, 1);
  const auto j = objective_report_to_json(report);
  CHECK(j.at("method") == "monte-carlo");
  CHECK(j.at("n_paths") == 50);
  const std::string dumped = j.dump();
  CHECK(dumped.find("\"D\"") < dumped.find("\"S\""));  // nlohmann sorts keys
}
