#include <doctest.h>

#include <array>
#include <cmath>
#include <cstring>

#include "stealthlq/sim.hpp"

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

FilterGains zero_filter_gains(const SystemModel& model) {
  FilterGains fg;
  fg.R = GridFunction::constant(model.horizon, Matrix::Zero(model.d, model.d));
  fg.T_cal = GridFunction::constant(model.horizon, Matrix::Zero(model.d, model.m));
  fg.Theta = GridFunction::constant(model.horizon, Matrix::Zero(model.d, model.d));
  fg.Lambda = GridFunction::constant(model.horizon, Matrix::Zero(model.d, model.d));
  return fg;
}

}  // namespace

TEST_CASE("noise stream is reproducible and stream-separated") {
  NoiseStream a(42, 7, 0), b(42, 7, 0), c(42, 8, 0), d(42, 7, 1);
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    CHECK(x == b.normal());
    CHECK(std::isfinite(x));
  }
  // Different path or stream keys decorrelate immediately.
  bool differ_path = false, differ_stream = false;
  NoiseStream a2(42, 7, 0);
  for (int i = 0; i < 10; ++i) {
    const double x = a2.normal();
    differ_path = differ_path || (x != c.normal());
    differ_stream = differ_stream || (x != d.normal());
  }
  CHECK(differ_path);
  CHECK(differ_stream);
}

TEST_CASE("noise stream moments are sane") {
  NoiseStream s(1, 2, 0);
  const int n = 200000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = s.normal();
    sum += x;
    sum2 += x * x;
  }
  CHECK(std::abs(sum / n) < 5.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(sum2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("noiseless degenerate run follows the closed-loop flow") {
  auto model = preset("1d-mean-revert").model;
  model.sigma_V = Matrix::Zero(1, 1);
  model.sigma_W = Matrix::Zero(1, 1);
  model.R0 = Matrix::Zero(1, 1);
  const auto agent = solve_agent(model);
  const auto filter = zero_filter_gains(model);

  const auto bundle =
      simulate_path(model, filter, agent, AttackStrategy::zero(), 5, 0);

  // All three state views coincide exactly.
  CHECK((bundle.Xc - bundle.Xhat_a).norm() == 0.0);
  CHECK((bundle.Xc - bundle.Xhat_c).norm() == 0.0);

  // And follow x' = (A - K F) x with zero drift terms.
  OdeProblem problem;
  problem.grid = model.horizon;
  problem.direction = Direction::Forward;
  problem.boundary_value = model.x0;
  problem.rhs = [&](double t, const Vector& x) {
    const Matrix A = model.A.eval(t);
    const Matrix K = agent.K.eval(t);
    const Matrix F = agent.F.eval(t);
    return Vector((A - K * F) * x);
  };
  const auto exact = integrate(problem);
  double worst = 0.0;
  for (int k = 0; k <= model.horizon.n_steps; ++k) {
    worst = std::max(worst, std::abs(bundle.Xc(k, 0) - exact[static_cast<size_t>(k)](0)));
  }
  CHECK(worst < 2e-3);  // forward Euler vs the exact flow
}

TEST_CASE("zero attack leaves no discrepancy") {
  auto s = solve_1d(0.3);
  const auto bundle = simulate_path(s.model, s.filter, s.agent, AttackStrategy::zero(), 17, 3);
  CHECK(bundle.dX.norm() == 0.0);
  CHECK(bundle.ito_sum == 0.0);
  CHECK(bundle.quad_sum == 0.0);
  CHECK(bundle.Yc.row(0).norm() == 0.0);
  CHECK(bundle.Ia.row(0).norm() == 0.0);
  CHECK(bundle.Xhat_a(0, 0) == s.model.x0(0));
  CHECK(bundle.Xhat_c(0, 0) == s.model.x0(0));
}

TEST_CASE("initial state draws honor the prior covariance") {
  auto model = preset("1d-comparison").model;  // broad prior, R0 = 2
  const auto filter = solve_filter(model);
  const auto agent = solve_agent(model);
  const Simulator sim(model, filter, agent, AttackStrategy::zero());
  const int n_paths = 2000;
  const auto x0s = simulate_map<double>(
      sim, n_paths, 99, 2, [](int, const TrajectoryBundle& b) { return b.Xc(0, 0); });
  double sum = 0, sum2 = 0;
  for (double v : x0s) {
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n_paths;
  const double var = sum2 / n_paths - mean * mean;
  CHECK(std::abs(mean - 0.5) < 5.0 * std::sqrt(2.0 / n_paths));
  CHECK(std::abs(var - 2.0) < 5.0 * 2.0 * std::sqrt(2.0 / (n_paths - 1)));
}

TEST_CASE("discrepancy under deterministic attack is path-independent") {
  auto s = solve_1d(0.3);
  std::vector<Matrix> rho(static_cast<size_t>(s.model.horizon.n_nodes())),
      tau(static_cast<size_t>(s.model.horizon.n_nodes()));
  for (int k = 0; k < s.model.horizon.n_nodes(); ++k) {
    const double t = s.model.horizon.node(k);
    rho[static_cast<size_t>(k)] = Matrix::Constant(1, 1, std::sin(3.0 * t));
    tau[static_cast<size_t>(k)] = Matrix::Constant(1, 1, 0.2 * std::cos(5.0 * t));
  }
  const auto strategy =
      AttackStrategy::deterministic(GridFunction(s.model.horizon, rho),
                                    GridFunction(s.model.horizon, tau));

  const auto b1 = simulate_path(s.model, s.filter, s.agent, strategy, 100, 0);
  const auto b2 = simulate_path(s.model, s.filter, s.agent, strategy, 200, 55);
  // Deterministic discrepancy: the noise enters both filters through the
  // same observation increment and cancels up to roundoff.
  CHECK((b1.dX - b2.dX).norm() < 1e-12);

  // Dual view: the same recursion on the discrepancy equation alone.
  const double h = s.model.horizon.step();
  Vector dx = Vector::Zero(1);
  double worst = 0.0;
  for (int k = 0; k < s.model.horizon.n_steps; ++k) {
    worst = std::max(worst, std::abs(dx(0) - b1.dX(k, 0)));
    const double t = s.model.horizon.node(k);
    const Matrix A = s.model.A.eval(t);
    const Matrix Th = s.filter.Theta.at_node(k);
    const Matrix Tg = s.filter.T_cal.at_node(k);
    dx += h * ((A - Th) * dx + Vector(rho[static_cast<size_t>(k)]) -
               Tg * Vector(tau[static_cast<size_t>(k)]));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("same seed gives a bit-identical bundle") {
  auto s = solve_1d(0.3);
  const auto gw = AttackStrategy::gaussian_white(1.0, 1.0);
  const auto b1 = simulate_path(s.model, s.filter, s.agent, gw, 31, 4);
  const auto b2 = simulate_path(s.model, s.filter, s.agent, gw, 31, 4);
  CHECK(std::memcmp(b1.Xc.data(), b2.Xc.data(), sizeof(double) * b1.Xc.size()) == 0);
  CHECK(std::memcmp(b1.Ia.data(), b2.Ia.data(), sizeof(double) * b1.Ia.size()) == 0);
  CHECK(b1.ito_sum == b2.ito_sum);
}

TEST_CASE("reductions are identical for any worker count") {
  auto s = solve_1d(0.3);
  const Simulator sim(s.model, s.filter, s.agent, AttackStrategy::gaussian_white(0.5, 0.5));
  auto reduce = [&](int workers) {
    const auto sums = simulate_map<double>(
        sim, 64, 77, workers,
        [](int, const TrajectoryBundle& b) { return b.Xc.col(0).sum(); });
    double total = 0.0;
    for (double v : sums) total += v;
    return total;
  };
  const double r1 = reduce(1);
  const double r3 = reduce(3);
  CHECK(r1 == r3);
}

TEST_CASE("kalman-bucy consistency of the estimation error") {
  auto s = solve_1d(0.0);
  const Simulator sim(s.model, s.filter, s.agent, AttackStrategy::zero());
  const int n_paths = 2000;
  const int n = s.model.horizon.n_steps;
  const std::array<int, 3> nodes = {n / 4, n / 2, n};
  struct Err {
    std::array<double, 3> e;
  };
  const auto errs = simulate_map<Err>(sim, n_paths, 4242, 2, [&](int, const TrajectoryBundle& b) {
    Err out;
    for (size_t i = 0; i < nodes.size(); ++i) {
      out.e[i] = b.Xc(nodes[i], 0) - b.Xhat_a(nodes[i], 0);
    }
    return out;
  });
  for (size_t i = 0; i < nodes.size(); ++i) {
    double sum = 0, sum2 = 0;
    for (const auto& e : errs) {
      sum += e.e[i];
      sum2 += e.e[i] * e.e[i];
    }
    const double mean = sum / n_paths;
    const double var = sum2 / n_paths - mean * mean;
    const double expected = s.filter.R.at_node(nodes[i])(0, 0);
    const double se = expected * std::sqrt(2.0 / (n_paths - 1));
    CHECK(std::abs(var - expected) < 5.0 * se + 1e-4);
  }
}

TEST_CASE("innovation increments are standard under the attack-free model") {
  auto s = solve_1d(0.0);
  const Simulator sim(s.model, s.filter, s.agent, AttackStrategy::zero());
  const int n_paths = 2000;
  const double h = s.model.horizon.step();
  const std::array<int, 2> steps = {100, 700};
  struct Incs {
    std::array<double, 2> v;
  };
  const auto incs = simulate_map<Incs>(sim, n_paths, 5150, 2, [&](int, const TrajectoryBundle& b) {
    Incs out;
    for (size_t i = 0; i < steps.size(); ++i) out.v[i] = b.dIa(steps[i], 0);
    return out;
  });
  for (size_t i = 0; i < steps.size(); ++i) {
    double sum = 0, sum2 = 0;
    for (const auto& inc : incs) {
      sum += inc.v[i];
      sum2 += inc.v[i] * inc.v[i];
    }
    const double mean = sum / n_paths;
    const double var = sum2 / n_paths - mean * mean;
    CHECK(std::abs(mean) < 5.0 * std::sqrt(h / n_paths));
    CHECK(std::abs(var - h) < 5.0 * h * std::sqrt(2.0 / (n_paths - 1)));
  }
}

TEST_CASE("simulator agrees with the strategy dispatcher") {
  auto s = solve_1d(0.3);
  const auto sine = AttackStrategy::sinusoid(0.8, 8.0 * M_PI);
  const auto bundle = simulate_path(s.model, s.filter, s.agent, sine, 3, 9);
  for (int k : {0, 125, 500, 1000}) {
    auto [r, t] = eval_attack(sine, s.model, k);
    CHECK(bundle.rho(k, 0) == r(0));
    CHECK(bundle.tau(k, 0) == t(0));
  }
}

TEST_CASE("every preset simulates under every built-in strategy") {
  for (const auto& name : preset_names()) {
    auto model = preset(name).model;
    model.lambda = 0.3;
    const auto filter = solve_filter(model);
    const auto agent = solve_agent(model);
    for (const auto& strategy :
         {AttackStrategy::zero(), AttackStrategy::sinusoid(1.0, 8.0 * M_PI),
          AttackStrategy::gaussian_white(1.0, 1.0)}) {
      const auto b = simulate_path(model, filter, agent, strategy, 3, 0);
      CAPTURE(name);
      CHECK(b.Xc.allFinite());
      CHECK(b.Ia.allFinite());
      CHECK((b.dX - (b.Xhat_c - b.Xhat_a)).norm() == 0.0);
    }
  }
}

TEST_CASE("running likelihood sums match a recomputation from stored paths") {
  auto s = solve_1d(0.3);
  const auto sine = AttackStrategy::sinusoid(1.0, 8.0 * M_PI);
  const auto b = simulate_path(s.model, s.filter, s.agent, sine, 21, 2);
  const NoiseAlgebra na = noise_algebra(s.model);
  const double h = s.model.horizon.step();
  double ito = 0, quad = 0;
  for (int k = 0; k < s.model.horizon.n_steps; ++k) {
    const Matrix H = s.model.H.eval(s.model.horizon.node(k));
    const Vector beta = H * Vector(b.dX.row(k)) + Vector(b.tau.row(k));
    ito += (na.WW_isqrt * beta).dot(Vector(b.dIa.row(k)));
    quad += beta.dot(Vector(na.WW_inv * beta)) * h;
  }
  CHECK(b.ito_sum == doctest::Approx(ito).epsilon(1e-12));
  CHECK(b.quad_sum == doctest::Approx(quad).epsilon(1e-12));
}
