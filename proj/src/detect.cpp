#include "stealthlq/detect.hpp"

#include <algorithm>
#include <cmath>

namespace stealthlq {

GridFunction delta_x_ode(const SystemModel& model, const FilterGains& filter,
                         const GridFunction& rho, const GridFunction& tau) {
  const int d = model.d;
  OdeProblem problem;
  problem.grid = model.horizon;
  problem.direction = Direction::Forward;
  problem.boundary_value = Vector::Zero(d);
  problem.rhs = [&](double t, const Vector& dx) {
    const Matrix A = model.A.eval(t);
    const Matrix Th = filter.Theta.eval(t);
    const Matrix Tg = filter.T_cal.eval(t);
    return Vector((A - Th) * dx + Vector(rho.eval(t)) - Tg * Vector(tau.eval(t)));
  };
  const std::vector<Vector> states = integrate(problem);
  return to_grid_function(model.horizon, states, d, 1);
}

namespace {

double ell_from_paths(const TrajectoryBundle& bundle, const SystemModel& model,
                      const std::function<Vector(int)>& dx_at,
                      const std::function<Vector(int)>& tau_at) {
  const NoiseAlgebra na = noise_algebra(model);
  const TimeGrid& grid = bundle.grid;
  const double h = grid.step();
  double ito = 0.0;
  double quad = 0.0;
  for (int k = 0; k < grid.n_steps; ++k) {
    const Matrix H = model.H.eval(grid.node(k));
    const Vector beta = H * dx_at(k) + tau_at(k);
    const Vector white = na.WW_isqrt * beta;
    ito += white.dot(Vector(bundle.dIa.row(k)));
    quad += beta.dot(Vector(na.WW_inv * beta)) * h;
  }
  return ito - 0.5 * quad;
}

}  // namespace

double log_likelihood(const TrajectoryBundle& bundle, const GridFunction& candidate_rho,
                      const GridFunction& candidate_tau, const SystemModel& model,
                      const FilterGains& filter) {
  if (!(candidate_rho.grid() == bundle.grid) || !(candidate_tau.grid() == bundle.grid)) {
    throw ShapeError("log_likelihood: candidate paths must live on the bundle grid");
  }
  const GridFunction dx = delta_x_ode(model, filter, candidate_rho, candidate_tau);
  return ell_from_paths(
      bundle, model, [&](int k) { return Vector(dx.at_node(k)); },
      [&](int k) { return Vector(candidate_tau.at_node(k)); });
}

double log_likelihood(const TrajectoryBundle& bundle, const SystemModel& model) {
  return ell_from_paths(
      bundle, model, [&](int k) { return Vector(bundle.dX.row(k)); },
      [&](int k) { return Vector(bundle.tau.row(k)); });
}

double stealthiness_closed_form(const GridFunction& delta_x, const GridFunction& tau,
                                const SystemModel& model) {
  if (!(tau.grid() == delta_x.grid())) {
    throw ShapeError("stealthiness_closed_form: delta_x and tau grids differ");
  }
  const NoiseAlgebra na = noise_algebra(model);
  const TimeGrid& grid = delta_x.grid();
  std::vector<double> integrand(static_cast<size_t>(grid.n_nodes()));
  for (int k = 0; k < grid.n_nodes(); ++k) {
    const Matrix H = model.H.eval(grid.node(k));
    const Vector beta = H * Vector(delta_x.at_node(k)) + Vector(tau.at_node(k));
    integrand[static_cast<size_t>(k)] = beta.dot(Vector(na.WW_inv * beta));
  }
  return 0.5 * quadrature(grid, integrand);
}

std::vector<Chi2Window> chi2_detector(const TrajectoryBundle& bundle, int window_steps) {
  if (window_steps < 1) throw DomainError("chi2_detector: window must be >= 1 step");
  if (window_steps > bundle.grid.n_steps) {
    throw DomainError("chi2_detector: window exceeds the horizon");
  }
  const double h = bundle.grid.step();
  const int m = static_cast<int>(bundle.dIa.cols());
  const int n_windows = bundle.grid.n_steps / window_steps;
  std::vector<Chi2Window> out;
  out.reserve(static_cast<size_t>(n_windows));
  for (int w = 0; w < n_windows; ++w) {
    Chi2Window win;
    win.start_step = w * window_steps;
    win.dof = window_steps * m;
    double sum = 0.0;
    for (int j = 0; j < window_steps; ++j) {
      sum += bundle.dIa.row(win.start_step + j).squaredNorm();
    }
    win.statistic = sum / h;
    win.p_value = chi2_upper_tail(win.statistic, win.dof);
    out.push_back(win);
  }
  return out;
}

GridFunction detectability_residual(const GridFunction& rho, const GridFunction& tau,
                                    const SystemModel& model) {
  if (!(rho.grid() == model.horizon) || !(tau.grid() == model.horizon)) {
    throw ShapeError("detectability_residual: attack paths must live on the model grid");
  }
  // Closed form needs A_{t1} A_{t2} = A_{t2} A_{t1}; sample a handful of
  // node pairs.
  const TimeGrid& grid = model.horizon;
  const int probes = 5;
  for (int i = 0; i <= probes; ++i) {
    for (int j = i + 1; j <= probes; ++j) {
      const Matrix Ai = model.A.eval(grid.T * i / probes);
      const Matrix Aj = model.A.eval(grid.T * j / probes);
      if ((Ai * Aj - Aj * Ai).norm() > 1e-10 * std::max(1.0, Ai.norm() * Aj.norm())) {
        throw UnsupportedError(
            "detectability_residual: A does not commute across times; the closed-form "
            "Brownianity condition is unavailable");
      }
    }
  }

  const int d = model.d;
  OdeProblem problem;
  problem.grid = grid;
  problem.direction = Direction::Forward;
  problem.boundary_value = Vector::Zero(d);
  problem.rhs = [&](double t, const Vector& z) {
    return Vector(Matrix(model.A.eval(t)) * z + Vector(rho.eval(t)));
  };
  const std::vector<Vector> states = integrate(problem);

  std::vector<Matrix> vals(static_cast<size_t>(grid.n_nodes()));
  for (int k = 0; k < grid.n_nodes(); ++k) {
    const Matrix H = model.H.eval(grid.node(k));
    vals[static_cast<size_t>(k)] =
        H * states[static_cast<size_t>(k)] + Vector(tau.at_node(k));
  }
  return GridFunction(grid, std::move(vals));
}

namespace {

// Regularized incomplete gamma by series (x < a + 1) or continued fraction.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double dd = 1.0 / b;
  double hh = dd;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    dd = an * dd + b;
    if (std::abs(dd) < tiny) dd = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    dd = 1.0 / dd;
    const double delta = dd * c;
    hh *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * hh;
}

}  // namespace

double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw DomainError("gamma_q: need x >= 0 and a > 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi2_upper_tail(double x, double dof) {
  return gamma_q(dof / 2.0, x / 2.0);
}

double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_two_sample_pvalue: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const size_t n1 = a.size(), n2 = b.size();
  size_t i = 0, j = 0;
  double d = 0.0;
  while (i < n1 && j < n2) {
    const double x = std::min(a[i], b[j]);
    while (i < n1 && a[i] <= x) ++i;
    while (j < n2 && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
  }
  const double ne = static_cast<double>(n1) * n2 / (n1 + n2);
  const double lam = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  double p = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lam * lam);
    p += 2.0 * sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  return std::min(1.0, std::max(0.0, p));
}

}  // namespace stealthlq
