#include "stealthlq/ode.hpp"

#include <cmath>
#include <string>

namespace stealthlq {

void RkTableau::validate() const {
  if (stages < 1) throw ShapeError("RkTableau: no stages");
  if (static_cast<int>(a.size()) != stages || static_cast<int>(b.size()) != stages ||
      static_cast<int>(c.size()) != stages) {
    throw ShapeError("RkTableau: coefficient array sizes inconsistent");
  }
  for (int i = 0; i < stages; ++i) {
    if (static_cast<int>(a[static_cast<size_t>(i)].size()) != i) {
      throw ShapeError("RkTableau: A must be strictly lower triangular");
    }
  }
  double sum = 0.0;
  for (double w : b) sum += w;
  if (std::abs(sum - 1.0) > 1e-12) throw ShapeError("RkTableau: sum(b) != 1");
}

const RkTableau& RkTableau::rk4() {
  static const RkTableau t = [] {
    RkTableau tab;
    tab.stages = 4;
    tab.a = {{}, {0.5}, {0.0, 0.5}, {0.0, 0.0, 1.0}};
    tab.b = {1.0 / 6, 1.0 / 3, 1.0 / 3, 1.0 / 6};
    tab.c = {0.0, 0.5, 0.5, 1.0};
    tab.validate();
    return tab;
  }();
  return t;
}

const RkTableau& RkTableau::fehlberg8() {
  static const RkTableau t = [] {
    RkTableau tab;
    tab.stages = 13;
    tab.c = {0.0,       2.0 / 27, 1.0 / 9, 1.0 / 6, 5.0 / 12, 1.0 / 2, 5.0 / 6,
             1.0 / 6,   2.0 / 3,  1.0 / 3, 1.0,     0.0,      1.0};
    tab.a = {
        {},
        {2.0 / 27},
        {1.0 / 36, 1.0 / 12},
        {1.0 / 24, 0.0, 1.0 / 8},
        {5.0 / 12, 0.0, -25.0 / 16, 25.0 / 16},
        {1.0 / 20, 0.0, 0.0, 1.0 / 4, 1.0 / 5},
        {-25.0 / 108, 0.0, 0.0, 125.0 / 108, -65.0 / 27, 125.0 / 54},
        {31.0 / 300, 0.0, 0.0, 0.0, 61.0 / 225, -2.0 / 9, 13.0 / 900},
        {2.0, 0.0, 0.0, -53.0 / 6, 704.0 / 45, -107.0 / 9, 67.0 / 90, 3.0},
        {-91.0 / 108, 0.0, 0.0, 23.0 / 108, -976.0 / 135, 311.0 / 54, -19.0 / 60,
         17.0 / 6, -1.0 / 12},
        {2383.0 / 4100, 0.0, 0.0, -341.0 / 164, 4496.0 / 1025, -301.0 / 82,
         2133.0 / 4100, 45.0 / 82, 45.0 / 164, 18.0 / 41},
        {3.0 / 205, 0.0, 0.0, 0.0, 0.0, -6.0 / 41, -3.0 / 205, -3.0 / 41, 3.0 / 41,
         6.0 / 41, 0.0},
        {-1777.0 / 4100, 0.0, 0.0, -341.0 / 164, 4496.0 / 1025, -289.0 / 82,
         2193.0 / 4100, 51.0 / 82, 33.0 / 164, 12.0 / 41, 0.0, 1.0},
    };
    tab.b = {0.0,       0.0,       0.0, 0.0,        0.0,        34.0 / 105, 9.0 / 35,
             9.0 / 35,  9.0 / 280, 9.0 / 280, 0.0, 41.0 / 840, 41.0 / 840};
    tab.validate();
    return tab;
  }();
  return t;
}

std::vector<Vector> integrate(const OdeProblem& problem, const RkTableau& tableau) {
  tableau.validate();
  const TimeGrid& grid = problem.grid;
  if (grid.n_nodes() < 2) throw DomainError("integrate: grid needs at least two nodes");

  const bool backward = problem.direction == Direction::Backward;
  const double T = grid.T;
  const double h = grid.step();
  const int n = grid.n_steps;

  // The integration always runs in an increasing internal time s; backward
  // problems use s = T - t so the rhs is evaluated at T - s with a sign flip.
  // The guard also covers RK stage inputs: fast blow-ups (Riccati escape)
  // must surface as divergence before a quadratic rhs overflows to inf.
  auto rhs_internal = [&](double s, const Vector& y) -> Vector {
    const double t = backward ? T - s : s;
    if (y.norm() > kDivergenceGuard) {
      throw DivergenceError("integrate: state norm exceeded guard at t = " + std::to_string(t),
                            t);
    }
    Vector f = problem.rhs(t, y);
    if (!f.allFinite()) {
      throw NumericError("integrate: non-finite rhs at t = " + std::to_string(t), t);
    }
    return backward ? Vector(-f) : f;
  };

  std::vector<Vector> internal(static_cast<size_t>(n + 1));
  internal[0] = problem.boundary_value;

  const int stages = tableau.stages;
  std::vector<Vector> k(static_cast<size_t>(stages));
  for (int step = 0; step < n; ++step) {
    const double s0 = step * h;
    const Vector& y0 = internal[static_cast<size_t>(step)];
    for (int i = 0; i < stages; ++i) {
      Vector yi = y0;
      for (int j = 0; j < i; ++j) {
        const double aij = tableau.a[static_cast<size_t>(i)][static_cast<size_t>(j)];
        if (aij != 0.0) yi += (h * aij) * k[static_cast<size_t>(j)];
      }
      k[static_cast<size_t>(i)] = rhs_internal(s0 + tableau.c[static_cast<size_t>(i)] * h, yi);
    }
    Vector y1 = y0;
    for (int i = 0; i < stages; ++i) {
      if (tableau.b[static_cast<size_t>(i)] != 0.0) {
        y1 += (h * tableau.b[static_cast<size_t>(i)]) * k[static_cast<size_t>(i)];
      }
    }
    if (problem.post_step) problem.post_step(y1);
    const double t_next = backward ? T - (s0 + h) : s0 + h;
    if (!y1.allFinite()) {
      throw NumericError("integrate: non-finite state at t = " + std::to_string(t_next), t_next);
    }
    if (y1.norm() > kDivergenceGuard) {
      throw DivergenceError("integrate: state norm exceeded guard at t = " +
                                std::to_string(t_next),
                            t_next);
    }
    internal[static_cast<size_t>(step + 1)] = std::move(y1);
  }

  if (!backward) return internal;
  std::vector<Vector> forward(static_cast<size_t>(n + 1));
  for (int j = 0; j <= n; ++j) {
    forward[static_cast<size_t>(n - j)] = std::move(internal[static_cast<size_t>(j)]);
  }
  return forward;
}

double quadrature(const TimeGrid& grid, const std::vector<double>& values) {
  if (static_cast<int>(values.size()) != grid.n_nodes()) {
    throw ShapeError("quadrature: values must cover the full grid");
  }
  const double h = grid.step();
  double sum = 0.5 * (values.front() + values.back());
  for (size_t k = 1; k + 1 < values.size(); ++k) sum += values[k];
  return sum * h;
}

Vector flatten(const Matrix& M) {
  return Eigen::Map<const Vector>(M.data(), M.size());
}

Matrix unflatten(const Vector& v, int rows, int cols) {
  if (v.size() != static_cast<Eigen::Index>(rows) * cols) {
    throw ShapeError("unflatten: size mismatch");
  }
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

GridFunction to_grid_function(const TimeGrid& grid, const std::vector<Vector>& states,
                              int rows, int cols, int offset) {
  std::vector<Matrix> values;
  values.reserve(states.size());
  for (const auto& s : states) {
    values.push_back(unflatten(s.segment(offset, rows * cols), rows, cols));
  }
  return GridFunction(grid, std::move(values));
}

}  // namespace stealthlq
