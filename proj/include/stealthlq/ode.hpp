#ifndef STEALTHLQ_ODE_HPP
#define STEALTHLQ_ODE_HPP

#include <functional>
#include <vector>

#include "stealthlq/coeffs.hpp"

namespace stealthlq {

// Explicit Butcher tableau. A is strictly lower triangular, sum(b) = 1.
struct RkTableau {
  int stages = 0;
  std::vector<std::vector<double>> a;  // a[i] has i entries
  std::vector<double> b;
  std::vector<double> c;

  void validate() const;

  // Classical 4th-order scheme, kept for cross-checks.
  static const RkTableau& rk4();
  // 13-stage Fehlberg scheme evaluated with its 8th-order weights;
  // the project default.
  static const RkTableau& fehlberg8();
};

enum class Direction { Forward, Backward };

// Vector-valued initial (or terminal) value problem on a fixed grid.
// Backward problems specify the value at T; they are integrated via the
// substitution s = T - t and re-indexed to forward time.
struct OdeProblem {
  std::function<Vector(double, const Vector&)> rhs;
  Vector boundary_value;  // at t = 0 (forward) or t = T (backward)
  Direction direction = Direction::Forward;
  TimeGrid grid;
  // Applied to the state after every accepted step (e.g. symmetrization
  // of matrix-valued states).
  std::function<void(Vector&)> post_step;
};

// Blow-up guard: integration aborts once any state norm exceeds this.
inline constexpr double kDivergenceGuard = 1e12;

// Solution sampled at every grid node, in forward-time order. The boundary
// node stores the boundary value exactly. Throws NumericError on a
// non-finite rhs and DivergenceError when the guard trips.
std::vector<Vector> integrate(const OdeProblem& problem,
                              const RkTableau& tableau = RkTableau::fehlberg8());

// Composite trapezoidal rule over the full grid.
double quadrature(const TimeGrid& grid, const std::vector<double>& values);

// Convenience: matrix-shaped states stored column-major in the flat vector.
Vector flatten(const Matrix& M);
Matrix unflatten(const Vector& v, int rows, int cols);

// Turn an integrate() result into a GridFunction of (rows x cols) matrices.
GridFunction to_grid_function(const TimeGrid& grid, const std::vector<Vector>& states,
                              int rows, int cols, int offset = 0);

}  // namespace stealthlq

#endif  // STEALTHLQ_ODE_HPP
