#ifndef STEALTHLQ_COEFFS_HPP
#define STEALTHLQ_COEFFS_HPP

#include <Eigen/Dense>
#include <tuple>
#include <vector>

#include "stealthlq/errors.hpp"

namespace stealthlq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Uniform grid on [0, T] with n_steps + 1 nodes, node(k) = k * step().
struct TimeGrid {
  double T = 0.0;
  int n_steps = 0;

  TimeGrid() = default;
  TimeGrid(double horizon, int steps);

  double step() const { return T / n_steps; }
  int n_nodes() const { return n_steps + 1; }
  double node(int k) const { return k * step(); }

  // Index of the node nearest to t if t lies on a node (within roundoff),
  // otherwise -1.
  int node_index(double t) const;

  bool operator==(const TimeGrid& other) const {
    return T == other.T && n_steps == other.n_steps;
  }
};

// Matrix-valued function of time sampled at every grid node; evaluation
// between nodes is linear interpolation.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(TimeGrid grid, std::vector<Matrix> values);

  // All nodes share one value.
  static GridFunction constant(const TimeGrid& grid, const Matrix& value);

  const TimeGrid& grid() const { return grid_; }
  int rows() const { return values_.empty() ? 0 : static_cast<int>(values_[0].rows()); }
  int cols() const { return values_.empty() ? 0 : static_cast<int>(values_[0].cols()); }

  const Matrix& at_node(int k) const { return values_[static_cast<size_t>(k)]; }
  Matrix& at_node(int k) { return values_[static_cast<size_t>(k)]; }
  const std::vector<Matrix>& values() const { return values_; }

  Matrix eval(double t) const;

 private:
  TimeGrid grid_;
  std::vector<Matrix> values_;
};

// Time-varying coefficient of the model. Analytic variants evaluate
// exactly at any t; the sampled variant interpolates linearly.
class TimeVaryingMatrix {
 public:
  enum class Kind { Constant, AffineInT, Sinusoid, SampledGrid };

  // Empty constant; populated via the factories below.
  TimeVaryingMatrix() = default;

  static TimeVaryingMatrix constant(Matrix value);
  // m0 + t * m1
  static TimeVaryingMatrix affine(Matrix m0, Matrix m1);
  // amplitude * sin(omega * t + phase)
  static TimeVaryingMatrix sinusoid(Matrix amplitude, double omega, double phase = 0.0);
  static TimeVaryingMatrix sampled(GridFunction values);

  Kind kind() const { return kind_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }

  // Throws DomainError for t < 0 or, for sampled coefficients, t beyond the
  // sample grid (a roundoff-sized overshoot is clamped).
  Matrix eval(double t) const;

  bool is_constant() const { return kind_ == Kind::Constant; }

  const Matrix& m0() const { return m0_; }
  const Matrix& m1() const { return m1_; }
  double omega() const { return omega_; }
  double phase() const { return phase_; }
  const GridFunction& samples() const { return samples_; }

 private:
  Kind kind_ = Kind::Constant;
  int rows_ = 0;
  int cols_ = 0;
  Matrix m0_;  // Constant value / affine offset / sinusoid amplitude
  Matrix m1_;  // affine slope
  double omega_ = 0.0;
  double phase_ = 0.0;
  GridFunction samples_;
};

// Principal square root, inverse square root and inverse of a symmetric
// positive-definite matrix via symmetric eigendecomposition. Eigenvalues
// at or below 1e-12 * ||M|| raise SingularityError; asymmetry beyond
// 1e-10 * ||M|| raises ShapeError.
std::tuple<Matrix, Matrix, Matrix> sym_sqrt_inv(const Matrix& M);

// Square root of a symmetric positive-semidefinite matrix. Eigenvalues in
// [-1e-12 * ||M||, 0) are clamped to zero (roundoff negativity in
// covariances); anything more negative raises SingularityError.
Matrix psd_sqrt(const Matrix& M);

// True iff the smallest eigenvalue of symmetric M is >= -tol.
bool assert_psd(const Matrix& M, double tol);

// Smallest singular value (rank checks on noise loadings).
double min_singular_value(const Matrix& M);

}  // namespace stealthlq

#endif  // STEALTHLQ_COEFFS_HPP
