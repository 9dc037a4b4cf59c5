#include "stealthlq/coeffs.hpp"

#include <cmath>
#include <utility>

namespace stealthlq {

TimeGrid::TimeGrid(double horizon, int steps) : T(horizon), n_steps(steps) {
  if (!(T > 0.0)) throw DomainError("TimeGrid: horizon must be positive");
  if (n_steps < 1) throw DomainError("TimeGrid: need at least one step");
}

int TimeGrid::node_index(double t) const {
  const double u = t / step();
  const double k = std::round(u);
  if (std::abs(u - k) <= 1e-9 * std::max(1.0, std::abs(u)) && k >= 0 && k <= n_steps) {
    return static_cast<int>(k);
  }
  return -1;
}

GridFunction::GridFunction(TimeGrid grid, std::vector<Matrix> values)
    : grid_(grid), values_(std::move(values)) {
  if (static_cast<int>(values_.size()) != grid_.n_nodes()) {
    throw ShapeError("GridFunction: values.size() must equal n_steps + 1");
  }
  for (const auto& v : values_) {
    if (v.rows() != values_[0].rows() || v.cols() != values_[0].cols()) {
      throw ShapeError("GridFunction: all node values must share one shape");
    }
  }
}

GridFunction GridFunction::constant(const TimeGrid& grid, const Matrix& value) {
  return GridFunction(grid, std::vector<Matrix>(static_cast<size_t>(grid.n_nodes()), value));
}

Matrix GridFunction::eval(double t) const {
  const double h = grid_.step();
  const double slack = 1e-9 * std::max(1.0, grid_.T);
  if (t < -slack || t > grid_.T + slack) {
    throw DomainError("GridFunction: t outside [0, T]");
  }
  const int snap = grid_.node_index(t);
  if (snap >= 0) return values_[static_cast<size_t>(snap)];
  int k = static_cast<int>(std::floor(t / h));
  k = std::max(0, std::min(k, grid_.n_steps - 1));
  const double theta = (t - k * h) / h;
  return (1.0 - theta) * values_[static_cast<size_t>(k)] +
         theta * values_[static_cast<size_t>(k + 1)];
}

TimeVaryingMatrix TimeVaryingMatrix::constant(Matrix value) {
  TimeVaryingMatrix tvm;
  tvm.kind_ = Kind::Constant;
  tvm.rows_ = static_cast<int>(value.rows());
  tvm.cols_ = static_cast<int>(value.cols());
  tvm.m0_ = std::move(value);
  return tvm;
}

TimeVaryingMatrix TimeVaryingMatrix::affine(Matrix m0, Matrix m1) {
  if (m0.rows() != m1.rows() || m0.cols() != m1.cols()) {
    throw ShapeError("TimeVaryingMatrix::affine: m0 and m1 shapes differ");
  }
  TimeVaryingMatrix tvm;
  tvm.kind_ = Kind::AffineInT;
  tvm.rows_ = static_cast<int>(m0.rows());
  tvm.cols_ = static_cast<int>(m0.cols());
  tvm.m0_ = std::move(m0);
  tvm.m1_ = std::move(m1);
  return tvm;
}

TimeVaryingMatrix TimeVaryingMatrix::sinusoid(Matrix amplitude, double omega, double phase) {
  TimeVaryingMatrix tvm;
  tvm.kind_ = Kind::Sinusoid;
  tvm.rows_ = static_cast<int>(amplitude.rows());
  tvm.cols_ = static_cast<int>(amplitude.cols());
  tvm.m0_ = std::move(amplitude);
  tvm.omega_ = omega;
  tvm.phase_ = phase;
  return tvm;
}

TimeVaryingMatrix TimeVaryingMatrix::sampled(GridFunction values) {
  TimeVaryingMatrix tvm;
  tvm.kind_ = Kind::SampledGrid;
  tvm.rows_ = values.rows();
  tvm.cols_ = values.cols();
  tvm.samples_ = std::move(values);
  return tvm;
}

Matrix TimeVaryingMatrix::eval(double t) const {
  if (t < -1e-12) throw DomainError("TimeVaryingMatrix: t < 0");
  switch (kind_) {
    case Kind::Constant:
      return m0_;
    case Kind::AffineInT:
      return m0_ + t * m1_;
    case Kind::Sinusoid:
      return std::sin(omega_ * t + phase_) * m0_;
    case Kind::SampledGrid:
      return samples_.eval(t);
  }
  throw Error("TimeVaryingMatrix: unreachable");
}

namespace {

void require_symmetric(const Matrix& M, const char* who) {
  if (M.rows() != M.cols()) throw ShapeError(std::string(who) + ": matrix not square");
  const double scale = std::max(1.0, M.norm());
  if ((M - M.transpose()).norm() > 1e-10 * scale) {
    throw ShapeError(std::string(who) + ": matrix not symmetric within tolerance");
  }
}

}  // namespace

std::tuple<Matrix, Matrix, Matrix> sym_sqrt_inv(const Matrix& M) {
  require_symmetric(M, "sym_sqrt_inv");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M);
  const Vector& ev = eig.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  if (ev.minCoeff() <= 1e-12 * scale) {
    throw SingularityError("sym_sqrt_inv: matrix numerically singular or indefinite");
  }
  const Matrix& U = eig.eigenvectors();
  const Vector sq = ev.cwiseSqrt();
  Matrix root = U * sq.asDiagonal() * U.transpose();
  Matrix root_inv = U * sq.cwiseInverse().asDiagonal() * U.transpose();
  Matrix inv = U * ev.cwiseInverse().asDiagonal() * U.transpose();
  return {std::move(root), std::move(root_inv), std::move(inv)};
}

Matrix psd_sqrt(const Matrix& M) {
  require_symmetric(M, "psd_sqrt");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M);
  Vector ev = eig.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 0.0);
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) < -1e-12 * std::max(scale, 1e-300)) {
      throw SingularityError("psd_sqrt: matrix has a negative eigenvalue beyond roundoff");
    }
    ev(i) = std::max(ev(i), 0.0);
  }
  return eig.eigenvectors() * ev.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

bool assert_psd(const Matrix& M, double tol) {
  if (M.rows() != M.cols()) throw ShapeError("assert_psd: matrix not square");
  Eigen::SelfAdjointEigenSolver<Matrix> eig((M + M.transpose()) / 2.0,
                                            Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -tol;
}

double min_singular_value(const Matrix& M) {
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues().size() > 0 ? svd.singularValues().minCoeff() : 0.0;
}

}  // namespace stealthlq
