#include <doctest.h>

#include <random>

#include "stealthlq/coeffs.hpp"

using namespace stealthlq;

TEST_CASE("time-varying coefficient evaluation") {
  const auto c = TimeVaryingMatrix::constant(Matrix::Constant(1, 1, -1.0));
  CHECK(c.eval(0.3)(0, 0) == -1.0);

  const Matrix I2 = Matrix::Identity(2, 2);
  const auto q = TimeVaryingMatrix::affine(5.0 * I2, 5.0 * I2);
  CHECK((q.eval(0.5) - 7.5 * I2).norm() == 0.0);

  TimeGrid grid(1.0, 1);
  GridFunction samples(grid, {Matrix::Zero(1, 1), Matrix::Constant(1, 1, 2.0)});
  const auto s = TimeVaryingMatrix::sampled(samples);
  CHECK(s.eval(0.25)(0, 0) == doctest::Approx(0.5).epsilon(1e-14));

  CHECK_THROWS_AS(s.eval(1.5), DomainError);
  CHECK_THROWS_AS(s.eval(-0.2), DomainError);

  const auto sine = TimeVaryingMatrix::sinusoid(Matrix::Constant(1, 1, 2.0), M_PI);
  CHECK(sine.eval(0.5)(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("sampled evaluation is exact at nodes") {
  TimeGrid grid(0.5, 1000);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-1, 1);
  std::vector<Matrix> vals(static_cast<size_t>(grid.n_nodes()));
  for (auto& v : vals) v = Matrix::Constant(1, 1, unif(rng));
  GridFunction g(grid, vals);
  for (int k : {0, 1, 313, 999, 1000}) {
    CHECK(g.eval(grid.node(k))(0, 0) == vals[static_cast<size_t>(k)](0, 0));
  }
}

TEST_CASE("linear interpolation is exact for affine data") {
  TimeGrid grid(2.0, 40);
  std::vector<Matrix> vals(static_cast<size_t>(grid.n_nodes()));
  for (int k = 0; k < grid.n_nodes(); ++k) {
    vals[static_cast<size_t>(k)] = Matrix::Constant(1, 1, 3.0 - 2.0 * grid.node(k));
  }
  GridFunction g(grid, vals);
  for (double t : {0.013, 0.7, 1.111, 1.999}) {
    CHECK(g.eval(t)(0, 0) == doctest::Approx(3.0 - 2.0 * t).epsilon(1e-13));
  }
}

TEST_CASE("symmetric square root and inverses") {
  {
    const auto [root, root_inv, inv] = sym_sqrt_inv(Matrix::Constant(1, 1, 0.16));
    CHECK(root(0, 0) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(root_inv(0, 0) == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(inv(0, 0) == doctest::Approx(6.25).epsilon(1e-14));
  }
  {
    const Matrix I3 = Matrix::Identity(3, 3);
    const auto [root, root_inv, inv] = sym_sqrt_inv(I3);
    CHECK((root - I3).norm() < 1e-14);
    CHECK((root_inv - I3).norm() < 1e-14);
    CHECK((inv - I3).norm() < 1e-14);
  }
  {
    Matrix M = Matrix::Zero(2, 2);
    M(0, 0) = 4.0;
    M(1, 1) = 9.0;
    const auto [root, root_inv, inv] = sym_sqrt_inv(M);
    CHECK(root(0, 0) == doctest::Approx(2.0));
    CHECK(root(1, 1) == doctest::Approx(3.0));
    CHECK(root_inv(0, 0) == doctest::Approx(0.5));
    CHECK(root_inv(1, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(inv(0, 0) == doctest::Approx(0.25));
    CHECK(inv(1, 1) == doctest::Approx(1.0 / 9.0));
  }

  CHECK_THROWS_AS(sym_sqrt_inv(Matrix::Zero(2, 2)), SingularityError);
  Matrix asym(2, 2);
  asym << 1, 0.5, 0.2, 1;
  CHECK_THROWS_AS(sym_sqrt_inv(asym), ShapeError);
}

TEST_CASE("square-root round trip on random SPD matrices") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> gauss;
  for (int dim = 1; dim <= 6; ++dim) {
    for (int rep = 0; rep < 20; ++rep) {
      Matrix G(dim, dim);
      for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) G(i, j) = gauss(rng);
      }
      const Matrix M = G * G.transpose() + 0.5 * Matrix::Identity(dim, dim);
      const auto [root, root_inv, inv] = sym_sqrt_inv(M);
      CHECK((root * root - M).norm() <= 1e-10 * M.norm());
      CHECK((root * root_inv - Matrix::Identity(dim, dim)).norm() < 1e-10);
      CHECK((M * inv - Matrix::Identity(dim, dim)).norm() < 1e-9);
    }
  }
}

TEST_CASE("psd predicate and psd square root") {
  CHECK(assert_psd(Matrix::Zero(3, 3), 1e-10));
  Matrix indef = Matrix::Zero(2, 2);
  indef(0, 0) = 1.0;
  indef(1, 1) = -1.0;
  CHECK_FALSE(assert_psd(indef, 1e-10));

  CHECK(psd_sqrt(Matrix::Zero(2, 2)).norm() == 0.0);
  CHECK_THROWS_AS(psd_sqrt(indef), SingularityError);
}
