#include <doctest.h>

#include "stealthlq/model.hpp"

using namespace stealthlq;

TEST_CASE("presets carry the published scenario parameters") {
  const auto one_d = preset("1d-mean-revert");
  CHECK(one_d.model.d == 1);
  CHECK(one_d.model.x0(0) == 0.5);
  CHECK(one_d.model.R0(0, 0) == 0.0);
  CHECK(one_d.model.A.eval(0.17)(0, 0) == -1.0);
  CHECK(one_d.model.Q.eval(0.4)(0, 0) == 10.0);
  CHECK(one_d.model.sigma_V(0, 0) == 0.6);
  CHECK(one_d.model.sigma_W(0, 0) == 0.4);
  CHECK(one_d.model.horizon.T == 0.5);
  CHECK(one_d.model.horizon.n_steps == 1000);
  CHECK(one_d.mc_paths == 25000);

  const auto cmp = preset("1d-comparison");
  CHECK(cmp.model.sigma_V(0, 0) == 1.0);
  CHECK(cmp.model.sigma_W(0, 0) == 1.0);
  CHECK(cmp.model.R0(0, 0) == 2.0);

  const auto two_d = preset("2d-tracking");
  CHECK(two_d.model.d == 2);
  CHECK(two_d.model.H.eval(0.0)(0, 0) == 2.0);
  CHECK(two_d.model.H.eval(0.0)(1, 1) == 3.0);
  const Vector r_mid = two_d.model.r_ref.eval(0.25);
  CHECK(r_mid(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r_mid(1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(two_d.model.Q.eval(0.5)(0, 0) == doctest::Approx(7.5));
  CHECK(two_d.model.S.eval(0.0)(1, 1) == 0.5);
  CHECK(two_d.model.R0(0, 0) == 0.001);

  CHECK_THROWS_AS(preset("nope"), ConfigError);
}

TEST_CASE("every preset validates clean") {
  for (const auto& name : preset_names()) {
    const auto violations = validate(preset(name).model);
    CAPTURE(name);
    CHECK(violations.empty());
  }
}

TEST_CASE("validate reports rank and definiteness violations") {
  auto model = preset("1d-mean-revert").model;
  model.sigma_W = Matrix::Zero(1, 1);
  auto violations = validate(model);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].find("sigma_W") != std::string::npos);

  model = preset("1d-mean-revert").model;
  model.S = TimeVaryingMatrix::constant(Matrix::Zero(1, 1));
  violations = validate(model);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].find("S not positive definite") != std::string::npos);

  model = preset("1d-mean-revert").model;
  model.lambda = -0.1;
  violations = validate(model);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].find("lambda") != std::string::npos);
}

TEST_CASE("config round trip reproduces coefficient evaluations bit for bit") {
  for (const auto& name : preset_names()) {
    const auto original = preset(name).model;
    const auto reloaded = model_from_json(model_to_json(original));
    const TimeGrid& grid = original.horizon;
    for (int k = 0; k < grid.n_nodes(); k += 97) {
      const double t = grid.node(k);
      CHECK((original.A.eval(t) - reloaded.A.eval(t)).norm() == 0.0);
      CHECK((original.Q.eval(t) - reloaded.Q.eval(t)).norm() == 0.0);
      CHECK((original.r_ref.eval(t) - reloaded.r_ref.eval(t)).norm() == 0.0);
      CHECK((original.P.eval(t) - reloaded.P.eval(t)).norm() == 0.0);
    }
    CHECK((original.sigma_V - reloaded.sigma_V).norm() == 0.0);
    CHECK((original.x0 - reloaded.x0).norm() == 0.0);
    CHECK(original.lambda == reloaded.lambda);
  }
}

TEST_CASE("sampled coefficients survive the config round trip") {
  auto model = preset("1d-mean-revert").model;
  std::vector<Matrix> vals(static_cast<size_t>(model.horizon.n_nodes()));
  for (int k = 0; k < model.horizon.n_nodes(); ++k) {
    vals[static_cast<size_t>(k)] = Matrix::Constant(1, 1, std::sin(7.0 * model.horizon.node(k)));
  }
  model.a_drift = TimeVaryingMatrix::sampled(GridFunction(model.horizon, vals));
  const auto reloaded = model_from_json(model_to_json(model));
  for (int k = 0; k < model.horizon.n_nodes(); k += 131) {
    const double t = model.horizon.node(k);
    CHECK(model.a_drift.eval(t)(0, 0) == reloaded.a_drift.eval(t)(0, 0));
  }
}
