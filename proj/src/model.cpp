#include "stealthlq/model.hpp"

#include <cmath>

namespace stealthlq {

using nlohmann::json;

namespace {

bool shape_ok(const TimeVaryingMatrix& tvm, int rows, int cols) {
  return tvm.rows() == rows && tvm.cols() == cols;
}

// Definiteness checks are sampled at every grid node.
void check_definite(const SystemModel& model, const TimeVaryingMatrix& tvm,
                    const std::string& name, bool strict,
                    std::vector<std::string>& out) {
  for (int k = 0; k < model.horizon.n_nodes(); ++k) {
    const Matrix v = tvm.eval(model.horizon.node(k));
    if ((v - v.transpose()).norm() > 1e-10 * std::max(1.0, v.norm())) {
      out.push_back(name + " not symmetric at t = " + std::to_string(model.horizon.node(k)));
      return;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig((v + v.transpose()) / 2.0,
                                              Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    if (strict ? (lo <= 1e-12 * std::max(1.0, v.norm()))
               : (lo < -1e-10 * std::max(1.0, v.norm()))) {
      out.push_back(name + (strict ? " not positive definite" : " not positive semidefinite"));
      return;
    }
  }
}

}  // namespace

std::vector<std::string> validate(const SystemModel& model) {
  std::vector<std::string> out;
  if (model.d < 1 || model.c < 1 || model.m < 1 || model.p < 1 || model.q < 1) {
    out.push_back("dimensions must all be positive");
    return out;
  }
  if (model.d > model.p) out.push_back("d > p (state noise cannot span the state space)");
  if (model.m > model.q) out.push_back("m > q (observation noise cannot span the observation space)");

  if (!shape_ok(model.A, model.d, model.d)) out.push_back("A has wrong shape");
  if (!shape_ok(model.B, model.d, model.c)) out.push_back("B has wrong shape");
  if (!shape_ok(model.H, model.m, model.d)) out.push_back("H has wrong shape");
  if (!shape_ok(model.a_drift, model.d, 1)) out.push_back("a has wrong shape");
  if (!shape_ok(model.h_obs, model.m, 1)) out.push_back("h has wrong shape");
  if (model.sigma_V.rows() != model.d || model.sigma_V.cols() != model.p) {
    out.push_back("sigma_V has wrong shape");
  }
  if (model.sigma_W.rows() != model.m || model.sigma_W.cols() != model.q) {
    out.push_back("sigma_W has wrong shape");
  }
  if (model.x0.size() != model.d) out.push_back("x0 has wrong size");
  if (model.R0.rows() != model.d || model.R0.cols() != model.d) {
    out.push_back("R0 has wrong shape");
  }
  if (!shape_ok(model.Q, model.d, model.d)) out.push_back("Q has wrong shape");
  if (!shape_ok(model.S, model.c, model.c)) out.push_back("S has wrong shape");
  if (!shape_ok(model.r_ref, model.d, 1)) out.push_back("r has wrong shape");
  if (!shape_ok(model.P, model.d, model.d)) out.push_back("P has wrong shape");
  if (!out.empty()) return out;

  if (min_singular_value(model.sigma_V) <= 1e-10) out.push_back("sigma_V rank-deficient");
  if (min_singular_value(model.sigma_W) <= 1e-10) out.push_back("sigma_W rank-deficient");

  if (!assert_psd(model.R0, 1e-10 * std::max(1.0, model.R0.norm()))) {
    out.push_back("R0 not positive semidefinite");
  }
  check_definite(model, model.Q, "Q", /*strict=*/false, out);
  check_definite(model, model.S, "S", /*strict=*/true, out);
  check_definite(model, model.P, "P", /*strict=*/true, out);

  if (!(model.lambda >= 0.0)) out.push_back("lambda must be >= 0");
  if (!(model.horizon.T > 0.0) || model.horizon.n_steps < 1) {
    out.push_back("horizon must have T > 0 and n_steps >= 1");
  }
  return out;
}

namespace {

SystemModel make_1d_mean_revert() {
  SystemModel model;
  model.d = model.c = model.m = model.p = model.q = 1;
  auto scalar = [](double v) {
    return TimeVaryingMatrix::constant(Matrix::Constant(1, 1, v));
  };
  model.A = scalar(-1.0);
  model.B = scalar(1.0);
  model.H = scalar(1.0);
  model.a_drift = scalar(0.0);
  model.h_obs = scalar(0.0);
  model.sigma_V = Matrix::Constant(1, 1, 0.6);
  model.sigma_W = Matrix::Constant(1, 1, 0.4);
  model.x0 = Vector::Constant(1, 0.5);
  model.R0 = Matrix::Zero(1, 1);
  model.Q = scalar(10.0);
  model.S = scalar(1.0);
  model.r_ref = scalar(0.0);
  model.P = scalar(1.0);
  model.lambda = 0.3;
  model.horizon = TimeGrid(0.5, 1000);
  return model;
}

SystemModel make_2d_tracking() {
  SystemModel model;
  model.d = model.c = model.m = model.p = model.q = 2;
  const Matrix I2 = Matrix::Identity(2, 2);
  model.A = TimeVaryingMatrix::constant(Matrix::Zero(2, 2));
  model.B = TimeVaryingMatrix::constant(I2);
  Matrix Hm(2, 2);
  Hm << 2, 1, 0, 3;
  model.H = TimeVaryingMatrix::constant(Hm);
  model.a_drift = TimeVaryingMatrix::constant(Matrix::Zero(2, 1));
  model.h_obs = TimeVaryingMatrix::constant(Matrix::Zero(2, 1));
  Matrix sv(2, 2);
  sv << 0.1, 0.05, 0.05, 0.1;
  model.sigma_V = sv;
  model.sigma_W = 0.1 * I2;
  model.x0 = Vector(2);
  model.x0 << 0.2, 0.0;
  model.R0 = 0.001 * I2;
  model.Q = TimeVaryingMatrix::affine(5.0 * I2, 5.0 * I2);  // (5 + 5t) I
  model.S = TimeVaryingMatrix::constant(0.5 * I2);
  Matrix r1 = Matrix::Zero(2, 1);
  Matrix rslope(2, 1);
  rslope << 2.0, 2.0;
  model.r_ref = TimeVaryingMatrix::affine(r1, rslope);  // (2t, 2t)
  model.P = TimeVaryingMatrix::constant(I2);
  model.lambda = 0.3;
  model.horizon = TimeGrid(0.5, 1000);
  return model;
}

}  // namespace

ScenarioPreset preset(const std::string& name) {
  ScenarioPreset sp;
  sp.name = name;
  sp.mc_paths = 25000;
  sp.base_seed = 20250801;
  if (name == "1d-mean-revert") {
    sp.model = make_1d_mean_revert();
  } else if (name == "1d-comparison") {
    sp.model = make_1d_mean_revert();
    sp.model.sigma_V = Matrix::Constant(1, 1, 1.0);
    sp.model.sigma_W = Matrix::Constant(1, 1, 1.0);
    sp.model.R0 = Matrix::Constant(1, 1, 2.0);
  } else if (name == "2d-tracking") {
    sp.model = make_2d_tracking();
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return sp;
}

std::vector<std::string> preset_names() {
  return {"1d-mean-revert", "1d-comparison", "2d-tracking"};
}

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("matrix: expected nested array");
  const size_t rows = j.size();
  // A flat array is a column vector.
  if (!j[0].is_array()) {
    Matrix M(static_cast<Eigen::Index>(rows), 1);
    for (size_t i = 0; i < rows; ++i) M(static_cast<Eigen::Index>(i), 0) = j[i].get<double>();
    return M;
  }
  const size_t cols = j[0].size();
  Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) throw ConfigError("matrix: ragged rows");
    for (size_t k = 0; k < cols; ++k) {
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
  }
  return M;
}

json tvm_to_json(const TimeVaryingMatrix& tvm) {
  json j;
  switch (tvm.kind()) {
    case TimeVaryingMatrix::Kind::Constant:
      j["kind"] = "constant";
      j["value"] = matrix_to_json(tvm.m0());
      break;
    case TimeVaryingMatrix::Kind::AffineInT:
      j["kind"] = "affine";
      j["m0"] = matrix_to_json(tvm.m0());
      j["m1"] = matrix_to_json(tvm.m1());
      break;
    case TimeVaryingMatrix::Kind::Sinusoid:
      j["kind"] = "sinusoid";
      j["amplitude"] = matrix_to_json(tvm.m0());
      j["omega"] = tvm.omega();
      j["phase"] = tvm.phase();
      break;
    case TimeVaryingMatrix::Kind::SampledGrid: {
      j["kind"] = "sampled";
      json vals = json::array();
      for (const auto& v : tvm.samples().values()) vals.push_back(matrix_to_json(v));
      j["values"] = std::move(vals);
      break;
    }
  }
  return j;
}

TimeVaryingMatrix tvm_from_json(const json& j, const TimeGrid& grid) {
  if (!j.is_object() || !j.contains("kind")) {
    throw ConfigError("time-varying coefficient: expected object with 'kind'");
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") return TimeVaryingMatrix::constant(matrix_from_json(j.at("value")));
  if (kind == "affine") {
    return TimeVaryingMatrix::affine(matrix_from_json(j.at("m0")), matrix_from_json(j.at("m1")));
  }
  if (kind == "sinusoid") {
    return TimeVaryingMatrix::sinusoid(matrix_from_json(j.at("amplitude")),
                                       j.at("omega").get<double>(),
                                       j.value("phase", 0.0));
  }
  if (kind == "sampled") {
    const json& vals = j.at("values");
    std::vector<Matrix> values;
    values.reserve(vals.size());
    for (const auto& v : vals) values.push_back(matrix_from_json(v));
    return TimeVaryingMatrix::sampled(GridFunction(grid, std::move(values)));
  }
  throw ConfigError("time-varying coefficient: unknown kind '" + kind + "'");
}

json model_to_json(const SystemModel& model) {
  json j;
  j["dims"] = {{"d", model.d}, {"c", model.c}, {"m", model.m}, {"p", model.p}, {"q", model.q}};
  j["A"] = tvm_to_json(model.A);
  j["B"] = tvm_to_json(model.B);
  j["H"] = tvm_to_json(model.H);
  j["a"] = tvm_to_json(model.a_drift);
  j["h"] = tvm_to_json(model.h_obs);
  j["sigma_V"] = matrix_to_json(model.sigma_V);
  j["sigma_W"] = matrix_to_json(model.sigma_W);
  j["x0"] = matrix_to_json(model.x0);
  j["R0"] = matrix_to_json(model.R0);
  j["Q"] = tvm_to_json(model.Q);
  j["S"] = tvm_to_json(model.S);
  j["r"] = tvm_to_json(model.r_ref);
  j["P"] = tvm_to_json(model.P);
  j["lambda"] = model.lambda;
  j["horizon"] = {{"T", model.horizon.T}, {"n_steps", model.horizon.n_steps}};
  return j;
}

SystemModel model_from_json(const json& j) {
  SystemModel model;
  const json& dims = j.at("dims");
  model.d = dims.at("d").get<int>();
  model.c = dims.at("c").get<int>();
  model.m = dims.at("m").get<int>();
  model.p = dims.at("p").get<int>();
  model.q = dims.at("q").get<int>();
  model.horizon = TimeGrid(j.at("horizon").at("T").get<double>(),
                           j.at("horizon").at("n_steps").get<int>());
  model.A = tvm_from_json(j.at("A"), model.horizon);
  model.B = tvm_from_json(j.at("B"), model.horizon);
  model.H = tvm_from_json(j.at("H"), model.horizon);
  model.a_drift = tvm_from_json(j.at("a"), model.horizon);
  model.h_obs = tvm_from_json(j.at("h"), model.horizon);
  model.sigma_V = matrix_from_json(j.at("sigma_V"));
  model.sigma_W = matrix_from_json(j.at("sigma_W"));
  model.x0 = matrix_from_json(j.at("x0"));
  model.R0 = matrix_from_json(j.at("R0"));
  model.Q = tvm_from_json(j.at("Q"), model.horizon);
  model.S = tvm_from_json(j.at("S"), model.horizon);
  model.r_ref = tvm_from_json(j.at("r"), model.horizon);
  model.P = tvm_from_json(j.at("P"), model.horizon);
  model.lambda = j.at("lambda").get<double>();
  return model;
}

}  // namespace stealthlq
