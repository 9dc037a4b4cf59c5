#ifndef STEALTHLQ_MODEL_HPP
#define STEALTHLQ_MODEL_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "stealthlq/coeffs.hpp"

namespace stealthlq {

// The attacked LQG problem: every exogenous coefficient of the agent's
// tracking problem plus the attacker's trade-off parameters.
struct SystemModel {
  int d = 0;  // state
  int c = 0;  // control
  int m = 0;  // observation
  int p = 0;  // state-noise driving dimension
  int q = 0;  // observation-noise driving dimension

  TimeVaryingMatrix A;      // d x d
  TimeVaryingMatrix B;      // d x c
  TimeVaryingMatrix H;      // m x d
  TimeVaryingMatrix a_drift;  // d x 1
  TimeVaryingMatrix h_obs;    // m x 1
  Matrix sigma_V;           // d x p, constant
  Matrix sigma_W;           // m x q, constant

  Vector x0;   // prior mean, d
  Matrix R0;   // prior covariance, d x d, PSD

  TimeVaryingMatrix Q;      // d x d, PSD state cost
  TimeVaryingMatrix S;      // c x c, PD control cost
  TimeVaryingMatrix r_ref;  // d x 1 reference
  TimeVaryingMatrix P;      // d x d, PD state-attack penalty
  double lambda = 0.0;      // degradation weight, >= 0

  TimeGrid horizon;
};

struct ScenarioPreset {
  std::string name;
  SystemModel model;
  int mc_paths = 0;
  std::uint64_t base_seed = 0;
};

// Empty iff the model satisfies every structural invariant. Each entry
// names the offending field and the failed check; nothing throws.
std::vector<std::string> validate(const SystemModel& model);

// The built-in experiment configurations. Throws ConfigError for an
// unknown name.
ScenarioPreset preset(const std::string& name);
std::vector<std::string> preset_names();

// Config-format (de)serialization. Matrices are row-major nested arrays;
// time-varying coefficients are tagged unions mirroring TimeVaryingMatrix.
nlohmann::json model_to_json(const SystemModel& model);
SystemModel model_from_json(const nlohmann::json& j);

nlohmann::json tvm_to_json(const TimeVaryingMatrix& tvm);
TimeVaryingMatrix tvm_from_json(const nlohmann::json& j, const TimeGrid& grid);

nlohmann::json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace stealthlq

#endif  // STEALTHLQ_MODEL_HPP
