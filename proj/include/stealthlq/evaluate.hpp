#ifndef STEALTHLQ_EVALUATE_HPP
#define STEALTHLQ_EVALUATE_HPP

#include <json.hpp>

#include "stealthlq/detect.hpp"

namespace stealthlq {

// Joint mean/covariance of Concat(X^c, X_hat^a) under a deterministic
// attack. The covariance flow carries no attack term; it is recomputed per
// call and its attack-invariance is asserted by tests, not assumed here.
struct MomentState {
  GridFunction mean;   // 2d x 1
  GridFunction Sigma;  // 2d x 2d
};

MomentState solve_moments(const SystemModel& model, const FilterGains& filter,
                          const AgentGains& agent, const GridFunction* rho,
                          const GridFunction* tau);

struct ObjectiveReport {
  double D = 0.0;
  double S = 0.0;
  double rho_energy = 0.0;
  double objective = 0.0;  // S - lambda * D + rho_energy
  double se_D = 0.0;
  double se_S = 0.0;
  double se_energy = 0.0;
  double se_objective = 0.0;
  std::string method;  // "exact-quadrature" | "monte-carlo"
  int n_paths = 0;
  std::uint64_t base_seed = 0;
};

nlohmann::json objective_report_to_json(const ObjectiveReport& report);

// Expected agent cost under a deterministic attack, by quadrature of the
// Gaussian moment expansion.
double exact_D(const SystemModel& model, const FilterGains& filter, const AgentGains& agent,
               const GridFunction& rho, const GridFunction& tau);

// Full attacker objective for a deterministic attack, all three components
// by exact quadrature.
ObjectiveReport exact_objective(const SystemModel& model, const FilterGains& filter,
                                const AgentGains& agent, const GridFunction& rho,
                                const GridFunction& tau);

// Monte Carlo estimate for any strategy: left-endpoint Riemann sums per
// path, plain sample standard errors.
ObjectiveReport mc_objective(const SystemModel& model, const FilterGains& filter,
                             const AgentGains& agent, const AttackStrategy& strategy,
                             int n_paths, std::uint64_t base_seed, int workers);

}  // namespace stealthlq

#endif  // STEALTHLQ_EVALUATE_HPP
