#ifndef STEALTHLQ_MULTIROUND_HPP
#define STEALTHLQ_MULTIROUND_HPP

#include "stealthlq/evaluate.hpp"

namespace stealthlq {

struct RoundRecord {
  int round = 0;  // 0 is the attack-free baseline
  double rho_sup = 0.0;
  double tau_sup = 0.0;
  double D = 0.0;
  double S = 0.0;
  double objective = 0.0;
};

struct MultiroundResult {
  std::vector<RoundRecord> rounds;
  // Model state after the last completed fold (exposes the coefficient
  // updates for inspection).
  SystemModel final_model;
  bool diverged = false;
  int failed_round = -1;
  std::string error;
};

// Repeated attacker/defender interaction with deterministic attacks: after
// each round the defender folds (rho*, tau*) into (a, h) as sampled-grid
// coefficients and re-solves its gains; the attacker re-optimizes against
// the updated model. Divergence in a round flags the result and returns the
// rounds completed so far.
//
// With use_adaptive set, each round synthesizes the adaptive attack instead
// and folds its closed-loop mean state-attack path together with tau*; the
// recorded metrics evaluate that deterministic mean-path equivalent.
MultiroundResult run_rounds(const SystemModel& model, double lambda, int n_rounds,
                            bool use_adaptive = false);

}  // namespace stealthlq

#endif  // STEALTHLQ_MULTIROUND_HPP
