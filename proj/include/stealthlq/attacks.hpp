#ifndef STEALTHLQ_ATTACKS_HPP
#define STEALTHLQ_ATTACKS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "stealthlq/synthesis.hpp"

namespace stealthlq {

class NoiseStream;

// One representation for every attack the toolkit can simulate or score.
struct AttackStrategy {
  enum class Kind { Zero, DeterministicPath, GaussianWhite, Sinusoid, AdaptiveFeedback };

  Kind kind = Kind::Zero;

  // DeterministicPath and AdaptiveFeedback; tau_path also holds the
  // synthesized tau* of the adaptive attack.
  GridFunction rho_path;  // d x 1
  GridFunction tau_path;  // m x 1

  // GaussianWhite: i.i.d. draws per component per step, held constant over
  // the step. scale multiplies both (sensitivity knob; 1 = unit variance).
  double std_rho = 0.0;
  double std_tau = 0.0;
  std::uint64_t seed_offset = 0;

  // Sinusoid: rho_t = amplitude sin(omega t) 1_d, tau_t = -amplitude sin(omega t) 1_m.
  double amplitude = 0.0;
  double omega = 0.0;

  // AdaptiveFeedback: completed gains behind the linear feedback map.
  AdaptiveRhoGains rho_gains;

  static AttackStrategy zero();
  static AttackStrategy deterministic(GridFunction rho, GridFunction tau);
  static AttackStrategy gaussian_white(double std_rho, double std_tau,
                                       std::uint64_t seed_offset = 0);
  static AttackStrategy sinusoid(double amplitude, double omega);
  static AttackStrategy adaptive(AdaptiveRhoGains completed_gains, GridFunction tau);

  std::string kind_name() const;
  bool is_deterministic_path() const {
    return kind == Kind::Zero || kind == Kind::DeterministicPath || kind == Kind::Sinusoid;
  }
};

// Closed-loop means under the optimal deterministic attack.
struct DetMeanPath {
  GridFunction m_c;  // d x 1, E[X^c]
  GridFunction m_a;  // d x 1, E[X_hat^a]
};

// Optimal deterministic attack realized as grid paths, together with the
// closed-loop means it was synthesized from.
std::pair<AttackStrategy, DetMeanPath> build_optimal_det(const SystemModel& model,
                                                         const FilterGains& filter,
                                                         const AgentGains& agent,
                                                         const DetAttackGains& det_gains);

// Full hierarchical pipeline for the adaptive attack, plus the internal
// consistency gaps of the tau construction (node sup norms).
struct AdaptiveAttackBundle {
  AttackStrategy strategy;  // Kind::AdaptiveFeedback
  AdaptiveTauGains tau_gains;
  double reflection_gap = 0.0;   // backward f_phi vs time-reflected U
  double tau_formula_gap = 0.0;  // pointwise tau formula vs closed-loop tau*
};

AdaptiveAttackBundle build_optimal_adaptive(const SystemModel& model, const FilterGains& filter,
                                            const AgentGains& agent);

// Evaluate a strategy at grid node k. Feedback strategies need the current
// filtered states; GaussianWhite needs its per-path stream.
std::pair<Vector, Vector> eval_attack(const AttackStrategy& strategy, const SystemModel& model,
                                      int node, const Vector* x_c_hat = nullptr,
                                      const Vector* x_a_hat = nullptr,
                                      const Vector* delta_x = nullptr,
                                      NoiseStream* attack_stream = nullptr);

}  // namespace stealthlq

#endif  // STEALTHLQ_ATTACKS_HPP
