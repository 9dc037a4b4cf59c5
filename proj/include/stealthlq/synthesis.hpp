#ifndef STEALTHLQ_SYNTHESIS_HPP
#define STEALTHLQ_SYNTHESIS_HPP

#include <functional>

#include "stealthlq/model.hpp"
#include "stealthlq/ode.hpp"

namespace stealthlq {

// Constant matrices derived from the noise loadings. An exactly zero
// sigma*sigma^T yields all-zero blocks (degenerate noiseless mode used by
// deterministic checks); anything merely near-singular raises.
struct NoiseAlgebra {
  Matrix VV;        // sigma_V sigma_V^T
  Matrix WW;        // sigma_W sigma_W^T
  Matrix WW_inv;    // (sigma_W sigma_W^T)^-1
  Matrix WW_sqrt;   // (sigma_W sigma_W^T)^{1/2}
  Matrix WW_isqrt;  // (sigma_W sigma_W^T)^{-1/2}
};

NoiseAlgebra noise_algebra(const SystemModel& model);

// Conditional covariance R and derived filter blocks, all on the model grid.
struct FilterGains {
  GridFunction R;       // d x d
  GridFunction T_cal;   // d x m,  R H^T (WW)^-1
  GridFunction Theta;   // d x d,  T_cal H
  GridFunction Lambda;  // d x d,  T_cal WW T_cal^T
  double int_trace_QR = 0.0;  // integral of Tr(Q_t R_t) dt over [0, T]
};

// Agent LQ feedback gains.
struct AgentGains {
  GridFunction F;      // d x d, symmetric
  GridFunction f_vec;  // d x 1
  GridFunction K;      // d x d,  B S^-1 B^T
};

// The six coupled backward gains of the deterministic attack.
struct DetAttackGains {
  GridFunction Fc, Fa, Gc, Ga;  // d x d
  GridFunction f_rho, g_tau;    // d x 1
};

// Adaptive state-attack gains. F_phi is tau-independent; f_phi and c_phi
// exist only after completion for a particular tau.
struct AdaptiveRhoGains {
  GridFunction F_phi;  // 3d x 3d, symmetric
  GridFunction f_phi;  // 3d x 1, empty until completed
  GridFunction c_phi;  // 1 x 1, empty until completed
  GridFunction tau;    // m x 1, the path f_phi/c_phi were solved under
  bool completed = false;
};

// Outer-level observation-attack gains: the forward adjoint pair and the
// synthesized optimal tau, all indexed by forward time.
struct AdaptiveTauGains {
  GridFunction F_tau;  // 3d x 3d, symmetric, F_tau(0) = 0
  GridFunction f_tau;  // 3d x 1, f_tau(0) = 0
  Vector Phi0;         // Concat(x0, x0, 0)
  GridFunction G;      // 3d x m, Concat(0, T_cal, -T_cal)
  GridFunction Q_F;    // 3d x m, F_phi G WW + e_dx H^T
  GridFunction tau_star;         // m x 1
  GridFunction f_phi_reflected;  // 3d x 1, U_{T-t} from the closed-loop pass
  GridFunction c_phi_reflected;  // 1 x 1, integrated alongside U
  // Forward-time derivative of f_phi_reflected at the nodes, taken from the
  // closed-loop vector field (supports dense cubic re-evaluation of tau*).
  GridFunction f_phi_reflected_deriv;  // 3d x 1
};

// Cubic Hermite evaluation of a grid path with stored node derivatives.
Matrix hermite_eval(const GridFunction& values, const GridFunction& derivs, double t);

// Time-continuous coefficient assembly for the adaptive systems
// (drift/cost blocks of the augmented state Concat(xc_hat, xa_hat, dx)).
// Holds references to its inputs; keep them alive while evaluating.
class AdaptiveCoeffs {
 public:
  AdaptiveCoeffs(const SystemModel& model, const FilterGains& filter,
                 const AgentGains& agent);

  int d() const { return d_; }
  int m() const { return m_; }
  const NoiseAlgebra& noise() const { return noise_; }
  const Matrix& e_xc() const { return e_xc_; }
  const Matrix& e_xa() const { return e_xa_; }
  const Matrix& e_dx() const { return e_dx_; }
  Vector phi0() const;

  Matrix D_phi(double t) const;    // 3d x 3d drift
  Vector d_phi(double t) const;    // 3d affine drift
  Matrix O(double t) const;        // 3d x 3d control quadratic
  Matrix Q_phi(double t) const;    // 3d x 3d state cost
  Vector ell_phi(double t) const;  // 3d state-linear cost
  Matrix Sigma_phi(double t) const;  // 3d x 3d innovation covariance
  double C_phi(double t) const;      // scalar cost offset
  Matrix G(double t) const;          // 3d x m tau loading in the drift
  Matrix Q_F(double t, const Matrix& F_phi_t) const;  // 3d x m
  Matrix P_inv(double t) const;

 private:
  const SystemModel* model_;
  const FilterGains* filter_;
  const AgentGains* agent_;
  NoiseAlgebra noise_;
  int d_, m_;
  Matrix e_xc_, e_xa_, e_dx_;  // 3d x d selectors
};

// Riccati flow of the conditional covariance (forward from R0) plus the
// derived filter blocks.
FilterGains solve_filter(const SystemModel& model);

// Agent feedback gains (backward from zero terminal data).
AgentGains solve_agent(const SystemModel& model);

// Horizon bound below which the deterministic-attack system is guaranteed
// solvable; returns +infinity when the denominator degenerates. Sufficient,
// not necessary: informational only.
double existence_bound(const SystemModel& model, const FilterGains& filter,
                       const AgentGains& agent);

// The six coupled backward ODEs of the deterministic attack, integrated as
// one stacked state. DivergenceError messages carry the existence bound.
DetAttackGains solve_det_attack(const SystemModel& model, const FilterGains& filter,
                                const AgentGains& agent);

// Backward Riccati flow of F_phi (tau-independent part only).
AdaptiveRhoGains solve_adaptive_rho(const SystemModel& model, const FilterGains& filter,
                                    const AgentGains& agent);

// Forward (F_tau, f_tau) pass plus the time-reflected closed-loop pass that
// realizes (tau*, f_phi) as paths.
AdaptiveTauGains solve_adaptive_tau(const SystemModel& model, const FilterGains& filter,
                                    const AgentGains& agent,
                                    const AdaptiveRhoGains& rho_gains);

// Completes (f_phi, c_phi) for a given deterministic tau path.
AdaptiveRhoGains solve_f_phi_c_phi(const SystemModel& model, const FilterGains& filter,
                                   const AgentGains& agent, const AdaptiveRhoGains& rho_gains,
                                   const GridFunction& tau);

// Same, with tau supplied as a dense function of time (used when a path has
// a closed-form evaluator; avoids the interpolation floor of a grid path).
AdaptiveRhoGains solve_f_phi_c_phi(const SystemModel& model, const FilterGains& filter,
                                   const AgentGains& agent, const AdaptiveRhoGains& rho_gains,
                                   const std::function<Vector(double)>& tau_fn,
                                   const GridFunction& tau_samples);

// Inner-problem value 0.5 Phi0' F_phi(0) Phi0 + Phi0' f_phi(0) + c_phi(0).
// The full adaptive objective equals this minus lambda * int Tr(Q R) dt.
double adaptive_value(const AdaptiveRhoGains& completed, const Vector& Phi0);

// Pointwise re-evaluation of the optimal-tau formula from stored gains.
GridFunction tau_star_pointwise(const AdaptiveCoeffs& coeffs, const AdaptiveRhoGains& rho_gains,
                                const AdaptiveTauGains& tau_gains, const GridFunction& f_phi);

}  // namespace stealthlq

#endif  // STEALTHLQ_SYNTHESIS_HPP
