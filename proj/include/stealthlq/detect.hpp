#ifndef STEALTHLQ_DETECT_HPP
#define STEALTHLQ_DETECT_HPP

#include <vector>

#include "stealthlq/sim.hpp"

namespace stealthlq {

// Discrepancy path induced by a deterministic attack, from the filtered-
// difference ODE (forward, 8th-order RK on the model grid).
GridFunction delta_x_ode(const SystemModel& model, const FilterGains& filter,
                         const GridFunction& rho, const GridFunction& tau);

// Pathwise log-likelihood of the observed innovation under a candidate
// deterministic attack; the candidate discrepancy comes from delta_x_ode.
double log_likelihood(const TrajectoryBundle& bundle, const GridFunction& candidate_rho,
                      const GridFunction& candidate_tau, const SystemModel& model,
                      const FilterGains& filter);

// Self-scored variant: reuses the bundle's own discrepancy and attack paths.
double log_likelihood(const TrajectoryBundle& bundle, const SystemModel& model);

// Exact stealthiness of a deterministic attack: one half the quadrature of
// (H dX + tau)' (WW)^-1 (H dX + tau) over the grid.
double stealthiness_closed_form(const GridFunction& delta_x, const GridFunction& tau,
                                const SystemModel& model);

struct Chi2Window {
  int start_step = 0;
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

// Non-overlapping windows of w steps tiling the horizon; the statistic is
// the normalized squared innovation increment sum, chi-square with w*m
// degrees of freedom under the attack-free model.
std::vector<Chi2Window> chi2_detector(const TrajectoryBundle& bundle, int window_steps);

// Residual of the Brownianity condition for deterministic attacks under
// commuting A: H z + tau with dz = A z + rho, z(0) = 0. Throws
// UnsupportedError when A does not commute with itself across times.
GridFunction detectability_residual(const GridFunction& rho, const GridFunction& tau,
                                    const SystemModel& model);

// Regularized upper incomplete gamma Q(a, x); the chi-square upper tail is
// Q(dof/2, x/2).
double gamma_q(double a, double x);
double chi2_upper_tail(double x, double dof);

// Asymptotic two-sample Kolmogorov-Smirnov p-value.
double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b);

}  // namespace stealthlq

#endif  // STEALTHLQ_DETECT_HPP
