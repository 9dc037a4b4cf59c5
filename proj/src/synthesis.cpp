#include "stealthlq/synthesis.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace stealthlq {

namespace {

double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

Matrix invert_spd(const Matrix& M, const char* who) {
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success) {
    throw SingularityError(std::string(who) + ": matrix not positive definite");
  }
  return llt.solve(Matrix::Identity(M.rows(), M.cols()));
}

// Symmetrize the leading rows*rows block of a flattened stacked state.
void symmetrize_block(Vector& state, int rows, int offset = 0) {
  Eigen::Map<Matrix> M(state.data() + offset, rows, rows);
  M = ((M + M.transpose()) / 2.0).eval();
}

}  // namespace

NoiseAlgebra noise_algebra(const SystemModel& model) {
  NoiseAlgebra na;
  na.VV = model.sigma_V * model.sigma_V.transpose();
  na.WW = model.sigma_W * model.sigma_W.transpose();
  const int m = static_cast<int>(na.WW.rows());
  if (na.WW.norm() == 0.0) {
    na.WW_inv = Matrix::Zero(m, m);
    na.WW_sqrt = Matrix::Zero(m, m);
    na.WW_isqrt = Matrix::Zero(m, m);
  } else {
    auto [root, root_inv, inv] = sym_sqrt_inv(na.WW);
    na.WW_sqrt = std::move(root);
    na.WW_isqrt = std::move(root_inv);
    na.WW_inv = std::move(inv);
  }
  return na;
}

FilterGains solve_filter(const SystemModel& model) {
  const int d = model.d;
  const NoiseAlgebra na = noise_algebra(model);

  OdeProblem problem;
  problem.grid = model.horizon;
  problem.direction = Direction::Forward;
  problem.boundary_value = flatten(model.R0);
  problem.rhs = [&](double t, const Vector& state) {
    const Matrix R = unflatten(state, d, d);
    const Matrix A = model.A.eval(t);
    const Matrix H = model.H.eval(t);
    const Matrix RHt = R * H.transpose();
    Matrix dR = A * R + R * A.transpose() + na.VV - RHt * na.WW_inv * RHt.transpose();
    return flatten(dR);
  };
  problem.post_step = [d](Vector& state) { symmetrize_block(state, d); };

  const std::vector<Vector> states = integrate(problem);

  FilterGains gains;
  gains.R = to_grid_function(model.horizon, states, d, d);

  const int n = model.horizon.n_nodes();
  std::vector<Matrix> tcal(static_cast<size_t>(n)), theta(static_cast<size_t>(n)),
      lambda(static_cast<size_t>(n));
  std::vector<double> trQR(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double t = model.horizon.node(k);
    const Matrix& R = gains.R.at_node(k);
    const Matrix H = model.H.eval(t);
    tcal[static_cast<size_t>(k)] = R * H.transpose() * na.WW_inv;
    theta[static_cast<size_t>(k)] = tcal[static_cast<size_t>(k)] * H;
    lambda[static_cast<size_t>(k)] =
        tcal[static_cast<size_t>(k)] * na.WW * tcal[static_cast<size_t>(k)].transpose();
    trQR[static_cast<size_t>(k)] = (model.Q.eval(t) * R).trace();
  }
  gains.T_cal = GridFunction(model.horizon, std::move(tcal));
  gains.Theta = GridFunction(model.horizon, std::move(theta));
  gains.Lambda = GridFunction(model.horizon, std::move(lambda));
  gains.int_trace_QR = quadrature(model.horizon, trQR);
  return gains;
}

AgentGains solve_agent(const SystemModel& model) {
  const int d = model.d;

  auto K_of = [&](double t) -> Matrix {
    const Matrix B = model.B.eval(t);
    const Matrix S = model.S.eval(t);
    return B * invert_spd(S, "solve_agent: S") * B.transpose();
  };

  OdeProblem problem;
  problem.grid = model.horizon;
  problem.direction = Direction::Backward;
  problem.boundary_value = Vector::Zero(d * d + d);
  problem.rhs = [&](double t, const Vector& state) {
    const Matrix F = unflatten(state.head(d * d), d, d);
    const Vector f = state.tail(d);
    const Matrix A = model.A.eval(t);
    const Matrix K = K_of(t);
    const Matrix Q = model.Q.eval(t);
    const Vector a = model.a_drift.eval(t);
    const Vector r = model.r_ref.eval(t);
    Matrix dF = -(A.transpose() * F) - F * A - Q + F * K * F;
    Vector df = -(A.transpose() * f) - 2.0 * F * a + 2.0 * Q * r + F * K * f;
    Vector out(d * d + d);
    out << flatten(dF), df;
    return out;
  };
  problem.post_step = [d](Vector& state) { symmetrize_block(state, d); };

  const std::vector<Vector> states = integrate(problem);

  AgentGains gains;
  gains.F = to_grid_function(model.horizon, states, d, d, 0);
  gains.f_vec = to_grid_function(model.horizon, states, d, 1, d * d);
  std::vector<Matrix> kvals(static_cast<size_t>(model.horizon.n_nodes()));
  for (int k = 0; k < model.horizon.n_nodes(); ++k) {
    kvals[static_cast<size_t>(k)] = K_of(model.horizon.node(k));
  }
  gains.K = GridFunction(model.horizon, std::move(kvals));
  return gains;
}

double existence_bound(const SystemModel& model, const FilterGains& filter,
                       const AgentGains& agent) {
  const TimeGrid& grid = model.horizon;
  double nQ = 0, nFKF = 0, nPinv = 0, nLam = 0, nA = 0, nAKF = 0, nKF = 0;
  for (int k = 0; k < grid.n_nodes(); ++k) {
    const double t = grid.node(k);
    const Matrix A = model.A.eval(t);
    const Matrix& F = agent.F.at_node(k);
    const Matrix& K = agent.K.at_node(k);
    const Matrix KF = K * F;
    nQ = std::max(nQ, spectral_norm(model.Q.eval(t)));
    nFKF = std::max(nFKF, spectral_norm(F * KF));
    nPinv = std::max(nPinv, spectral_norm(invert_spd(model.P.eval(t), "existence_bound: P")));
    nLam = std::max(nLam, spectral_norm(filter.Lambda.at_node(k)));
    nA = std::max(nA, spectral_norm(A));
    nAKF = std::max(nAKF, spectral_norm(A - KF));
    nKF = std::max(nKF, spectral_norm(KF));
  }
  const double b = std::max(nA, nAKF) + nKF;
  const double p = 2.0 * model.lambda * std::max(nQ, nFKF) + b;
  const double q = std::max(nPinv, nLam) + b;
  const double denom = std::sqrt(p * q);
  if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
  return (M_PI / 2.0) / denom;
}

DetAttackGains solve_det_attack(const SystemModel& model, const FilterGains& filter,
                                const AgentGains& agent) {
  const int d = model.d;
  const int d2 = 2 * d;

  // Stacked state: the 2d x 2d block matrix M = [[Fc, Fa], [Gc, Ga]]
  // followed by n = Concat(f_rho, g_tau). M is symmetric along the flow.
  OdeProblem problem;
  problem.grid = model.horizon;
  problem.direction = Direction::Backward;
  problem.boundary_value = Vector::Zero(d2 * d2 + d2);
  problem.rhs = [&](double t, const Vector& state) {
    const Matrix M = unflatten(state.head(d2 * d2), d2, d2);
    const Vector nv = state.tail(d2);

    const Matrix A = model.A.eval(t);
    const Matrix F = agent.F.eval(t);
    const Vector fv = agent.f_vec.eval(t);
    const Matrix K = agent.K.eval(t);
    const Matrix Lam = filter.Lambda.eval(t);
    const Matrix Pinv = invert_spd(model.P.eval(t), "solve_det_attack: P");
    const Matrix Q = model.Q.eval(t);
    const Vector a = model.a_drift.eval(t);
    const Vector r = model.r_ref.eval(t);
    const Matrix KF = K * F;

    Matrix Pcal(d2, d2), Rcal(d2, d2), Qcal(d2, d2);
    Pcal << A, -KF, Matrix::Zero(d, d), A - KF;
    Rcal.setZero();
    Rcal.topLeftCorner(d, d) = Pinv;
    Rcal.bottomRightCorner(d, d) = Lam;
    Qcal.setZero();
    Qcal.topLeftCorner(d, d) = -2.0 * model.lambda * Q;
    Qcal.bottomRightCorner(d, d) = -2.0 * model.lambda * F * KF;

    const Vector drift = a - 0.5 * K * fv;
    Vector alpha(d2), zeta(d2);
    alpha << drift, drift;
    zeta << -2.0 * model.lambda * Q * r, model.lambda * F * K * fv;

    Matrix dM = -(Pcal.transpose() * M) - M * Pcal + M * Rcal * M - Qcal;
    Vector dn = -(Pcal.transpose() * nv) + M * Rcal * nv - M * alpha + zeta;

    Vector out(d2 * d2 + d2);
    out << flatten(dM), dn;
    return out;
  };
  problem.post_step = [d2](Vector& state) { symmetrize_block(state, d2); };

  std::vector<Vector> states;
  try {
    states = integrate(problem);
  } catch (const DivergenceError& e) {
    const double bound = existence_bound(model, filter, agent);
    throw DivergenceError(std::string(e.what()) +
                              " (deterministic attack system; existence bound T < " +
                              std::to_string(bound) + ", lambda = " +
                              std::to_string(model.lambda) + ")",
                          e.where());
  }

  DetAttackGains gains;
  const TimeGrid& grid = model.horizon;
  std::vector<Matrix> fc, fa, gc, ga, fr, gt;
  for (const auto& s : states) {
    const Matrix M = unflatten(s.head(d2 * d2), d2, d2);
    fc.push_back(M.topLeftCorner(d, d));
    fa.push_back(M.topRightCorner(d, d));
    gc.push_back(M.bottomLeftCorner(d, d));
    ga.push_back(M.bottomRightCorner(d, d));
    fr.push_back(s.segment(d2 * d2, d));
    gt.push_back(s.tail(d));
  }
  gains.Fc = GridFunction(grid, std::move(fc));
  gains.Fa = GridFunction(grid, std::move(fa));
  gains.Gc = GridFunction(grid, std::move(gc));
  gains.Ga = GridFunction(grid, std::move(ga));
  gains.f_rho = GridFunction(grid, std::move(fr));
  gains.g_tau = GridFunction(grid, std::move(gt));
  return gains;
}

AdaptiveCoeffs::AdaptiveCoeffs(const SystemModel& model, const FilterGains& filter,
                               const AgentGains& agent)
    : model_(&model), filter_(&filter), agent_(&agent), noise_(noise_algebra(model)),
      d_(model.d), m_(model.m) {
  e_xc_ = Matrix::Zero(3 * d_, d_);
  e_xa_ = Matrix::Zero(3 * d_, d_);
  e_dx_ = Matrix::Zero(3 * d_, d_);
  e_xc_.topRows(d_) = Matrix::Identity(d_, d_);
  e_xa_.middleRows(d_, d_) = Matrix::Identity(d_, d_);
  e_dx_.bottomRows(d_) = Matrix::Identity(d_, d_);
}

Vector AdaptiveCoeffs::phi0() const {
  Vector p = Vector::Zero(3 * d_);
  p.head(d_) = model_->x0;
  p.segment(d_, d_) = model_->x0;
  return p;
}

Matrix AdaptiveCoeffs::D_phi(double t) const {
  const Matrix A = model_->A.eval(t);
  const Matrix KF = agent_->K.eval(t) * agent_->F.eval(t);
  const Matrix Th = filter_->Theta.eval(t);
  Matrix D = Matrix::Zero(3 * d_, 3 * d_);
  D.topLeftCorner(d_, d_) = A;
  D.block(0, d_, d_, d_) = -KF;
  D.block(d_, 0, d_, d_) = Th;
  D.block(d_, d_, d_, d_) = A - KF - Th;
  D.bottomRightCorner(d_, d_) = A - Th;
  return D;
}

Vector AdaptiveCoeffs::d_phi(double t) const {
  const Vector drift =
      Vector(model_->a_drift.eval(t)) - 0.5 * agent_->K.eval(t) * Vector(agent_->f_vec.eval(t));
  Vector out = Vector::Zero(3 * d_);
  out.head(d_) = drift;
  out.segment(d_, d_) = drift;
  return out;
}

Matrix AdaptiveCoeffs::P_inv(double t) const {
  return invert_spd(model_->P.eval(t), "AdaptiveCoeffs: P");
}

Matrix AdaptiveCoeffs::O(double t) const {
  const Matrix sel = e_xc_ + e_dx_;
  return sel * P_inv(t) * sel.transpose();
}

Matrix AdaptiveCoeffs::Q_phi(double t) const {
  const Matrix H = model_->H.eval(t);
  const Matrix F = agent_->F.eval(t);
  const Matrix FKF = F * agent_->K.eval(t) * F;
  const Matrix Q = model_->Q.eval(t);
  return 0.5 * e_dx_ * H.transpose() * noise_.WW_inv * H * e_dx_.transpose() -
         model_->lambda * e_xa_ * FKF * e_xa_.transpose() -
         model_->lambda * e_xc_ * Q * e_xc_.transpose();
}

Vector AdaptiveCoeffs::ell_phi(double t) const {
  const Matrix Q = model_->Q.eval(t);
  const Vector r = model_->r_ref.eval(t);
  const Matrix F = agent_->F.eval(t);
  const Matrix K = agent_->K.eval(t);
  const Vector fv = agent_->f_vec.eval(t);
  return 2.0 * model_->lambda * e_xc_ * Q * r - model_->lambda * e_xa_ * F * K * fv;
}

Matrix AdaptiveCoeffs::Sigma_phi(double t) const {
  const Matrix Lam = filter_->Lambda.eval(t);
  Matrix S = Matrix::Zero(3 * d_, 3 * d_);
  S.topLeftCorner(d_, d_) = Lam;
  S.block(0, d_, d_, d_) = Lam;
  S.block(d_, 0, d_, d_) = Lam;
  S.block(d_, d_, d_, d_) = Lam;
  return S;
}

double AdaptiveCoeffs::C_phi(double t) const {
  const Vector r = model_->r_ref.eval(t);
  const Matrix Q = model_->Q.eval(t);
  const Vector fv = agent_->f_vec.eval(t);
  const Matrix K = agent_->K.eval(t);
  return -model_->lambda * ((r.transpose() * Q * r).value() +
                            0.25 * (fv.transpose() * K * fv).value());
}

Matrix AdaptiveCoeffs::G(double t) const {
  const Matrix T = filter_->T_cal.eval(t);
  Matrix g = Matrix::Zero(3 * d_, m_);
  g.middleRows(d_, d_) = T;
  g.bottomRows(d_) = -T;
  return g;
}

Matrix AdaptiveCoeffs::Q_F(double t, const Matrix& F_phi_t) const {
  return F_phi_t * G(t) * noise_.WW + e_dx_ * Matrix(model_->H.eval(t)).transpose();
}

AdaptiveRhoGains solve_adaptive_rho(const SystemModel& model, const FilterGains& filter,
                                    const AgentGains& agent) {
  const int n3 = 3 * model.d;
  const AdaptiveCoeffs coeffs(model, filter, agent);

  OdeProblem problem;
  problem.grid = model.horizon;
  problem.direction = Direction::Backward;
  problem.boundary_value = Vector::Zero(n3 * n3);
  problem.rhs = [&](double t, const Vector& state) {
    const Matrix F = unflatten(state, n3, n3);
    const Matrix D = coeffs.D_phi(t);
    Matrix dF = F * coeffs.O(t) * F - F * D - D.transpose() * F - 2.0 * coeffs.Q_phi(t);
    return flatten(dF);
  };
  problem.post_step = [n3](Vector& state) { symmetrize_block(state, n3); };

  std::vector<Vector> states;
  try {
    states = integrate(problem);
  } catch (const DivergenceError& e) {
    throw DivergenceError(std::string(e.what()) +
                              " (adaptive state-attack Riccati; solvable only for small "
                              "enough T at lambda = " +
                              std::to_string(model.lambda) + ")",
                          e.where());
  }

  AdaptiveRhoGains gains;
  gains.F_phi = to_grid_function(model.horizon, states, n3, n3);
  return gains;
}

AdaptiveTauGains solve_adaptive_tau(const SystemModel& model, const FilterGains& filter,
                                    const AgentGains& agent,
                                    const AdaptiveRhoGains& rho_gains) {
  const int d = model.d;
  const int n3 = 3 * d;
  const AdaptiveCoeffs coeffs(model, filter, agent);
  const Matrix& WW = coeffs.noise().WW;
  const Matrix& WW_inv = coeffs.noise().WW_inv;
  const Vector Phi0 = coeffs.phi0();
  const double T = model.horizon.T;

  // Forward adjoint pass: (F_tau, f_tau) jointly from zero initial data.
  OdeProblem fwd;
  fwd.grid = model.horizon;
  fwd.direction = Direction::Forward;
  fwd.boundary_value = Vector::Zero(n3 * n3 + n3);
  fwd.rhs = [&](double t, const Vector& state) {
    const Matrix Ft = unflatten(state.head(n3 * n3), n3, n3);
    const Vector ft = state.tail(n3);
    const Matrix Fphi = rho_gains.F_phi.eval(t);
    const Matrix D = coeffs.D_phi(t);
    const Matrix Ot = coeffs.O(t);
    const Matrix Gt = coeffs.G(t);
    const Matrix QF = coeffs.Q_F(t, Fphi);
    const Matrix E = D.transpose() - Fphi * Ot - QF * Gt.transpose();
    const Matrix Wqf = QF * WW_inv * QF.transpose();

    Matrix dF = -(Ft * Wqf * Ft) - (Ot + Gt * WW * Gt.transpose()) + Ft * E +
                E.transpose() * Ft;
    Vector df = Ft * (Fphi * coeffs.d_phi(t) + coeffs.ell_phi(t) - Wqf * (ft + Phi0)) +
                E.transpose() * (ft + Phi0) + coeffs.d_phi(t);
    Vector out(n3 * n3 + n3);
    out << flatten(dF), df;
    return out;
  };
  fwd.post_step = [n3](Vector& state) { symmetrize_block(state, n3); };

  std::vector<Vector> adj;
  try {
    adj = integrate(fwd);
  } catch (const DivergenceError& e) {
    throw DivergenceError(std::string(e.what()) +
                              " (observation-attack adjoint system; solvable only for "
                              "small enough T — shorten the horizon or reduce lambda)",
                          e.where());
  }

  AdaptiveTauGains gains;
  gains.F_tau = to_grid_function(model.horizon, adj, n3, n3, 0);
  gains.f_tau = to_grid_function(model.horizon, adj, n3, 1, n3 * n3);
  gains.Phi0 = Phi0;

  // Closed-loop pass in reflected time: U_j approximates f_phi(T - t_j),
  // with the optimal eta substituted from the adjoint ansatz. The value
  // constant c_phi rides along as one extra scalar so the completed pair
  // needs no re-integration against an interpolated tau path.
  auto eta_of = [&](double s, const Vector& U, const Matrix& QF, const Matrix& Gt) -> Vector {
    const Matrix Ftau = gains.F_tau.eval(s);
    const Vector ftau = gains.f_tau.eval(s);
    return -QF.transpose() * (Ftau * U + ftau + Phi0) - WW * Gt.transpose() * U;
  };

  OdeProblem loop;
  loop.grid = model.horizon;
  loop.direction = Direction::Forward;
  loop.boundary_value = Vector::Zero(n3 + 1);
  loop.rhs = [&](double tr, const Vector& state) {
    const double s = T - tr;  // original time
    const Vector U = state.head(n3);
    const Matrix Fphi = rho_gains.F_phi.eval(s);
    const Matrix D = coeffs.D_phi(s);
    const Matrix Ot = coeffs.O(s);
    const Matrix Gt = coeffs.G(s);
    const Matrix QF = coeffs.Q_F(s, Fphi);
    const Vector eta = eta_of(s, U, QF, Gt);
    Vector out(n3 + 1);
    out.head(n3) = (D.transpose() - Fphi * Ot) * U + Fphi * coeffs.d_phi(s) +
                   coeffs.ell_phi(s) + QF * WW_inv * eta;
    const Vector dtotal = coeffs.d_phi(s) + Gt * eta;
    out(n3) = 0.5 * (coeffs.Sigma_phi(s) * Fphi).trace() -
              0.5 * (U.transpose() * Ot * U).value() + U.dot(dtotal) + coeffs.C_phi(s) +
              0.5 * (eta.transpose() * WW_inv * eta).value();
    return out;
  };

  const std::vector<Vector> loop_states = integrate(loop);

  const int n = model.horizon.n_steps;
  std::vector<Matrix> tau_vals(static_cast<size_t>(n + 1)), u_vals(static_cast<size_t>(n + 1)),
      c_vals(static_cast<size_t>(n + 1)), du_vals(static_cast<size_t>(n + 1)),
      g_vals(static_cast<size_t>(n + 1)), qf_vals(static_cast<size_t>(n + 1));
  for (int j = 0; j <= n; ++j) {
    const int k = n - j;  // forward-time node for reflected node j
    const double s = model.horizon.node(k);
    const Vector& state = loop_states[static_cast<size_t>(j)];
    const Vector U = state.head(n3);
    const Matrix Fphi = rho_gains.F_phi.at_node(k);
    const Matrix Gt = coeffs.G(s);
    const Matrix QF = coeffs.Q_F(s, Fphi);
    u_vals[static_cast<size_t>(k)] = U;
    c_vals[static_cast<size_t>(k)] = Matrix::Constant(1, 1, state(n3));
    tau_vals[static_cast<size_t>(k)] = eta_of(s, U, QF, Gt);
    // d/ds U(T - s) = -dU/dt at the reflected node.
    du_vals[static_cast<size_t>(k)] =
        Vector(-loop.rhs(model.horizon.node(j), state).head(n3));
    g_vals[static_cast<size_t>(k)] = Gt;
    qf_vals[static_cast<size_t>(k)] = QF;
  }
  gains.tau_star = GridFunction(model.horizon, std::move(tau_vals));
  gains.f_phi_reflected = GridFunction(model.horizon, std::move(u_vals));
  gains.c_phi_reflected = GridFunction(model.horizon, std::move(c_vals));
  gains.f_phi_reflected_deriv = GridFunction(model.horizon, std::move(du_vals));
  gains.G = GridFunction(model.horizon, std::move(g_vals));
  gains.Q_F = GridFunction(model.horizon, std::move(qf_vals));
  return gains;
}

Matrix hermite_eval(const GridFunction& values, const GridFunction& derivs, double t) {
  const TimeGrid& grid = values.grid();
  const int snap = grid.node_index(t);
  if (snap >= 0) return values.at_node(snap);
  const double h = grid.step();
  int k = static_cast<int>(std::floor(t / h));
  k = std::max(0, std::min(k, grid.n_steps - 1));
  const double theta = (t - k * h) / h;
  const double t2 = theta * theta, t3 = t2 * theta;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + theta;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * values.at_node(k) + (h * h10) * derivs.at_node(k) +
         h01 * values.at_node(k + 1) + (h * h11) * derivs.at_node(k + 1);
}

namespace {

AdaptiveRhoGains complete_f_phi_c_phi(const SystemModel& model, const FilterGains& filter,
                                      const AgentGains& agent,
                                      const AdaptiveRhoGains& rho_gains,
                                      const std::function<Vector(double)>& tau_fn,
                                      GridFunction tau_samples) {
  const int n3 = 3 * model.d;
  const AdaptiveCoeffs coeffs(model, filter, agent);
  const Matrix& WW_inv = coeffs.noise().WW_inv;

  AdaptiveRhoGains out = rho_gains;
  out.tau = std::move(tau_samples);

  OdeProblem fvec;
  fvec.grid = model.horizon;
  fvec.direction = Direction::Backward;
  fvec.boundary_value = Vector::Zero(n3);
  fvec.rhs = [&](double t, const Vector& f) {
    const Matrix Fphi = rho_gains.F_phi.eval(t);
    const Matrix D = coeffs.D_phi(t);
    const Vector tau_t = tau_fn(t);
    const Vector d_tau = coeffs.G(t) * tau_t;
    const Vector ell_tau =
        coeffs.e_dx() * Matrix(model.H.eval(t)).transpose() * WW_inv * tau_t;
    Vector df = Fphi * coeffs.O(t) * f - Fphi * (coeffs.d_phi(t) + d_tau) -
                D.transpose() * f - coeffs.ell_phi(t) - ell_tau;
    return df;
  };
  const std::vector<Vector> fstates = integrate(fvec);
  out.f_phi = to_grid_function(model.horizon, fstates, n3, 1);

  OdeProblem cscal;
  cscal.grid = model.horizon;
  cscal.direction = Direction::Backward;
  cscal.boundary_value = Vector::Zero(1);
  cscal.rhs = [&](double t, const Vector&) {
    const Matrix Fphi = rho_gains.F_phi.eval(t);
    const Vector f = out.f_phi.eval(t);
    const Vector tau_t = tau_fn(t);
    const Vector d_tau = coeffs.G(t) * tau_t;
    const double C_tau = 0.5 * (tau_t.transpose() * WW_inv * tau_t).value();
    const double dc = -0.5 * (coeffs.Sigma_phi(t) * Fphi).trace() +
                      0.5 * (f.transpose() * coeffs.O(t) * f).value() -
                      (f.transpose() * (coeffs.d_phi(t) + d_tau)).value() -
                      coeffs.C_phi(t) - C_tau;
    return Vector::Constant(1, dc);
  };
  const std::vector<Vector> cstates = integrate(cscal);
  out.c_phi = to_grid_function(model.horizon, cstates, 1, 1);
  out.completed = true;
  return out;
}

}  // namespace

AdaptiveRhoGains solve_f_phi_c_phi(const SystemModel& model, const FilterGains& filter,
                                   const AgentGains& agent, const AdaptiveRhoGains& rho_gains,
                                   const GridFunction& tau) {
  auto tau_fn = [&tau](double t) -> Vector { return tau.eval(t); };
  return complete_f_phi_c_phi(model, filter, agent, rho_gains, tau_fn, tau);
}

AdaptiveRhoGains solve_f_phi_c_phi(const SystemModel& model, const FilterGains& filter,
                                   const AgentGains& agent, const AdaptiveRhoGains& rho_gains,
                                   const std::function<Vector(double)>& tau_fn,
                                   const GridFunction& tau_samples) {
  return complete_f_phi_c_phi(model, filter, agent, rho_gains, tau_fn, tau_samples);
}

double adaptive_value(const AdaptiveRhoGains& completed, const Vector& Phi0) {
  if (!completed.completed) {
    throw Error("adaptive_value: gains not completed (f_phi/c_phi missing)");
  }
  const Matrix& F0 = completed.F_phi.at_node(0);
  const Vector f0 = completed.f_phi.at_node(0);
  const double c0 = completed.c_phi.at_node(0)(0, 0);
  return 0.5 * (Phi0.transpose() * F0 * Phi0).value() + Phi0.dot(f0) + c0;
}

GridFunction tau_star_pointwise(const AdaptiveCoeffs& coeffs, const AdaptiveRhoGains& rho_gains,
                                const AdaptiveTauGains& tau_gains, const GridFunction& f_phi) {
  const TimeGrid& grid = f_phi.grid();
  const Matrix& WW = coeffs.noise().WW;
  std::vector<Matrix> vals(static_cast<size_t>(grid.n_nodes()));
  for (int k = 0; k < grid.n_nodes(); ++k) {
    const double t = grid.node(k);
    const Matrix QF = coeffs.Q_F(t, rho_gains.F_phi.at_node(k));
    const Matrix Gt = coeffs.G(t);
    const Vector f = f_phi.at_node(k);
    vals[static_cast<size_t>(k)] =
        -QF.transpose() * (tau_gains.F_tau.at_node(k) * f + Vector(tau_gains.f_tau.at_node(k)) +
                           tau_gains.Phi0) -
        WW * Gt.transpose() * f;
  }
  return GridFunction(grid, std::move(vals));
}

}  // namespace stealthlq
