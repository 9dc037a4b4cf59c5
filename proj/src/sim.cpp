#include "stealthlq/sim.hpp"

#include <cmath>
#include <string>

namespace stealthlq {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

}  // namespace

NoiseStream::NoiseStream(std::uint64_t base_seed, std::uint64_t path_index,
                         std::uint64_t stream) {
  std::uint64_t key = base_seed;
  key ^= splitmix64(path_index) + 0x632BE59BD9B4E019ULL;
  key ^= rotl(splitmix64(stream) + 0x9E3779B97F4A7C15ULL, 17);
  for (auto& word : s_) word = splitmix64(key);
}

std::uint64_t NoiseStream::next_u64() {
  // xoshiro256++
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double NoiseStream::uniform() {
  // 53-bit mantissa, strictly inside (0, 1).
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double NoiseStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

void NoiseStream::fill_normal(Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal();
}

namespace {

// One Euler step of the attack-unaware filter. Deliberately narrow: the
// update may consume only the realized observation increment and model
// coefficients, never the latent state or the driving noises.
inline void unaware_filter_step(const Matrix& A, const Matrix& B, const Vector& a,
                                const Matrix& H, const Vector& h_obs, const Matrix& gain,
                                double h, const Vector& xa, const Vector& u,
                                const Vector& dYc, Vector& innov, Vector& drift,
                                Vector& xa_next) {
  innov.noalias() = H * xa;
  innov += h_obs;
  innov *= -h;
  innov += dYc;
  drift.noalias() = A * xa;
  drift.noalias() += B * u;
  drift += a;
  xa_next = xa;
  xa_next += h * drift;
  xa_next.noalias() += gain * innov;
}

}  // namespace

Simulator::Simulator(SystemModel model_in, const FilterGains& filter, const AgentGains& agent,
                     AttackStrategy strategy_in)
    : model_(std::move(model_in)), strategy_(std::move(strategy_in)), d_(model_.d),
      c_(model_.c), m_(model_.m), p_(model_.p), q_(model_.q), n_(model_.horizon.n_steps),
      h_(model_.horizon.step()), sqrt_h_(std::sqrt(model_.horizon.step())) {
  const SystemModel& model = model_;
  const AttackStrategy& strategy = strategy_;
  if ((strategy.kind == AttackStrategy::Kind::DeterministicPath &&
       !(strategy.rho_path.grid() == model.horizon)) ||
      (strategy.kind == AttackStrategy::Kind::AdaptiveFeedback &&
       !(strategy.tau_path.grid() == model.horizon))) {
    throw ShapeError("Simulator: attack paths must live on the model grid");
  }
  const NoiseAlgebra na = noise_algebra(model);
  sigV_ = model.sigma_V;
  sigW_ = model.sigma_W;
  WW_isqrt_ = na.WW_isqrt;
  WW_inv_ = na.WW_inv;
  R0_sqrt_ = psd_sqrt(model.R0);

  const int nodes = n_ + 1;
  A_.resize(nodes);
  B_.resize(nodes);
  H_.resize(nodes);
  Tg_.resize(nodes);
  ulin_.resize(nodes);
  a_.resize(nodes);
  hv_.resize(nodes);
  uaff_.resize(nodes);
  for (int k = 0; k < nodes; ++k) {
    const double t = model.horizon.node(k);
    A_[k] = model.A.eval(t);
    B_[k] = model.B.eval(t);
    H_[k] = model.H.eval(t);
    Tg_[k] = filter.T_cal.at_node(k);
    a_[k] = model.a_drift.eval(t);
    hv_[k] = model.h_obs.eval(t);
    const Matrix Sinv =
        Eigen::LLT<Matrix>(Matrix(model.S.eval(t))).solve(Matrix::Identity(c_, c_));
    const Matrix SinvBt = Sinv * B_[k].transpose();
    ulin_[k] = -SinvBt * agent.F.at_node(k);
    uaff_[k] = -0.5 * SinvBt * Vector(agent.f_vec.at_node(k));
  }

  switch (strategy.kind) {
    case AttackStrategy::Kind::Zero:
      rho_det_.assign(nodes, Vector::Zero(d_));
      tau_det_.assign(nodes, Vector::Zero(m_));
      break;
    case AttackStrategy::Kind::DeterministicPath:
      rho_det_.resize(nodes);
      tau_det_.resize(nodes);
      for (int k = 0; k < nodes; ++k) {
        rho_det_[k] = strategy.rho_path.at_node(k);
        tau_det_[k] = strategy.tau_path.at_node(k);
      }
      break;
    case AttackStrategy::Kind::Sinusoid:
      rho_det_.resize(nodes);
      tau_det_.resize(nodes);
      for (int k = 0; k < nodes; ++k) {
        const double v = strategy.amplitude * std::sin(strategy.omega * model.horizon.node(k));
        rho_det_[k] = Vector::Constant(d_, v);
        tau_det_[k] = Vector::Constant(m_, -v);
      }
      break;
    case AttackStrategy::Kind::GaussianWhite:
      break;
    case AttackStrategy::Kind::AdaptiveFeedback: {
      rho_lin_.resize(nodes);
      rho_aff_.resize(nodes);
      tau_det_.resize(nodes);
      Matrix sel = Matrix::Zero(3 * d_, d_);  // e_xc + e_dx
      sel.topRows(d_) = Matrix::Identity(d_, d_);
      sel.bottomRows(d_) = Matrix::Identity(d_, d_);
      for (int k = 0; k < nodes; ++k) {
        const double t = model.horizon.node(k);
        const Matrix Pinv =
            Eigen::LLT<Matrix>(Matrix(model.P.eval(t))).solve(Matrix::Identity(d_, d_));
        rho_lin_[k] = -Pinv * sel.transpose() * strategy.rho_gains.F_phi.at_node(k);
        rho_aff_[k] = -Pinv * sel.transpose() * Vector(strategy.rho_gains.f_phi.at_node(k));
        tau_det_[k] = strategy.tau_path.at_node(k);
      }
      break;
    }
  }
}

TrajectoryBundle Simulator::simulate(std::uint64_t base_seed, std::uint64_t path_index) const {
  TrajectoryBundle b;
  b.grid = model_.horizon;
  const int nodes = n_ + 1;
  b.Xc.resize(nodes, d_);
  b.Yc.resize(nodes, m_);
  b.Xhat_a.resize(nodes, d_);
  b.Xhat_c.resize(nodes, d_);
  b.dX.resize(nodes, d_);
  b.Ia.resize(nodes, m_);
  b.ua.resize(nodes, c_);
  b.rho.resize(nodes, d_);
  b.tau.resize(nodes, m_);
  b.dIa.resize(n_, m_);

  NoiseStream noise(base_seed, path_index, 0);
  const bool gaussian_attack = strategy_.kind == AttackStrategy::Kind::GaussianWhite;
  const bool adaptive = strategy_.kind == AttackStrategy::Kind::AdaptiveFeedback;
  NoiseStream attack_stream(base_seed, path_index, 1 + strategy_.seed_offset);

  // State vectors and preallocated workspaces.
  Vector xc(d_), xa(d_), xhc(d_), dx(d_), ia(m_), u(c_), rho_k(d_), tau_k(m_);
  Vector zd(d_), zp(p_), zq(q_), dYc(m_), innov(m_), dia(m_), beta(m_), wtmp(m_);
  Vector drift(d_), xc_next(d_), xa_next(d_), xhc_next(d_), phi(3 * d_);

  noise.fill_normal(zd);
  xc = model_.x0;
  xc.noalias() += R0_sqrt_ * zd;
  xa = model_.x0;
  xhc = model_.x0;
  dx.setZero();
  ia.setZero();

  b.Xc.row(0) = xc;
  b.Yc.row(0).setZero();
  b.Xhat_a.row(0) = xa;
  b.Xhat_c.row(0) = xhc;
  b.dX.row(0) = dx;
  b.Ia.row(0) = ia;

  for (int k = 0; k < n_; ++k) {
    // Agent feedback on its own filter state.
    u.noalias() = ulin_[k] * xa;
    u += uaff_[k];

    if (gaussian_attack) {
      for (int i = 0; i < d_; ++i) rho_k(i) = strategy_.std_rho * attack_stream.normal();
      for (int i = 0; i < m_; ++i) tau_k(i) = strategy_.std_tau * attack_stream.normal();
    } else if (adaptive) {
      phi.head(d_) = xhc;
      phi.segment(d_, d_) = xa;
      phi.tail(d_) = dx;
      rho_k.noalias() = rho_lin_[k] * phi;
      rho_k += rho_aff_[k];
      tau_k = tau_det_[k];
    } else {
      rho_k = rho_det_[k];
      tau_k = tau_det_[k];
    }

    noise.fill_normal(zp);
    noise.fill_normal(zq);

    // True corrupted state.
    drift.noalias() = A_[k] * xc;
    drift.noalias() += B_[k] * u;
    drift += a_[k];
    drift += rho_k;
    xc_next = xc;
    xc_next += h_ * drift;
    xc_next.noalias() += sqrt_h_ * (sigV_ * zp);

    // Corrupted observation increment.
    dYc.noalias() = H_[k] * xc;
    dYc += hv_[k];
    dYc += tau_k;
    dYc *= h_;
    dYc.noalias() += sqrt_h_ * (sigW_ * zq);

    unaware_filter_step(A_[k], B_[k], a_[k], H_[k], hv_[k], Tg_[k], h_, xa, u, dYc, innov,
                        drift, xa_next);

    dia.noalias() = WW_isqrt_ * innov;

    // Attack-aware filter, driven by the same observation increment.
    wtmp.noalias() = H_[k] * xhc;
    wtmp += hv_[k];
    wtmp += tau_k;
    wtmp *= -h_;
    wtmp += dYc;
    drift.noalias() = A_[k] * xhc;
    drift.noalias() += B_[k] * u;
    drift += a_[k];
    drift += rho_k;
    xhc_next = xhc;
    xhc_next += h_ * drift;
    xhc_next.noalias() += Tg_[k] * wtmp;

    // Log-likelihood accumulators (left-endpoint convention).
    beta.noalias() = H_[k] * dx;
    beta += tau_k;
    wtmp.noalias() = WW_isqrt_ * beta;
    b.ito_sum += wtmp.dot(dia);
    wtmp.noalias() = WW_inv_ * beta;
    b.quad_sum += beta.dot(wtmp) * h_;

    b.ua.row(k) = u;
    b.rho.row(k) = rho_k;
    b.tau.row(k) = tau_k;
    b.dIa.row(k) = dia;

    xc = xc_next;
    xa = xa_next;
    xhc = xhc_next;
    dx = xhc;
    dx -= xa;
    ia += dia;
    b.Xc.row(k + 1) = xc;
    b.Yc.row(k + 1) = b.Yc.row(k) + dYc.transpose();
    b.Xhat_a.row(k + 1) = xa;
    b.Xhat_c.row(k + 1) = xhc;
    b.dX.row(k + 1) = dx;
    b.Ia.row(k + 1) = ia;

    if (!xc.allFinite() || !xa.allFinite() || !xhc.allFinite()) {
      throw NumericError("simulate: non-finite state at step " + std::to_string(k + 1) +
                             " (path " + std::to_string(path_index) + ")",
                         model_.horizon.node(k + 1));
    }
  }

  // Terminal node: feedback and attack evaluated for completeness.
  u.noalias() = ulin_[n_] * xa;
  u += uaff_[n_];
  b.ua.row(n_) = u;
  if (gaussian_attack) {
    for (int i = 0; i < d_; ++i) rho_k(i) = strategy_.std_rho * attack_stream.normal();
    for (int i = 0; i < m_; ++i) tau_k(i) = strategy_.std_tau * attack_stream.normal();
  } else if (adaptive) {
    phi.head(d_) = xhc;
    phi.segment(d_, d_) = xa;
    phi.tail(d_) = dx;
    rho_k.noalias() = rho_lin_[n_] * phi;
    rho_k += rho_aff_[n_];
    tau_k = tau_det_[n_];
  } else {
    rho_k = rho_det_[n_];
    tau_k = tau_det_[n_];
  }
  b.rho.row(n_) = rho_k;
  b.tau.row(n_) = tau_k;
  return b;
}

TrajectoryBundle simulate_path(const SystemModel& model, const FilterGains& filter,
                               const AgentGains& agent, const AttackStrategy& strategy,
                               std::uint64_t base_seed, std::uint64_t path_index) {
  return Simulator(model, filter, agent, strategy).simulate(base_seed, path_index);
}

}  // namespace stealthlq
