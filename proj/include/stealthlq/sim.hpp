#ifndef STEALTHLQ_SIM_HPP
#define STEALTHLQ_SIM_HPP

#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "stealthlq/attacks.hpp"
#include "stealthlq/synthesis.hpp"

namespace stealthlq {

// Per-path Gaussian stream. The state is derived from (base_seed,
// path_index, stream) by a splitmix64 cascade, so identical keys reproduce
// identical draws regardless of execution order or worker count.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t base_seed, std::uint64_t path_index, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  // Uniform in (0, 1).
  double uniform();
  // Standard normal via the Marsaglia polar method (one spare cached).
  double normal();
  void fill_normal(Vector& v);

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// One simulated realization of the attacked closed loop. Rows are grid
// nodes; dIa holds the n_steps whitened innovation increments.
struct TrajectoryBundle {
  TimeGrid grid;
  Matrix Xc;      // n_nodes x d
  Matrix Yc;      // n_nodes x m
  Matrix Xhat_a;  // n_nodes x d
  Matrix Xhat_c;  // n_nodes x d
  Matrix dX;      // n_nodes x d
  Matrix Ia;      // n_nodes x m
  Matrix ua;      // n_nodes x c
  Matrix rho;     // n_nodes x d
  Matrix tau;     // n_nodes x m
  Matrix dIa;     // n_steps x m

  // Running Ito sums of the self-scored log-likelihood, accumulated during
  // the step loop: ell_self = ito_sum - quad_sum / 2.
  double ito_sum = 0.0;
  double quad_sum = 0.0;
};

// Euler-Maruyama engine with all node coefficients precomputed, so batches
// share one read-only cache. Owns copies of the model and strategy: callers
// may pass temporaries.
class Simulator {
 public:
  Simulator(SystemModel model, const FilterGains& filter, const AgentGains& agent,
            AttackStrategy strategy);

  TrajectoryBundle simulate(std::uint64_t base_seed, std::uint64_t path_index) const;

  const SystemModel& model() const { return model_; }
  const AttackStrategy& strategy() const { return strategy_; }

 private:
  SystemModel model_;
  AttackStrategy strategy_;
  int d_, c_, m_, p_, q_, n_;
  double h_, sqrt_h_;

  // Node caches (index 0..n).
  std::vector<Matrix> A_, B_, H_, Tg_, ulin_;
  std::vector<Vector> a_, hv_, uaff_;
  std::vector<Vector> rho_det_, tau_det_;     // deterministic-path strategies
  std::vector<Matrix> rho_lin_;               // adaptive feedback, d x 3d
  std::vector<Vector> rho_aff_;               // adaptive feedback
  Matrix sigV_, sigW_, WW_isqrt_, WW_inv_, R0_sqrt_;
};

TrajectoryBundle simulate_path(const SystemModel& model, const FilterGains& filter,
                               const AgentGains& agent, const AttackStrategy& strategy,
                               std::uint64_t base_seed, std::uint64_t path_index = 0);

inline int default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Apply fn to every simulated path and collect the results by path index.
// Paths are partitioned statically over the workers; the returned vector is
// identical for any worker count, so order-fixed reductions over it are
// reproducible bit for bit.
template <typename Summary>
std::vector<Summary> simulate_map(const Simulator& sim, int n_paths, std::uint64_t base_seed,
                                  int workers,
                                  const std::function<Summary(int, const TrajectoryBundle&)>& fn) {
  if (n_paths < 0) throw DomainError("simulate_map: n_paths must be >= 0");
  std::vector<Summary> out(static_cast<size_t>(n_paths));
  if (n_paths == 0) return out;
  workers = std::max(1, std::min(workers, n_paths));

  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run_range = [&](int lo, int hi) {
    try {
      for (int i = lo; i < hi; ++i) {
        const TrajectoryBundle bundle = sim.simulate(base_seed, static_cast<std::uint64_t>(i));
        out[static_cast<size_t>(i)] = fn(i, bundle);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  if (workers == 1) {
    run_range(0, n_paths);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n_paths + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int lo = w * chunk;
      const int hi = std::min(n_paths, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(run_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

}  // namespace stealthlq

#endif  // STEALTHLQ_SIM_HPP
