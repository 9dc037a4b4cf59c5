#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "stealthlq/evaluate.hpp"
#include "stealthlq/io.hpp"
#include "stealthlq/multiround.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stealthlq;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumeric = 1;
constexpr int kExitConfig = 2;

struct RunConfig {
  json model_spec;  // {"preset": name} or an inline model object
  std::vector<double> lambdas;
  std::vector<std::string> strategies;
  int paths = -1;  // -1: preset default
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;  // 0: hardware default
  int chi2_window = 50;
  bool per_path_ell = false;
  int rounds = 5;
  bool adaptive_rounds = false;
  int sample_paths = 1;
  std::string import_path;
  double gaussian_std_rho = 1.0;
  double gaussian_std_tau = 1.0;
  double sinusoid_amplitude = 1.0;
  double sinusoid_omega = 8.0 * M_PI;
  std::string out_dir = "out";
};

RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse failure: ") + e.what());
  }
  if (j.contains("model")) cfg.model_spec = j.at("model");
  if (j.contains("lambdas")) cfg.lambdas = j.at("lambdas").get<std::vector<double>>();
  if (j.contains("strategies")) {
    cfg.strategies = j.at("strategies").get<std::vector<std::string>>();
  }
  if (j.contains("mc")) {
    const json& mc = j.at("mc");
    if (mc.contains("paths")) cfg.paths = mc.at("paths").get<int>();
    if (mc.contains("seed")) {
      cfg.seed = mc.at("seed").get<std::uint64_t>();
      cfg.seed_set = true;
    }
    if (mc.contains("workers")) cfg.workers = mc.at("workers").get<int>();
  }
  if (j.contains("detector")) {
    const json& det = j.at("detector");
    if (det.contains("chi2_window")) cfg.chi2_window = det.at("chi2_window").get<int>();
    if (det.contains("per_path_ell")) cfg.per_path_ell = det.at("per_path_ell").get<bool>();
  }
  if (j.contains("multiround")) {
    const json& mr = j.at("multiround");
    if (mr.contains("rounds")) cfg.rounds = mr.at("rounds").get<int>();
    if (mr.contains("adaptive")) cfg.adaptive_rounds = mr.at("adaptive").get<bool>();
  }
  if (j.contains("sample_paths")) cfg.sample_paths = j.at("sample_paths").get<int>();
  if (j.contains("import_path")) cfg.import_path = j.at("import_path").get<std::string>();
  if (j.contains("gaussian")) {
    cfg.gaussian_std_rho = j.at("gaussian").value("std_rho", 1.0);
    cfg.gaussian_std_tau = j.at("gaussian").value("std_tau", 1.0);
  }
  if (j.contains("sinusoid")) {
    cfg.sinusoid_amplitude = j.at("sinusoid").value("amplitude", 1.0);
    cfg.sinusoid_omega = j.at("sinusoid").value("omega", 8.0 * M_PI);
  }
  if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
  return cfg;
}

struct LoadedModel {
  SystemModel model;
  int default_paths = 5000;
  std::uint64_t default_seed = 20250801;
};

LoadedModel resolve_model(const RunConfig& cfg) {
  LoadedModel lm;
  if (cfg.model_spec.is_null()) {
    const auto sp = preset("1d-mean-revert");
    lm.model = sp.model;
    lm.default_paths = sp.mc_paths;
    lm.default_seed = sp.base_seed;
  } else if (cfg.model_spec.is_object() && cfg.model_spec.contains("preset")) {
    const auto sp = preset(cfg.model_spec.at("preset").get<std::string>());
    lm.model = sp.model;
    lm.default_paths = sp.mc_paths;
    lm.default_seed = sp.base_seed;
  } else {
    lm.model = model_from_json(cfg.model_spec);
  }
  return lm;
}

// Everything that determines the outputs; the worker count deliberately
// stays out so runs with different parallelism hash identically.
std::string run_hash(const RunConfig& cfg, const SystemModel& model,
                     const std::vector<double>& lambdas,
                     const std::vector<std::string>& strategies, int paths,
                     std::uint64_t seed) {
  json j;
  j["model"] = model_to_json(model);
  j["lambdas"] = lambdas;
  j["strategies"] = strategies;
  j["paths"] = paths;
  j["seed"] = seed;
  j["chi2_window"] = cfg.chi2_window;
  j["per_path_ell"] = cfg.per_path_ell;
  j["rounds"] = cfg.rounds;
  j["sample_paths"] = cfg.sample_paths;
  return hash_hex(fnv1a64(j.dump()));
}

std::string lambda_tag(double lambda) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", lambda);
  return std::string("lambda_") + buf;
}

int report_violations(const std::vector<std::string>& violations) {
  json j;
  j["violations"] = violations;
  std::cout << j.dump(2) << "\n";
  return kExitConfig;
}

struct BuiltStrategy {
  AttackStrategy strategy;
  bool have_means = false;
  DetMeanPath means;
  double reflection_gap = 0.0;
  double tau_formula_gap = 0.0;
  bool have_adaptive_gains = false;
  AdaptiveTauGains tau_gains;
};

BuiltStrategy build_strategy(const std::string& name, const RunConfig& cfg,
                             const SystemModel& model, const FilterGains& filter,
                             const AgentGains& agent) {
  BuiltStrategy out;
  if (name == "zero") {
    out.strategy = AttackStrategy::zero();
  } else if (name == "gaussian") {
    out.strategy = AttackStrategy::gaussian_white(cfg.gaussian_std_rho, cfg.gaussian_std_tau);
  } else if (name == "sinusoid") {
    out.strategy = AttackStrategy::sinusoid(cfg.sinusoid_amplitude, cfg.sinusoid_omega);
  } else if (name == "optimal-det") {
    const auto det = solve_det_attack(model, filter, agent);
    auto [strategy, means] = build_optimal_det(model, filter, agent, det);
    out.strategy = std::move(strategy);
    out.means = std::move(means);
    out.have_means = true;
  } else if (name == "optimal-adaptive") {
    auto bundle = build_optimal_adaptive(model, filter, agent);
    out.strategy = std::move(bundle.strategy);
    out.reflection_gap = bundle.reflection_gap;
    out.tau_formula_gap = bundle.tau_formula_gap;
    out.tau_gains = std::move(bundle.tau_gains);
    out.have_adaptive_gains = true;
  } else if (name == "imported-path") {
    if (cfg.import_path.empty()) {
      throw ConfigError("strategy 'imported-path' needs --import FILE");
    }
    auto [rho, tau] = read_attack_csv(cfg.import_path, model.horizon, model.d, model.m);
    out.strategy = AttackStrategy::deterministic(std::move(rho), std::move(tau));
  } else {
    throw ConfigError("unknown strategy '" + name + "'");
  }
  return out;
}

// Materialize any deterministic strategy as grid paths for the exact
// evaluators.
std::pair<GridFunction, GridFunction> as_paths(const AttackStrategy& strategy,
                                               const SystemModel& model) {
  if (strategy.kind == AttackStrategy::Kind::DeterministicPath) {
    return {strategy.rho_path, strategy.tau_path};
  }
  std::vector<Matrix> rv(static_cast<size_t>(model.horizon.n_nodes())),
      tv(static_cast<size_t>(model.horizon.n_nodes()));
  for (int k = 0; k < model.horizon.n_nodes(); ++k) {
    auto [r, t] = eval_attack(strategy, model, k);
    rv[static_cast<size_t>(k)] = r;
    tv[static_cast<size_t>(k)] = t;
  }
  return {GridFunction(model.horizon, std::move(rv)),
          GridFunction(model.horizon, std::move(tv))};
}

int cmd_solve(const RunConfig& cfg) {
  const LoadedModel lm = resolve_model(cfg);
  const auto violations = validate(lm.model);
  if (!violations.empty()) return report_violations(violations);
  const std::vector<double> lambdas =
      cfg.lambdas.empty() ? std::vector<double>{lm.model.lambda} : cfg.lambdas;
  const std::vector<std::string> strategies =
      cfg.strategies.empty() ? std::vector<std::string>{"optimal-det"} : cfg.strategies;
  const std::string hash = run_hash(cfg, lm.model, lambdas, strategies, 0, 0);

  fs::create_directories(cfg.out_dir);
  for (double lambda : lambdas) {
    SystemModel model = lm.model;
    model.lambda = lambda;
    const fs::path dir = lambdas.size() == 1 ? fs::path(cfg.out_dir)
                                             : fs::path(cfg.out_dir) / lambda_tag(lambda);
    fs::create_directories(dir);

    const auto filter = solve_filter(model);
    const auto agent = solve_agent(model);
    write_grid_csv((dir / "R.csv").string(), hash,
                   {{"R", &filter.R},
                    {"Tcal", &filter.T_cal},
                    {"Theta", &filter.Theta},
                    {"Lambda", &filter.Lambda}});
    write_grid_csv((dir / "agent.csv").string(), hash,
                   {{"F", &agent.F}, {"f", &agent.f_vec}, {"K", &agent.K}});

    const double bound = existence_bound(model, filter, agent);
    json bj;
    bj["lambda"] = lambda;
    bj["T"] = model.horizon.T;
    bj["bound_finite"] = std::isfinite(bound);
    bj["bound"] = std::isfinite(bound) ? json(bound) : json();
    bj["T_within_bound"] = model.horizon.T < bound;
    if (!(model.horizon.T < bound)) {
      bj["warning"] =
          "horizon is not covered by the sufficient existence bound; solves may diverge";
      std::cerr << "warning: T = " << model.horizon.T << " >= existence bound " << bound
                << " at lambda = " << lambda << "\n";
    }
    write_json_file((dir / "bound.json").string(), bj);

    try {
      for (const auto& name : strategies) {
        if (name == "optimal-det") {
          const auto det = solve_det_attack(model, filter, agent);
          write_grid_csv((dir / "det_gains.csv").string(), hash,
                         {{"Fc", &det.Fc},
                          {"Fa", &det.Fa},
                          {"Gc", &det.Gc},
                          {"Ga", &det.Ga},
                          {"f_rho", &det.f_rho},
                          {"g_tau", &det.g_tau}});
          const auto [strategy, means] = build_optimal_det(model, filter, agent, det);
          write_attack_csv((dir / "det_attack.csv").string(), hash, strategy.rho_path,
                           strategy.tau_path);
        } else if (name == "optimal-adaptive") {
          const auto bundle = build_optimal_adaptive(model, filter, agent);
          const auto& g = bundle.strategy.rho_gains;
          write_grid_csv((dir / "adaptive_rho_gains.csv").string(), hash,
                         {{"F_phi", &g.F_phi}, {"f_phi", &g.f_phi}, {"c_phi", &g.c_phi}});
          write_grid_csv((dir / "adaptive_tau_gains.csv").string(), hash,
                         {{"F_tau", &bundle.tau_gains.F_tau},
                          {"f_tau", &bundle.tau_gains.f_tau},
                          {"tau_star", &bundle.tau_gains.tau_star}});
        }
      }
    } catch (const DivergenceError& e) {
      json err;
      err["error"] = e.what();
      err["lambda"] = lambda;
      err["existence_bound"] = std::isfinite(bound) ? json(bound) : json();
      write_json_file((dir / "divergence.json").string(), err);
      std::cout << err.dump(2) << "\n";
      return kExitNumeric;
    }
  }
  return kExitOk;
}

void write_bundle_csv(const fs::path& path, const std::string& hash,
                      const TrajectoryBundle& b) {
  CsvWriter w(path.string(), hash);
  std::vector<std::string> names{"t"};
  auto add_block = [&](const std::string& base, const Matrix& block) {
    for (int j = 0; j < block.cols(); ++j) names.push_back(base + "_" + std::to_string(j + 1));
  };
  add_block("Xc", b.Xc);
  add_block("Xhat_a", b.Xhat_a);
  add_block("Xhat_c", b.Xhat_c);
  add_block("dX", b.dX);
  add_block("Ia", b.Ia);
  add_block("ua", b.ua);
  add_block("rho", b.rho);
  add_block("tau", b.tau);
  w.header(names);
  for (int k = 0; k < b.grid.n_nodes(); ++k) {
    std::vector<double> row{b.grid.node(k)};
    auto push = [&](const Matrix& block) {
      for (int j = 0; j < block.cols(); ++j) row.push_back(block(k, j));
    };
    push(b.Xc);
    push(b.Xhat_a);
    push(b.Xhat_c);
    push(b.dX);
    push(b.Ia);
    push(b.ua);
    push(b.rho);
    push(b.tau);
    w.row(row);
  }
  w.write();
}

int cmd_simulate(const RunConfig& cfg) {
  const LoadedModel lm = resolve_model(cfg);
  const auto violations = validate(lm.model);
  if (!violations.empty()) return report_violations(violations);
  const std::vector<double> lambdas =
      cfg.lambdas.empty() ? std::vector<double>{lm.model.lambda} : cfg.lambdas;
  const std::vector<std::string> strategies =
      cfg.strategies.empty()
          ? std::vector<std::string>{"zero", "optimal-det", "gaussian", "sinusoid"}
          : cfg.strategies;
  const int n_paths = cfg.paths >= 0 ? cfg.paths : lm.default_paths;
  const std::uint64_t seed = cfg.seed_set ? cfg.seed : lm.default_seed;
  const int workers = cfg.workers > 0 ? cfg.workers : default_workers();
  const std::string hash = run_hash(cfg, lm.model, lambdas, strategies, n_paths, seed);

  json summary;
  for (double lambda : lambdas) {
    SystemModel model = lm.model;
    model.lambda = lambda;
    const fs::path base = lambdas.size() == 1 ? fs::path(cfg.out_dir)
                                              : fs::path(cfg.out_dir) / lambda_tag(lambda);
    const auto filter = solve_filter(model);
    const auto agent = solve_agent(model);
    for (const auto& name : strategies) {
      try {
        const BuiltStrategy built = build_strategy(name, cfg, model, filter, agent);
        const fs::path dir = base / name;
        fs::create_directories(dir);
        const Simulator sim(model, filter, agent, built.strategy);
        for (int i = 0; i < cfg.sample_paths; ++i) {
          write_bundle_csv(dir / ("path_" + std::to_string(i) + ".csv"), hash,
                           sim.simulate(seed, static_cast<std::uint64_t>(i)));
        }
        if (n_paths > 0) {
          const int d = model.d;
          const auto sums = simulate_map<std::vector<double>>(
              sim, n_paths, seed, workers, [&](int, const TrajectoryBundle& b) {
                std::vector<double> acc(static_cast<size_t>(b.grid.n_nodes()) * 2 * d);
                for (int k = 0; k < b.grid.n_nodes(); ++k) {
                  for (int j = 0; j < d; ++j) {
                    acc[static_cast<size_t>(k) * 2 * d + j] = b.Xc(k, j);
                    acc[static_cast<size_t>(k) * 2 * d + d + j] = b.Xhat_a(k, j);
                  }
                }
                return acc;
              });
          CsvWriter w((dir / "mean.csv").string(), hash);
          std::vector<std::string> names{"t"};
          for (int j = 0; j < d; ++j) names.push_back("mean_Xc_" + std::to_string(j + 1));
          for (int j = 0; j < d; ++j) names.push_back("mean_Xhat_a_" + std::to_string(j + 1));
          w.header(names);
          for (int k = 0; k < model.horizon.n_nodes(); ++k) {
            std::vector<double> row{model.horizon.node(k)};
            for (int j = 0; j < 2 * d; ++j) {
              double s = 0.0;
              for (const auto& acc : sums) s += acc[static_cast<size_t>(k) * 2 * d + j];
              row.push_back(s / n_paths);
            }
            w.row(row);
          }
          w.write();
        }
        summary[lambda_tag(lambda)][name] = {{"paths", n_paths},
                                             {"sample_paths", cfg.sample_paths}};
      } catch (const DivergenceError& e) {
        json err;
        err["error"] = e.what();
        std::cout << err.dump(2) << "\n";
        return kExitNumeric;
      }
    }
  }
  summary["config_hash"] = hash;
  fs::create_directories(cfg.out_dir);
  write_json_file((fs::path(cfg.out_dir) / "simulate_summary.json").string(), summary);
  return kExitOk;
}

int cmd_evaluate(const RunConfig& cfg) {
  const LoadedModel lm = resolve_model(cfg);
  const auto violations = validate(lm.model);
  if (!violations.empty()) return report_violations(violations);
  const std::vector<double> lambdas =
      cfg.lambdas.empty() ? std::vector<double>{lm.model.lambda} : cfg.lambdas;
  const std::vector<std::string> strategies =
      cfg.strategies.empty() ? std::vector<std::string>{"optimal-det"} : cfg.strategies;
  const int n_paths = cfg.paths >= 0 ? cfg.paths : lm.default_paths;
  const std::uint64_t seed = cfg.seed_set ? cfg.seed : lm.default_seed;
  const int workers = cfg.workers > 0 ? cfg.workers : default_workers();
  const std::string hash = run_hash(cfg, lm.model, lambdas, strategies, n_paths, seed);

  fs::create_directories(cfg.out_dir);
  json report;
  std::map<std::string, std::vector<std::vector<double>>> sweep_rows;

  for (double lambda : lambdas) {
    SystemModel model = lm.model;
    model.lambda = lambda;
    const auto filter = solve_filter(model);
    const auto agent = solve_agent(model);
    for (const auto& name : strategies) {
      try {
        const BuiltStrategy built = build_strategy(name, cfg, model, filter, agent);
        json entry;

        ObjectiveReport main_report;
        const bool deterministic = built.strategy.is_deterministic_path();
        if (deterministic) {
          const auto [rho, tau] = as_paths(built.strategy, model);
          main_report = exact_objective(model, filter, agent, rho, tau);
          entry["exact"] = objective_report_to_json(main_report);
          const auto residual = detectability_residual(rho, tau, model);
          double sup = 0.0;
          for (const auto& v : residual.values()) sup = std::max(sup, v.norm());
          entry["detectability_residual_sup"] = sup;
        }
        if (n_paths > 0) {
          const auto mc =
              mc_objective(model, filter, agent, built.strategy, n_paths, seed, workers);
          entry["mc"] = objective_report_to_json(mc);
          if (!deterministic) main_report = mc;

          const Simulator sim(model, filter, agent, built.strategy);
          const int w = cfg.chi2_window;
          struct DetectSum {
            double stat_sum = 0, p_sum = 0, ell = 0;
            int n = 0, rejected = 0;
          };
          const auto sums = simulate_map<DetectSum>(
              sim, n_paths, seed, workers, [&](int, const TrajectoryBundle& b) {
                DetectSum cs;
                for (const auto& win : chi2_detector(b, w)) {
                  cs.stat_sum += win.statistic;
                  cs.p_sum += win.p_value;
                  cs.rejected += win.p_value < 0.05 ? 1 : 0;
                  ++cs.n;
                }
                cs.ell = log_likelihood(b, model);
                return cs;
              });
          DetectSum total;
          for (const auto& cs : sums) {
            total.stat_sum += cs.stat_sum;
            total.p_sum += cs.p_sum;
            total.rejected += cs.rejected;
            total.n += cs.n;
          }
          entry["chi2"] = {
              {"window_steps", w},
              {"dof", w * model.m},
              {"mean_statistic", total.stat_sum / total.n},
              {"mean_p_value", total.p_sum / total.n},
              {"rejection_rate_5pct", static_cast<double>(total.rejected) / total.n}};
          if (cfg.per_path_ell) {
            std::vector<double> ells;
            ells.reserve(sums.size());
            for (const auto& cs : sums) ells.push_back(cs.ell);
            entry["ell_per_path"] = ells;
          }
        }
        if (built.have_adaptive_gains) {
          entry["adaptive"] = {
              {"value", adaptive_value(built.strategy.rho_gains,
                                       AdaptiveCoeffs(model, filter, agent).phi0())},
              {"reflection_gap", built.reflection_gap},
              {"tau_formula_gap", built.tau_formula_gap},
              {"int_trace_QR", filter.int_trace_QR}};
        }
        report[lambda_tag(lambda)][name] = entry;
        sweep_rows[name].push_back({lambda, main_report.D, main_report.S,
                                    main_report.rho_energy, main_report.objective,
                                    main_report.se_D, main_report.se_S,
                                    main_report.se_energy, main_report.se_objective});
      } catch (const DivergenceError& e) {
        json err;
        err["error"] = e.what();
        std::cout << err.dump(2) << "\n";
        return kExitNumeric;
      }
    }
  }
  report["config_hash"] = hash;
  write_json_file((fs::path(cfg.out_dir) / "evaluate.json").string(), report);
  for (const auto& [name, rows] : sweep_rows) {
    CsvWriter w((fs::path(cfg.out_dir) / ("sweep_" + name + ".csv")).string(), hash);
    w.header({"lambda", "D", "S", "energy", "objective", "se_D", "se_S", "se_energy",
              "se_objective"});
    for (const auto& r : rows) w.row(r);
    w.write();
  }
  return kExitOk;
}

int cmd_multiround(const RunConfig& cfg) {
  const LoadedModel lm = resolve_model(cfg);
  const auto violations = validate(lm.model);
  if (!violations.empty()) return report_violations(violations);
  const double lambda = cfg.lambdas.empty() ? 0.5 : cfg.lambdas.front();
  const std::string hash = run_hash(
      cfg, lm.model, {lambda}, {cfg.adaptive_rounds ? "optimal-adaptive" : "optimal-det"}, 0,
      0);

  const auto result = run_rounds(lm.model, lambda, cfg.rounds, cfg.adaptive_rounds);
  fs::create_directories(cfg.out_dir);
  CsvWriter w((fs::path(cfg.out_dir) / "rounds.csv").string(), hash);
  w.header({"round", "rho_sup", "tau_sup", "D", "S", "objective"});
  for (const auto& rec : result.rounds) {
    w.row({static_cast<double>(rec.round), rec.rho_sup, rec.tau_sup, rec.D, rec.S,
           rec.objective});
  }
  w.write();
  if (result.diverged) {
    json err;
    err["error"] = result.error;
    err["failed_round"] = result.failed_round;
    std::cout << err.dump(2) << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_scenario_list() {
  for (const auto& name : preset_names()) {
    const auto sp = preset(name);
    std::cout << name << ": d=" << sp.model.d << " m=" << sp.model.m
              << " T=" << sp.model.horizon.T << " n_steps=" << sp.model.horizon.n_steps
              << " lambda=" << sp.model.lambda << " mc_paths=" << sp.mc_paths << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stealthy attack synthesis and evaluation for partially observed LQG systems"};
  app.require_subcommand(1);

  std::string config_path;
  std::string preset_name;
  std::vector<double> lambdas;
  std::vector<std::string> strategies;
  int paths = -2;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int workers = -1;
  int chi2_window = -1;
  int rounds = -1;
  bool adaptive_rounds = false;
  int sample_paths = -1;
  std::string import_path, out_dir;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")
        ->check(CLI::ExistingFile);
    sub->add_option("--preset", preset_name, "built-in scenario name");
    sub->add_option("--lambda", lambdas, "trade-off intensities")->delimiter(',');
    sub->add_option("--strategy", strategies,
                    "attack strategies (zero, gaussian, sinusoid, optimal-det, "
                    "optimal-adaptive, imported-path)")
        ->delimiter(',');
    sub->add_option("--paths", paths, "Monte Carlo paths");
    sub->add_option_function<std::uint64_t>(
        "--seed",
        [&](std::uint64_t v) {
          seed = v;
          seed_given = true;
        },
        "base seed");
    sub->add_option("--workers", workers, "worker threads (0 = hardware)");
    sub->add_option("--chi2-window", chi2_window, "detector window in steps");
    sub->add_option("--rounds", rounds, "multiround rounds");
    sub->add_flag("--adaptive", adaptive_rounds, "multiround with the adaptive attack");
    sub->add_option("--sample-paths", sample_paths, "trajectory files per strategy");
    sub->add_option("--import", import_path, "attack path CSV for imported-path");
    sub->add_option("--out", out_dir, "output directory");
  };

  auto* solve = app.add_subcommand("solve", "solve gain systems and export them");
  auto* simulate = app.add_subcommand("simulate", "simulate trajectories and mean paths");
  auto* evaluate = app.add_subcommand("evaluate", "objective and detection reports");
  auto* multiround = app.add_subcommand("multiround", "repeated attacker/defender rounds");
  auto* scenario = app.add_subcommand("scenario", "scenario utilities");
  auto* scenario_list = scenario->add_subcommand("list", "list built-in presets");
  add_common(solve);
  add_common(simulate);
  add_common(evaluate);
  add_common(multiround);

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = load_config(config_path);
    if (!preset_name.empty()) cfg.model_spec = json{{"preset", preset_name}};
    if (!lambdas.empty()) cfg.lambdas = lambdas;
    if (!strategies.empty()) cfg.strategies = strategies;
    if (paths != -2) cfg.paths = paths;
    if (seed_given) {
      cfg.seed = seed;
      cfg.seed_set = true;
    }
    if (workers >= 0) cfg.workers = workers;
    if (chi2_window > 0) cfg.chi2_window = chi2_window;
    if (rounds >= 0) cfg.rounds = rounds;
    if (adaptive_rounds) cfg.adaptive_rounds = true;
    if (sample_paths >= 0) cfg.sample_paths = sample_paths;
    if (!import_path.empty()) cfg.import_path = import_path;
    if (!out_dir.empty()) cfg.out_dir = out_dir;

    if (scenario_list->parsed()) return cmd_scenario_list();
    if (solve->parsed()) return cmd_solve(cfg);
    if (simulate->parsed()) return cmd_simulate(cfg);
    if (evaluate->parsed()) return cmd_evaluate(cfg);
    if (multiround->parsed()) return cmd_multiround(cfg);
    std::cerr << "no subcommand\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}
