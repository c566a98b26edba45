// Command-line front end: canned experiment presets, single bound/throughput
// evaluations, and service-chain inspection.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mimocal/harness.hpp"
#include "mimocal/markov.hpp"
#include "mimocal/netcal.hpp"
#include "mimocal/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;

struct CliOptions {
  mimocal::ScenarioConfig cfg;
  std::string preset;
  std::string out_dir = "out";
  std::string cache_path;
  bool strict = false;
};

// Wires the scenario flags shared by every subcommand. Optional<double>
// members need add_option on a local then a callback, so CLI11's defaults
// don't clobber the "unset" state.
void add_scenario_flags(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--n", opt.cfg.n, "antennas per side (1..4)")->check(CLI::Range(1, 4));
  cmd->add_option("--snr-db", opt.cfg.snr_db, "per-receive-antenna SNR in dB");
  cmd->add_option("--p-gb", [&opt](const CLI::results_t& r) {
        opt.cfg.p_gb = std::stod(r.front());
        return true;
      }, "good->bad flip probability (default 0.01)");
  cmd->add_option("--p-bg", [&opt](const CLI::results_t& r) {
        opt.cfg.p_bg = std::stod(r.front());
        return true;
      }, "bad->good recovery probability (default 0.1)");
  cmd->add_option("--kappa", [&opt](const CLI::results_t& r) {
        opt.cfg.kappa = std::stod(r.front());
        return true;
      }, "stationary bad probability (alternative to --p-gb)");
  cmd->add_option("--eps", opt.cfg.eps, "delay violation probability target")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--d-guarantee", opt.cfg.d_guarantee, "delay guarantee in slots")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--tau", opt.cfg.tau, "arrival period in slots")->check(CLI::PositiveNumber);
  cmd->add_option("--method", opt.cfg.method, "1 = per-substate chain, 2 = DOF-aggregated chain")
      ->check(CLI::Range(1, 2));
  cmd->add_option("--mc-samples", opt.cfg.mc_samples, "Monte-Carlo samples per pattern class")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", opt.cfg.seed, "master RNG seed");
  cmd->add_option("--trunc", opt.cfg.trunc, "bound-sum truncation horizon")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--theta-min", opt.cfg.theta_min, "smallest theta on the search grid")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--theta-max", opt.cfg.theta_max, "largest theta on the search grid")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--theta-points", opt.cfg.theta_points, "theta grid size")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--lambda-tol", opt.cfg.lambda_tol,
                  "throughput bisection tolerance, blocks/slot")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--cache", opt.cache_path, "capacity cache file (JSON lines, append-only)");
  cmd->add_flag("--strict", opt.strict,
                "exit with status 3 when a result is infeasible or numerically unstable");
}

mimocal::CapacityCache make_cache(const CliOptions& opt) {
  return opt.cache_path.empty() ? mimocal::CapacityCache{}
                                : mimocal::CapacityCache{opt.cache_path};
}

int run_preset(const CliOptions& opt) {
  auto cache = make_cache(opt);
  const auto result = mimocal::run_experiment(opt.preset, opt.cfg, opt.out_dir,
                                              cache.enabled() ? &cache : nullptr);
  for (const auto& f : result.files) std::cout << f.string() << "\n";
  if (result.any_infeasible)
    std::cerr << "note: some grid points admit no feasible rate (lambda = 0)\n";
  if (result.any_unstable)
    std::cerr << "note: some bound sums failed the truncation tail check; "
                 "consider raising --trunc\n";
  if (opt.strict && (result.any_infeasible || result.any_unstable)) return kExitInfeasible;
  return kExitOk;
}

int run_chain(const CliOptions& opt) {
  auto cache = make_cache(opt);
  const auto built = mimocal::build_scenario(opt.cfg, cache.enabled() ? &cache : nullptr);
  auto j = mimocal::chain_to_json(built.chain);
  j["config"] = mimocal::config_echo(opt.cfg, built.ge);
  j["capacity_provenance"] = built.provenance;
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int run_bound(const CliOptions& opt, double lambda) {
  auto cache = make_cache(opt);
  const auto built = mimocal::build_scenario(opt.cfg, cache.enabled() ? &cache : nullptr);
  mimocal::ThroughputSolver solver(
      built.chain,
      mimocal::default_theta_grid(opt.cfg.theta_min, opt.cfg.theta_max, opt.cfg.theta_points),
      opt.cfg.trunc);
  const mimocal::PeriodicSource src{lambda * opt.cfg.tau, opt.cfg.tau};
  const auto bound = solver.bound(src, opt.cfg.eps);
  nlohmann::json j{{"lambda_blocks_per_slot", lambda},
                   {"sigma_blocks", src.sigma},
                   {"tau", opt.cfg.tau},
                   {"eps", opt.cfg.eps},
                   {"feasible", bound.feasible()},
                   {"theta_star", bound.theta_star},
                   {"tail_mass", bound.tail_mass},
                   {"trunc", bound.trunc},
                   {"unstable_tail", bound.unstable_tail}};
  if (bound.d) j["delay_bound_slots"] = *bound.d;
  std::cout << j.dump(2) << "\n";
  if (opt.strict && (!bound.feasible() || bound.unstable_tail)) return kExitInfeasible;
  return kExitOk;
}

int run_throughput(const CliOptions& opt) {
  auto cache = make_cache(opt);
  const auto built = mimocal::build_scenario(opt.cfg, cache.enabled() ? &cache : nullptr);
  mimocal::ThroughputSolver solver(
      built.chain,
      mimocal::default_theta_grid(opt.cfg.theta_min, opt.cfg.theta_max, opt.cfg.theta_points),
      opt.cfg.trunc);
  mimocal::SearchSettings settings;
  settings.lambda_tol = opt.cfg.lambda_tol;
  const auto res = solver.solve(opt.cfg.d_guarantee, opt.cfg.eps, opt.cfg.tau, settings);
  nlohmann::json j{{"d_guarantee", opt.cfg.d_guarantee},
                   {"eps", opt.cfg.eps},
                   {"tau", opt.cfg.tau},
                   {"method", opt.cfg.method},
                   {"n", opt.cfg.n},
                   {"snr_db", opt.cfg.snr_db},
                   {"lambda_blocks_per_slot", res.lambda},
                   {"lambda_bits_per_s_per_hz", mimocal::blocks_to_rate(res.lambda, opt.cfg.units)},
                   {"sigma_blocks", res.sigma},
                   {"theta_star", res.bound.theta_star},
                   {"tail_mass", res.bound.tail_mass},
                   {"infeasible_at_zero", res.infeasible_at_zero},
                   {"unstable_tail", res.bound.unstable_tail},
                   {"bisection_evals", res.iterations}};
  if (res.bound.d) j["delay_bound_slots"] = *res.bound.d;
  std::cout << j.dump(2) << "\n";
  if (opt.strict && (res.infeasible_at_zero || res.bound.unstable_tail)) return kExitInfeasible;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay-constrained throughput of correlated MIMO channels via "
               "Markov service models"};
  app.set_version_flag("--version", std::string("mimocal ") + mimocal::kVersion);
  app.require_subcommand(1);

  CliOptions opt;
  double lambda = 0.0;

  auto* run = app.add_subcommand("run", "run an experiment preset and write CSV curves");
  run->add_option("--preset", opt.preset, "one of: fig2, fig3, fig4, fig5, table1")->required();
  run->add_option("--out-dir", opt.out_dir, "directory for CSV output (created if missing)");
  add_scenario_flags(run, opt);
  run->set_config("--config", "", "read options from an INI/TOML file");

  auto* chain = app.add_subcommand("chain", "build the service chain and print it as JSON");
  add_scenario_flags(chain, opt);
  chain->set_config("--config", "", "read options from an INI/TOML file");

  auto* bound = app.add_subcommand("bound", "delay bound at a fixed arrival rate");
  bound->add_option("--lambda", lambda, "arrival rate in blocks/slot")->required();
  add_scenario_flags(bound, opt);
  bound->set_config("--config", "", "read options from an INI/TOML file");

  auto* tput = app.add_subcommand("throughput",
                                  "largest rate whose delay bound meets the guarantee");
  add_scenario_flags(tput, opt);
  tput->set_config("--config", "", "read options from an INI/TOML file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, returns 0
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (app.got_subcommand(run)) return run_preset(opt);
    if (app.got_subcommand(chain)) return run_chain(opt);
    if (app.got_subcommand(bound)) return run_bound(opt, lambda);
    if (app.got_subcommand(tput)) return run_throughput(opt);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
