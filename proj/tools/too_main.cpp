// too: trajectory-oriented optimization experiment harness.
//
// Subcommands:
//   optimize  run one calibration campaign from a JSON config
//   simulate  run the epidemic simulator once and print the trajectory CSV
//   compare   paired surrogate comparison over repeated campaigns
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

#include <CLI11.hpp>
#include <chrono>
#include <iostream>
#include <optional>
#include <string>

#include "too/artifacts.hpp"
#include "too/compare.hpp"
#include "too/config.hpp"

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> budget_init;
  std::optional<int> budget_max;

  void apply(too::CampaignConfig& cfg) const {
    if (seed) cfg.seed = *seed;
    if (out) cfg.out_dir = *out;
    if (budget_init) cfg.options.n_initial = *budget_init;
    if (budget_max) cfg.options.n_max = *budget_max;
    if (cfg.options.n_max < cfg.options.n_initial)
      throw too::ConfigError("budget overrides: --budget-max must be >= --budget-init");
  }
};

void add_override_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--seed", ov.seed, "Override the config rng seed");
  cmd->add_option("--out", ov.out, "Override the output directory");
  cmd->add_option("--budget-init", ov.budget_init, "Override the initial design size");
  cmd->add_option("--budget-max", ov.budget_max, "Override the total evaluation budget");
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_optimize(const std::string& config_path, const Overrides& ov) {
  auto cfg = too::CampaignConfig::load(config_path);
  ov.apply(cfg);
  const auto prob = cfg.make_problem();

  too::Rng truth_rng = too::substream(cfg.seed, 424242);
  too::ObjectiveSpec spec;
  const auto truth_pair = cfg.resolve_truth(prob, spec, truth_rng);

  const auto t0 = std::chrono::steady_clock::now();
  too::Rng rng(cfg.seed);
  const auto res =
      too::run_campaign(prob.simulator, spec, prob.times_unit, prob.dim, cfg.options, rng);
  too::artifacts::write_campaign_artifacts(cfg.out_dir, cfg, res, spec, prob.times_raw,
                                           truth_pair, seconds_since(t0));
  std::cout << "evaluations: " << res.evals.size() << "\nbest g: " << res.best_g << " (run "
            << res.best_run_id << ", seed "
            << res.evals[static_cast<size_t>(res.best_run_id)].seed
            << ")\nartifacts: " << cfg.out_dir << std::endl;
  return 0;
}

int cmd_compare(const std::string& config_path, const Overrides& ov) {
  auto cfg = too::CampaignConfig::load(config_path);
  ov.apply(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = too::run_compare(cfg);
  too::write_compare_artifacts(cfg.out_dir, cfg, res, seconds_since(t0));
  std::cout << "repetitions: " << cfg.compare.repetitions << "\narm A wins: " << res.wins_a
            << " (win rate " << res.win_rate_a << ")\nartifacts: " << cfg.out_dir << std::endl;
  return 0;
}

int cmd_simulate(double beta, double kappa_a, double kappa_s, int seed, int horizon,
                 const std::vector<int>& times) {
  too::seir::SeirParams params;
  params.beta = beta;
  params.kappa_a = kappa_a;
  params.kappa_s = kappa_s;
  const auto traj = too::seir::simulate(params, seed, horizon, times);
  too::seir::write_trajectory_csv_header(std::cout);
  too::seir::write_trajectory_csv_rows(std::cout, traj, 0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory-oriented optimization of stochastic simulators"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;

  auto* optimize = app.add_subcommand("optimize", "Run one calibration campaign");
  optimize->add_option("--config", config_path, "JSON config file")->required();
  add_override_flags(optimize, ov);

  auto* compare = app.add_subcommand("compare", "Paired surrogate comparison");
  compare->add_option("--config", config_path, "JSON config file")->required();
  add_override_flags(compare, ov);

  double beta = 0.4, kappa_a = 0.25, kappa_s = 0.25;
  int sim_seed = 0, horizon = 100;
  std::vector<int> times = {20, 40, 60, 80, 100};
  auto* simulate = app.add_subcommand("simulate", "Print one simulated trajectory as CSV");
  simulate->add_option("--beta", beta, "Transmission rate per day");
  simulate->add_option("--kappa-a", kappa_a, "E -> asymptomatic rate per day");
  simulate->add_option("--kappa-s", kappa_s, "E -> presymptomatic rate per day");
  simulate->add_option("--seed", sim_seed, "Integer seed label");
  simulate->add_option("--horizon", horizon, "Days to simulate");
  simulate->add_option("--times", times, "Output days (ascending)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  }

  try {
    if (optimize->parsed()) return cmd_optimize(config_path, ov);
    if (compare->parsed()) return cmd_compare(config_path, ov);
    return cmd_simulate(beta, kappa_a, kappa_s, sim_seed, horizon, times);
  } catch (const too::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
