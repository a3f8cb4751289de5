#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "uhebo/harness.hpp"

namespace {

uhebo::ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw uhebo::ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;
  return uhebo::config_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian-optimization benchmark harness"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment and write traces.csv + summary.json");
  std::string config_path;
  run->add_option("--config", config_path, "JSON config file with ExperimentConfig fields");

  std::string objective;
  std::vector<std::string> strategies;
  int budget = -1, repeats = -1, init_points = -1, mse_grid = -1, threads = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double mt_factor = -1.0, ucb_mult = -1.0, noise_std = -2.0;
  std::string out_dir;
  run->add_option("--objective", objective, "objective name (branin, hartmann3, deceptive, h1)");
  run->add_option("--strategy", strategies, "strategy name, repeatable")->take_all();
  run->add_option("--budget", budget, "evaluation budget T");
  run->add_option("--repeats", repeats, "independent repeats");
  run->add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t v) { seed = v; seed_set = true; }, "base seed");
  run->add_option("--init-points", init_points, "initial design size (0 = 3*dim)");
  run->add_option("--mt-factor", mt_factor, "M_t multiplier for the consistent loss");
  run->add_option("--ucb-mult", ucb_mult, "GP-UCB standard-deviation multiplier");
  run->add_option("--noise-std", noise_std, "observation noise (negative = objective default)");
  run->add_option("--mse-grid", mse_grid, "GP-fit MSE grid size (0 disables)");
  run->add_option("--out-dir", out_dir, "output directory");
  run->add_option("--threads", threads, "worker threads across run cells");

  CLI11_PARSE(app, argc, argv);

  try {
    uhebo::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (!objective.empty()) cfg.objective = objective;
    if (!strategies.empty()) cfg.strategies = strategies;
    if (budget >= 0) cfg.budget = budget;
    if (repeats >= 0) cfg.repeats = repeats;
    if (seed_set) cfg.base_seed = seed;
    if (init_points >= 0) cfg.init_points = init_points;
    if (mt_factor >= 0.0) cfg.mt_factor = mt_factor;
    if (ucb_mult >= 0.0) cfg.ucb_multiplier = ucb_mult;
    if (noise_std > -2.0) cfg.noise_std = noise_std;
    if (mse_grid >= 0) cfg.mse_grid = mse_grid;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (threads >= 1) cfg.threads = threads;

    const uhebo::ExperimentResult result = uhebo::run_experiment(cfg);
    std::cout << "wrote " << cfg.out_dir << "/traces.csv and " << cfg.out_dir
              << "/summary.json (config hash " << result.hash << ")\n";
    for (const auto& [name, agg] : result.summary) {
      std::cout << "  " << name;
      if (!agg.final_regrets.empty())
        std::cout << "  final regret " << agg.regret_mean << " +/- " << agg.regret_se;
      if (agg.mse_mean) std::cout << "  mse " << *agg.mse_mean << " +/- " << *agg.mse_se;
      std::cout << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
