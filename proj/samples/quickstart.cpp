// Minimal library walkthrough: run the bandit-scheduled optimizer on the
// 2-D deceptive benchmark and print the regret curve.

#include <iostream>

#include "uhebo/harness.hpp"

int main() {
  const uhebo::Objective obj = uhebo::make_objective("deceptive");

  uhebo::StrategyConfig cfg;
  const uhebo::RunTrace trace =
      uhebo::run_strategy(uhebo::StrategyKind::kUhe, obj, /*budget=*/40, /*seed=*/7, cfg);

  const std::vector<double> regret = uhebo::simple_regret(trace, obj);
  std::cout << "t  best_so_far  simple_regret\n";
  for (std::size_t i = 0; i < trace.records.size(); i += 5)
    std::cout << trace.records[i].t << "  " << trace.records[i].best_so_far << "  " << regret[i]
              << "\n";
  std::cout << "final regret: " << regret.back() << "\n";
  return 0;
}
