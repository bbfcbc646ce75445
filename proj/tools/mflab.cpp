// mflab: batch front end for the condition checks, simulations and studies.
//
//   mflab <check|simulate|mkv|poc|value|hausdorff|gbm|refine> --config FILE
//         [--seed U64] [--threads N] [--out DIR] [--force]
//
// Exit codes: 0 success, 1 runtime or check failure, 2 usage/config error.

#include <iostream>

#include "CLI11.hpp"
#include "mflab/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mean-field SPDE control laboratory"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  mflab::RunOptions opt;
  app.add_option("--config", opt.config, "Experiment config file")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", opt.seed, "Override sim.seed");
  app.add_option("--threads", opt.threads, "Worker threads (never changes results)")->check(CLI::PositiveNumber);
  app.add_option("--out", opt.out, "Output directory (default out/<command>)");
  app.add_flag("--force", opt.force, "Overwrite a directory holding another config's output");

  const char* help[] = {
      "Run the condition checkers",
      "Simulate the n-particle system",
      "Solve the mean-field (McKean-Vlasov) law by Picard iteration",
      "Propagation-of-chaos study",
      "Value estimates over the control family and value convergence",
      "Hausdorff distance between attainable-law sets",
      "G-Brownian-motion sublinear expectation demo",
      "Time-step refinement study",
  };
  const auto& names = mflab::command_names();
  for (std::size_t i = 0; i < names.size(); ++i) app.add_subcommand(names[i], help[i]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  return mflab::run_command(app.get_subcommands().front()->get_name(), opt, std::cout, std::cerr);
}
