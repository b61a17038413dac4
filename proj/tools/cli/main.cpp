#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kinlangevin/error.hpp"
#include "kinlangevin/harness/commands.hpp"

namespace kh = kinlangevin::harness;

namespace {

// Exit codes: 0 success (including invalid certificates), 1 rejected input,
// 2 numerical failure during a run, 3 anything else.
int exit_code_for(const kinlangevin::Error& e) {
  switch (e.code()) {
    case kinlangevin::ErrorCode::NumericalBlowup:
    case kinlangevin::ErrorCode::InsufficientData:
    case kinlangevin::ErrorCode::NonPositiveValues:
    case kinlangevin::ErrorCode::WitnessNotFound:
      return 2;
    default:
      return 1;
  }
}

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool quiet = false;
};

int run(kh::ExperimentKind kind, const Options& opts) {
  kh::Overrides overrides{opts.out, opts.seed, opts.workers};
  kh::ExperimentConfig config;
  try {
    config = kh::load_config(opts.config, kind, overrides);
  } catch (const kinlangevin::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  try {
    const kh::RunOutcome outcome = kh::run_experiment(config);
    for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << '\n';
    if (!opts.quiet) {
      for (const auto& f : outcome.files) std::cout << f.string() << '\n';
    }
    return 0;
  } catch (const kinlangevin::Error& e) {
    kh::write_error_report(config, e);
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    kh::write_error_report(config, e);
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinetic Langevin convergence experiments"};
  app.require_subcommand(1);
  Options opts;
  std::optional<kh::ExperimentKind> chosen;

  const std::pair<const char*, const char*> commands[] = {
      {"oracle-ou", "closed-form oscillator rates against fitted chi-square decay"},
      {"simulate", "Euler-Maruyama ensemble with moment trajectory"},
      {"certify", "rate certificate for Hessian-scaled friction"},
      {"compare", "certificate against the constant-friction baseline"},
      {"audit", "Lyapunov functional decay along exact Gaussian flows"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out, "output directory (overrides output_dir)");
    sub->add_option("--seed", opts.seed, "overrides simulation.seed and constants.seed");
    sub->add_option("--workers", opts.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", opts.quiet, "do not list written files");
    const std::string kind_name = name;
    sub->callback([&chosen, kind_name] { chosen = kh::experiment_kind_from_string(kind_name); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  return run(*chosen, opts);
}
