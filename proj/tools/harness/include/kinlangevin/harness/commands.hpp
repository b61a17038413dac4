#pragma once

// The five experiments. Each writes its files into config.output_dir and
// returns the JSON report it wrote.

#include <filesystem>
#include <string>
#include <vector>

#include "kinlangevin/harness/config.hpp"

namespace kinlangevin::harness {

struct RunOutcome {
  Json report;
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

RunOutcome cmd_oracle_ou(const ExperimentConfig& config);
RunOutcome cmd_simulate(const ExperimentConfig& config);
RunOutcome cmd_certify(const ExperimentConfig& config);
RunOutcome cmd_compare(const ExperimentConfig& config);
RunOutcome cmd_audit(const ExperimentConfig& config);

/// Dispatches on config.kind after writing config.resolved.json.
RunOutcome run_experiment(const ExperimentConfig& config);

/// Writes error.json (code, message, step for blowups, config echo) into the output directory.
void write_error_report(const ExperimentConfig& config, const std::exception& error);

/// Moments of pi for potential V: exact for quadratics, moment-matched by
/// one-dimensional quadrature for separable perturbations. noise_scale is 1
/// for the original dynamics and 1 / alpha for the rescaled ones.
GaussianMoments reference_moments(const Potential& potential, double noise_scale);

}  // namespace kinlangevin::harness
