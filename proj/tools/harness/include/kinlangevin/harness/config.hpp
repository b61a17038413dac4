#pragma once

// Experiment configuration: parsing, validation and the resolved (fully
// explicit) form echoed into every output file.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kinlangevin/friction.hpp"
#include "kinlangevin/gaussian.hpp"
#include "kinlangevin/potentials.hpp"

namespace kinlangevin::harness {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

enum class ExperimentKind { OracleOu, Simulate, Certify, Compare, Audit };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

struct PotentialConfig {
  std::string family;             ///< quadratic_diagonal | quadratic_general | perturbed_diagonal
  std::vector<double> v;          ///< diagonal families
  std::vector<std::vector<double>> a;  ///< quadratic_general
  double eps = 0.0;
  std::string perturbation = "log_cosh";

  PotentialPtr build() const;
};

struct ConstantsConfig {
  std::string source = "closed_form";  ///< closed_form | estimated | user_supplied
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  std::vector<double> lo;
  std::vector<double> hi;
  std::int64_t n_samples = 4096;
  std::optional<std::uint64_t> seed;

  AssumptionConstants build(const Potential& potential) const;
};

struct FrictionConfig {
  std::string kind;  ///< constant_scalar | constant_matrix | hessian_sqrt
  double lambda = 0.0;
  std::vector<std::vector<double>> matrix;
  double s = 2.0;

  FrictionSpec build() const;
};

struct InitialConfig {
  std::vector<double> mean;
  std::vector<std::vector<double>> cov;

  GaussianMoments build() const;
};

struct SimulationConfig {
  double dt = 1e-3;
  std::int64_t n_steps = 0;
  std::int64_t n_particles = 0;
  std::optional<std::uint64_t> seed;
  std::string form = "original";
  double alpha = 1.0;
  std::int64_t record_every = 1;
  int noise_refinement = 1;
  int workers = 1;
  InitialConfig initial;
};

struct OracleOuConfig {
  std::vector<double> w;
  std::vector<double> lambda;
  double t_max_factor = 20.0;  ///< times run to t_max_factor / closed-form rate
  int n_times = 401;
  double tail_fraction = 0.5;
  std::string model = "exponential";  ///< exponential | exponential_times_power
  std::vector<double> diagonal_v;     ///< optional dominance table for V = 1/2 sum v_i^2 q_i^2
};

struct CertificateConfig {
  std::vector<double> s_grid = {2.0};
  std::vector<double> x0_grid = {1000.0};
  std::vector<double> lambda_grid;
};

struct AuditConfig {
  std::string coefficients = "family";  ///< family | witness
  double x0 = 1000.0;
  std::vector<double> eps_rate = {1.0, 0.5, 0.1};
  double t_max = 10.0;
  int n_times = 200;
  double tolerance = 1e-6;
  InitialConfig initial;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Simulate;
  std::string output_dir = "out";
  std::optional<PotentialConfig> potential;
  ConstantsConfig constants;
  std::optional<FrictionConfig> friction;
  std::optional<SimulationConfig> simulation;
  std::optional<OracleOuConfig> oracle_ou;
  std::optional<CertificateConfig> certificate;
  std::optional<AuditConfig> audit;
};

/// Command-line values that replace the file's.
struct Overrides {
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

/// Parses and validates. Field errors throw Error(InvalidConfig) naming the
/// field, e.g. "simulation.dt: must be > 0".
ExperimentConfig parse_config(const Json& raw, ExperimentKind kind, const Overrides& overrides = {});

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentKind kind, const Overrides& overrides = {});

/// Every field with defaults filled in; parse_config(to_json(c)) reproduces c.
Json to_json(const ExperimentConfig& config);

}  // namespace kinlangevin::harness
