#pragma once

// Euler-Maruyama ensembles for the original and rescaled kinetic Langevin
// dynamics with counter-based noise.
//
// Particle i's noise at step k depends only on (seed, i, k), so results do not
// depend on the worker count and growing N never changes existing particles.

#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "kinlangevin/friction.hpp"
#include "kinlangevin/gaussian.hpp"
#include "kinlangevin/potentials.hpp"

namespace kinlangevin {

inline constexpr double kBlowupThreshold = 1e12;

/// N particles in d dimensions, positions and momenta stored row-major (N x d).
struct Ensemble {
  std::int64_t n = 0;
  int d = 0;
  std::vector<double> q;
  std::vector<double> p;
  double time = 0.0;
  std::uint64_t seed = 0;
  std::int64_t steps_taken = 0;
  double dt = 0.0;

  static Ensemble zeros(std::int64_t n, int d);
  /// Draws N particles from a phase-space Gaussian (possibly degenerate).
  static Ensemble from_gaussian(const GaussianMoments& moments, std::int64_t n, std::uint64_t seed);
  /// N copies of one phase-space point.
  static Ensemble from_point(const Vector& q0, const Vector& p0, std::int64_t n);

  std::span<double> q_row(std::int64_t i) { return {q.data() + i * d, static_cast<std::size_t>(d)}; }
  std::span<double> p_row(std::int64_t i) { return {p.data() + i * d, static_cast<std::size_t>(d)}; }
};

struct SimConfig {
  double dt = 1e-3;
  std::int64_t n_steps = 0;
  std::int64_t n_particles = 1;
  std::uint64_t seed = 0;
  DynamicsForm form = DynamicsForm::Original;
  double alpha = 1.0;  ///< used by the rescaled form only
  /// Each step's Brownian increment is the normalized sum of this many fine
  /// increments. Runs with dt * noise_refinement equal share their paths.
  int noise_refinement = 1;
  int workers = 1;
  bool inject_noise = true;

  void validate() const;
};

struct MomentSummary {
  double time = 0.0;
  std::int64_t step = 0;
  Vector mean;  ///< (q, p), size 2d
  Matrix cov;   ///< unbiased sample covariance, 2d x 2d
  double chi2_proxy = std::numeric_limits<double>::quiet_NaN();
};

struct SimulationResult {
  std::vector<MomentSummary> trajectory;
  std::vector<std::string> warnings;
};

class Simulator {
 public:
  Simulator(PotentialPtr potential, FrictionSpec friction, SimConfig config);

  const SimConfig& config() const { return config_; }
  const FrictionField& friction() const { return field_; }

  /// One Euler-Maruyama step of every particle. Throws NumericalBlowup.
  void step(Ensemble& ensemble) const;

  /// n_steps steps.
  void advance(Ensemble& ensemble, std::int64_t n_steps) const;

  /// config().n_steps steps, recording moments at step 0 and every
  /// record_every steps (and at the last step). chi2_proxy is filled when pi is given.
  SimulationResult run(Ensemble& ensemble, std::int64_t record_every, const GaussianMoments* pi = nullptr) const;

  /// dt * lambda_max(Gamma) < 2 at the ensemble's mean position, as a message if violated.
  std::vector<std::string> stability_warnings(const Ensemble& ensemble) const;

 private:
  void check_ensemble(const Ensemble& ensemble) const;

  PotentialPtr potential_;
  SimConfig config_;
  FrictionField field_;
};

void step(Ensemble& ensemble, PotentialPtr potential, const FrictionSpec& friction, const SimConfig& config);

SimulationResult run(Ensemble& ensemble, PotentialPtr potential, const FrictionSpec& friction,
                     const SimConfig& config, std::int64_t record_every, const GaussianMoments* pi = nullptr);

/// Empirical mean and covariance; reduction order is fixed, so the result is
/// independent of the worker count.
MomentSummary summarize(const Ensemble& ensemble, int workers = 1);

/// chi^2 of the moment-matched Gaussian against pi. Only exact for Gaussian
/// ensembles; throws NotPositiveDefinite for a degenerate ensemble.
double estimate_chi2_gaussian_proxy(const Ensemble& ensemble, const GaussianMoments& pi);
double estimate_chi2_gaussian_proxy(const MomentSummary& summary, const GaussianMoments& pi);

/// Header: time, mean_1..mean_2d, cov_11..cov_2d2d, chi2_proxy. A non-empty
/// comment is written first as a '#' line.
void write_trajectory_csv(std::ostream& out, const std::vector<MomentSummary>& trajectory,
                          const std::string& comment = {});

}  // namespace kinlangevin
