#pragma once

// Exact moments and chi-square divergence for linear kinetic Langevin dynamics
// (quadratic potentials with constant friction).

#include <limits>
#include <vector>

#include "kinlangevin/friction.hpp"
#include "kinlangevin/linalg.hpp"
#include "kinlangevin/potentials.hpp"

namespace kinlangevin {

/// Gaussian on phase space: mean is (q, p) stacked, cov is 2d x 2d.
struct GaussianMoments {
  Vector mean;
  Matrix cov;

  int phase_dim() const { return static_cast<int>(mean.size()); }

  /// Validates sizes, symmetry and positive semidefiniteness (to -1e-10 ||cov||).
  static GaussianMoments make(Vector mean, Matrix cov);
};

/// dq = p dt, dp = -A q dt - Gamma p dt + sqrt(2 scale Gamma) dW.
class LinearDynamics {
 public:
  /// scale = 1 for the original dynamics and 1 / alpha for the rescaled ones.
  LinearDynamics(const Matrix& a, const Matrix& friction, double noise_scale = 1.0);

  /// Hessian of a quadratic potential with constant (or constant-Hessian) friction.
  static LinearDynamics from_problem(const Potential& potential, const FrictionSpec& spec,
                                     DynamicsForm form = DynamicsForm::Original, double alpha = 1.0);

  int dim() const { return static_cast<int>(a_.rows()); }
  const Matrix& a() const { return a_; }
  const Matrix& friction() const { return friction_; }
  double noise_scale() const { return noise_scale_; }

  /// F = [[0, I], [-A, -Gamma]].
  const Matrix& drift() const { return drift_; }
  /// sigma sigma^T = [[0, 0], [0, 2 scale Gamma]].
  const Matrix& noise_covariance() const { return noise_cov_; }

 private:
  Matrix a_;
  Matrix friction_;
  double noise_scale_;
  Matrix drift_;
  Matrix noise_cov_;
};

/// Moments at time t from init, exactly up to matrix-exponential accuracy.
GaussianMoments propagate(const LinearDynamics& dyn, const GaussianMoments& init, double t);

/// Moments at each of the (ascending) times.
std::vector<GaussianMoments> propagate_grid(const LinearDynamics& dyn, const GaussianMoments& init,
                                            const std::vector<double>& times);

/// Gibbs measure: mean 0, cov = scale * blockdiag(A^-1, I).
GaussianMoments stationary_moments(const LinearDynamics& dyn);

inline constexpr double kDivergent = std::numeric_limits<double>::infinity();

/// chi^2(rho || pi) for Gaussians. Returns kDivergent (+inf) when
/// Sigma_rho^-1 - Sigma_pi^-1 / 2 is not positive definite.
double gaussian_chi2(const GaussianMoments& rho, const GaussianMoments& pi);

inline bool is_divergent(double value) { return value == kDivergent; }

enum class DecayModel {
  Exponential,            ///< log chi2 = c - r t
  ExponentialTimesPower,  ///< log chi2 = c - r t + k log t
};

struct DecayFit {
  double rate = 0.0;
  double intercept = 0.0;
  double power = 0.0;  ///< k; zero for the plain exponential model
  int samples = 0;
  double t_first = 0.0;
  double t_last = 0.0;
};

/// Least-squares fit of log chi2 over the last tail_fraction of the samples.
DecayFit fit_decay(const std::vector<double>& times, const std::vector<double>& chi2, double tail_fraction = 0.5,
                   DecayModel model = DecayModel::Exponential);

double fit_decay_rate(const std::vector<double>& times, const std::vector<double>& chi2, double tail_fraction = 0.5,
                      DecayModel model = DecayModel::Exponential);

/// chi^2 rate of the 1-d oscillator with frequency w and friction lambda.
double ou_rate_closed_form(double w, double lambda);

/// Slowest coordinate rate of V = 1/2 sum v_i^2 q_i^2 under constant_scalar or hessian_sqrt(2) friction.
double diagonal_system_rate(const Vector& v, const FrictionSpec& spec);

}  // namespace kinlangevin
