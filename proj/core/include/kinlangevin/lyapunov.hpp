#pragma once

// L(rho) = chi^2(rho || pi) + E_pi[grad h^T S grad h], h = rho / pi, evaluated
// in closed form for Gaussian rho and pi.

#include <vector>

#include "kinlangevin/gaussian.hpp"
#include "kinlangevin/linalg.hpp"
#include "kinlangevin/rate_bounds.hpp"

namespace kinlangevin {

struct WeightMatrixS {
  Matrix s;  ///< 2d x 2d, SPD
  LyapunovCoefficients coeffs;
};

/// [[b Gamma^-2, a Gamma^-1], [a Gamma^-1, c I]]. Throws DegenerateS or NotPositiveDefinite.
WeightMatrixS build_s(const LyapunovCoefficients& coeffs, const Matrix& gamma);

/// P^T S P with P = blockdiag(I, sqrt(alpha) I): the weight of the rescaled
/// functional expressed in original coordinates. gamma_rescaled is Gamma / sqrt(alpha).
WeightMatrixS build_s_original(const LyapunovCoefficients& coeffs, const Matrix& gamma_rescaled, double alpha);

struct LyapunovValue {
  double chi2 = 0.0;
  double cross = 0.0;  ///< E_pi[grad h^T S grad h]
  double total = 0.0;
  bool divergent = false;
};

LyapunovValue lyapunov_value_gaussian(const GaussianMoments& rho, const GaussianMoments& pi, const WeightMatrixS& s);

struct AuditPoint {
  double t = 0.0;
  LyapunovValue value;
  double bound = 0.0;       ///< e^{-rate (t - t0)} L(t0) (1 + tol)
  double derivative = 0.0;  ///< central difference of L; NaN at the ends
  bool within_bound = true;
  bool derivative_ok = true;
};

struct AuditReport {
  double rate = 0.0;
  double tolerance = 0.0;
  std::size_t first_finite = 0;  ///< earlier points were divergent and are excluded
  std::vector<AuditPoint> points;
  bool monotone = false;
  bool bound_holds = false;
  bool derivative_holds = false;
  double max_bound_ratio = 0.0;  ///< max L(t) / (e^{-rate (t - t0)} L(t0))

  bool passed() const { return monotone && bound_holds && derivative_holds; }
};

/// Evaluates L along the exact propagation of init and checks monotone decay,
/// L(t) <= e^{-rate (t - t0)} L(t0) (1 + tol) and dL/dt <= -rate L + tol L(t0).
/// times must be ascending.
AuditReport decay_audit(const LinearDynamics& dyn, const GaussianMoments& init, const WeightMatrixS& s, double rate,
                        const std::vector<double>& times, double tol = 1e-6);

/// Same, with the certificate's original-time rate. Throws InvalidArgument for an invalid certificate.
AuditReport decay_audit(const LinearDynamics& dyn, const GaussianMoments& init, const WeightMatrixS& s,
                        const RateCertificate& cert, const std::vector<double>& times, double tol = 1e-6);

}  // namespace kinlangevin
