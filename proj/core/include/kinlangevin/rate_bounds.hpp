#pragma once

// Closed-form convergence-rate certificates for the Hessian-scaled friction
// Gamma = s sqrt(Hess V), and the constant-friction baseline they are compared to.

#include <vector>

#include "kinlangevin/linalg.hpp"
#include "kinlangevin/potentials.hpp"

namespace kinlangevin {

/// Blocks of S = [[b Gamma^-2, a Gamma^-1], [a Gamma^-1, c I]] and the friction scale s.
struct LyapunovCoefficients {
  double s = 2.0;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  double determinant() const { return b * c - a * a; }
};

struct LConstants {
  double l1 = 0.0;
  double l2 = 0.0;
};

struct RateCertificate {
  AssumptionConstants constants;
  LyapunovCoefficients coeffs;
  double l1 = 0.0;
  double l2 = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  double x_low = 0.0;   ///< s^-1 sqrt(alpha / beta)
  double x_high = 0.0;  ///< s^-1
  double rescaled_rate = 0.0;  ///< m1 - gamma^2 m2
  double time_multiplier = 1.0;
  double original_rate = 0.0;  ///< time_multiplier * rescaled_rate
  double gamma_threshold = 0.0;  ///< sqrt(m1 / m2)
  bool valid = false;            ///< gamma < sqrt(m1 / m2)
};

/// Throws DegenerateS if b c - a^2 <= 0.
LConstants l_constants(const AssumptionConstants& constants, const LyapunovCoefficients& coeffs);

double f_of(double x, const AssumptionConstants& constants, const LyapunovCoefficients& coeffs);
double g_of(double x, const AssumptionConstants& constants, const LyapunovCoefficients& coeffs);
double g_of(double x, const AssumptionConstants& constants, const LyapunovCoefficients& coeffs, const LConstants& l);

/// Throws InvalidCoefficients unless a + c = b s^-2 (to 1e-12 b) and alpha^-1 + c - a s^-2 > 0.
void check_coefficients(const AssumptionConstants& constants, const LyapunovCoefficients& coeffs);

/// m1, m2 and the rate, using the constants as given. time_multiplier is sqrt(alpha).
/// An invalid certificate (gamma too large) is returned, not thrown.
RateCertificate certificate(const AssumptionConstants& constants, const LyapunovCoefficients& coeffs);

/// s = 2, a = (2x + 2) / alpha, b = (12x + 8) / alpha, c = x / alpha.
LyapunovCoefficients cor17_coefficients(const AssumptionConstants& constants, double x0);

/// The same family for any s: c = x / alpha, a = s^2 (1 + x) / (2 alpha),
/// b = s^2 (a + c). Equals cor17_coefficients at s = 2.
LyapunovCoefficients coefficient_family(const AssumptionConstants& constants, double s, double x0);

/// m1 ceiling 2 s^-1 / (4 s^-2 + 1) of the family at kappa = 1.
double m1_ceiling(double s);

struct OptimizerEntry {
  double s = 0.0;
  double x0 = 0.0;
  RateCertificate cert;
};

struct OptimizerResult {
  RateCertificate best;
  std::size_t best_index = 0;
  std::vector<OptimizerEntry> table;  ///< s-major, x0-minor
};

/// Sweeps coefficient_family over s and x0 and returns the largest m1; ties go to the lowest index.
OptimizerResult optimize_m1(const AssumptionConstants& constants, const std::vector<double>& s_grid,
                            const std::vector<double>& x0_grid);

/// Rate of the constant-friction baseline for one eps in (-1, 1).
double lambda_dms(double lambda, double alpha, double eps);

/// sup over eps in (0, 1) of lambda_dms: dense grid then golden-section refinement.
double lambda_dms_sup(double lambda, double alpha, int grid_size = 4096, int refine_iters = 200);

struct ComparisonRow {
  double lambda = 0.0;
  double baseline = 0.0;  ///< 2 Lambda_DMS(lambda, alpha)
  double margin = 0.0;    ///< cert.original_rate - baseline
  bool dominates = false;
};

struct ComparisonReport {
  bool applicable = false;  ///< false when the certificate is invalid
  double certified_rate = 0.0;
  double ratio = 0.0;  ///< beta^2 gamma^2 d / alpha^3
  bool all_dominate = false;
  double min_margin = 0.0;
  std::vector<ComparisonRow> rows;
};

ComparisonReport compare_to_constant_friction(const AssumptionConstants& constants, const RateCertificate& cert,
                                              const std::vector<double>& lambda_grid);

struct RescaledConstants {
  AssumptionConstants constants;  ///< (1, beta / alpha, gamma / sqrt(alpha))
  double rate_multiplier = 1.0;   ///< sqrt(alpha)
};

RescaledConstants rescale_rate(const AssumptionConstants& original);
AssumptionConstants unrescale(const RescaledConstants& rescaled);

/// Certificate computed on the rescaled constants and reported in original time.
RateCertificate certify_rescaled(const AssumptionConstants& original, const LyapunovCoefficients& coeffs);

/// Witness for the diagonal quadratic potential with s = 2:
/// b = 2 (a + x), c = (a - y) / 2.
struct DiagonalWitness {
  double a = 0.0;
  double x = 0.0;
  double y = 0.0;
  double k = 0.0;  ///< eps_rate / 2
  LyapunovCoefficients coeffs;
  Vector frequencies;  ///< rescaled v_i = v_i / min v
  double rescaled_rate = 0.0;  ///< 2 - eps_rate
  double original_rate = 0.0;  ///< min v (2 - eps_rate)
  double min_margin = 0.0;     ///< smallest of g1, g3, g1 g3 - g2^2 over i
};

struct WitnessTerms {
  double g1 = 0.0;
  double g2 = 0.0;
  double g3 = 0.0;
  bool holds() const { return g1 > 0.0 && g3 > 0.0 && g1 * g3 - g2 * g2 > 0.0; }
};

/// The three scalar conditions for one rescaled frequency v >= 1.
WitnessTerms witness_terms(double v, double a, double x, double y, double k);

/// Searches a over 1, 2, 4, ... up to a_cap, with (x, y) = (1, 1/2) first and a
/// small grid after. Throws WitnessNotFound.
DiagonalWitness diag_quadratic_certificate(const Vector& v, double eps_rate, double a_cap = 1e12);

}  // namespace kinlangevin
