#pragma once

// Dense symmetric linear-algebra kernels shared by every other module.
//
// All functions are pure: identical inputs give bit-identical outputs within
// one build, and results may be shared freely across threads.

#include <optional>
#include <string_view>

#include <Eigen/Dense>

namespace kinlangevin {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;

  Matrix reconstruct() const;
  double min_eigenvalue() const { return eigenvalues(0); }
  double max_eigenvalue() const { return eigenvalues(eigenvalues.size() - 1); }
};

/// |M_ij - M_ji| <= rel_tol * max(1, ||M||_F) for all i, j.
bool is_symmetric(const Matrix& m, double rel_tol = 1e-12);

/// Throws NotSymmetric (or DimensionMismatch for non-square input).
void require_symmetric(const Matrix& m, std::string_view what);

SpectralDecomposition symmetric_eigen(const Matrix& m);

/// 1e-10 times the largest absolute eigenvalue.
double default_spd_tolerance(const SpectralDecomposition& eig);

/// Principal square root of a symmetric positive definite matrix.
///
/// Throws NotPositiveDefinite when the smallest eigenvalue is <= tol; the
/// default tolerance is default_spd_tolerance().
Matrix spd_sqrt(const Matrix& m, std::optional<double> tol = std::nullopt);

/// Directional (Frechet) derivative of the matrix square root at m along dm.
///
/// Returns the symmetric X solving R X + X R = dm with R = spd_sqrt(m). The
/// Sylvester equation is solved in the eigenbasis of m, where it decouples
/// into X~_kl = (U^T dm U)_kl / (sqrt(l_k) + sqrt(l_l)).
Matrix spd_sqrt_directional_derivative(const Matrix& m, const Matrix& dm);

/// exp(m * t) for a square real matrix.
///
/// Uses the eigendecomposition when m is diagonalizable with a well-conditioned
/// eigenvector basis and falls back to scaling-and-squaring with a degree-13
/// Pade approximant otherwise (defective drift matrices, e.g. critical damping).
Matrix expm(const Matrix& m, double t);

/// Scaling-and-squaring path of expm, exposed for tests and benchmarks.
Matrix expm_pade(const Matrix& m);

/// E[x^T quad x + lin^T x + constant] for x ~ N(mean, cov).
double gaussian_quadratic_expectation(const Vector& mean, const Matrix& cov, const Matrix& quad,
                                      const Vector& lin, double constant);

/// log det of a symmetric positive definite matrix via Cholesky.
double log_det_spd(const Matrix& m);

/// Inverse of a symmetric positive definite matrix via Cholesky.
Matrix spd_inverse(const Matrix& m);

/// True if the Cholesky factorization succeeds and the smallest eigenvalue is positive.
bool is_positive_definite(const Matrix& m);

/// Largest absolute eigenvalue of a symmetric matrix (its spectral norm).
double symmetric_spectral_norm(const Matrix& m);

/// Block-diagonal [[a, 0], [0, b]].
Matrix block_diag(const Matrix& a, const Matrix& b);

}  // namespace kinlangevin
