#include "kinlangevin/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>

#include "kinlangevin/error.hpp"

namespace kinlangevin {

namespace {

// Eigenvector condition numbers above this route expm to Pade; below it the
// spectral path loses at most ~1e-12 relative accuracy.
constexpr double kMaxEigenvectorCondition = 1e4;

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void require_spd(const SpectralDecomposition& eig, double tol, std::string_view what) {
  if (!(eig.min_eigenvalue() > tol)) {
    throw Error(ErrorCode::NotPositiveDefinite,
                std::string(what) + ": smallest eigenvalue " + std::to_string(eig.min_eigenvalue()) +
                    " is not above tolerance " + std::to_string(tol));
  }
}

std::optional<Matrix> expm_spectral(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a, true);
  if (es.info() != Eigen::Success) return std::nullopt;
  const Eigen::MatrixXcd v = es.eigenvectors();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(v);
  const auto& sv = svd.singularValues();
  const double smallest = sv(sv.size() - 1);
  if (!(smallest > 0.0) || sv(0) / smallest > kMaxEigenvectorCondition) return std::nullopt;

  const Eigen::VectorXcd lambda = es.eigenvalues();
  Eigen::VectorXcd e(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) e(i) = std::exp(lambda(i));
  const Eigen::MatrixXcd result = v * e.asDiagonal() * v.partialPivLu().inverse();
  return result.real();
}

}  // namespace

Matrix SpectralDecomposition::reconstruct() const {
  return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
}

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double bound = rel_tol * std::max(1.0, m.norm());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
      if (!(std::abs(m(i, j) - m(j, i)) <= bound)) return false;
    }
  }
  return true;
}

void require_symmetric(const Matrix& m, std::string_view what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": expected a non-empty square matrix");
  }
  if (!is_symmetric(m)) throw Error(ErrorCode::NotSymmetric, std::string(what));
}

SpectralDecomposition symmetric_eigen(const Matrix& m) {
  require_symmetric(m, "symmetric_eigen");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m));
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::InvalidArgument, "symmetric eigensolver did not converge");
  }
  return {es.eigenvalues(), es.eigenvectors()};
}

double default_spd_tolerance(const SpectralDecomposition& eig) {
  return 1e-10 * eig.eigenvalues.cwiseAbs().maxCoeff();
}

Matrix spd_sqrt(const Matrix& m, std::optional<double> tol) {
  const SpectralDecomposition eig = symmetric_eigen(m);
  require_spd(eig, tol.value_or(default_spd_tolerance(eig)), "spd_sqrt");
  const Vector root = eig.eigenvalues.array().sqrt();
  Matrix r = eig.eigenvectors * root.asDiagonal() * eig.eigenvectors.transpose();
  return symmetrized(r);
}

Matrix spd_sqrt_directional_derivative(const Matrix& m, const Matrix& dm) {
  require_symmetric(dm, "spd_sqrt_directional_derivative: dm");
  if (dm.rows() != m.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "spd_sqrt_directional_derivative: m and dm differ in size");
  }
  const SpectralDecomposition eig = symmetric_eigen(m);
  require_spd(eig, default_spd_tolerance(eig), "spd_sqrt_directional_derivative");

  const Matrix& u = eig.eigenvectors;
  const Vector root = eig.eigenvalues.array().sqrt();
  Matrix x = u.transpose() * symmetrized(dm) * u;
  for (Eigen::Index k = 0; k < x.rows(); ++k) {
    for (Eigen::Index l = 0; l < x.cols(); ++l) x(k, l) /= root(k) + root(l);
  }
  return symmetrized(u * x * u.transpose());
}

Matrix expm_pade(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "expm: matrix must be square");
  const Eigen::Index n = m.rows();
  static constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
      129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
      1323241920.0,        40840800.0,          960960.0,           16380.0,
      182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  const Matrix a = m / std::ldexp(1.0, squarings);

  const Matrix id = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix u =
      a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) r = r * r;
  return r;
}

Matrix expm(const Matrix& m, double t) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "expm: matrix must be square");
  const Eigen::Index n = m.rows();
  if (t == 0.0) return Matrix::Identity(n, n);
  const Matrix a = m * t;
  if (!a.allFinite()) throw Error(ErrorCode::InvalidArgument, "expm: non-finite input");
  if (a.isZero(0.0)) return Matrix::Identity(n, n);
  if (auto spectral = expm_spectral(a)) return *std::move(spectral);
  return expm_pade(a);
}

double gaussian_quadratic_expectation(const Vector& mean, const Matrix& cov, const Matrix& quad,
                                      const Vector& lin, double constant) {
  const Eigen::Index n = mean.size();
  if (cov.rows() != n || cov.cols() != n || quad.rows() != n || quad.cols() != n || lin.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "gaussian_quadratic_expectation: inconsistent sizes");
  }
  if (!is_positive_definite(cov)) {
    throw Error(ErrorCode::NotPositiveDefinite, "gaussian_quadratic_expectation: covariance");
  }
  return (quad * cov).trace() + mean.dot(quad * mean) + lin.dot(mean) + constant;
}

double log_det_spd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(symmetrized(m));
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "log_det_spd");
  const Matrix& l = llt.matrixLLT();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) > 0.0)) throw Error(ErrorCode::NotPositiveDefinite, "log_det_spd");
    acc += std::log(l(i, i));
  }
  return 2.0 * acc;
}

Matrix spd_inverse(const Matrix& m) {
  Eigen::LLT<Matrix> llt(symmetrized(m));
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "spd_inverse");
  return symmetrized(llt.solve(Matrix::Identity(m.rows(), m.cols())));
}

bool is_positive_definite(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0 || !m.allFinite()) return false;
  Eigen::LLT<Matrix> llt(symmetrized(m));
  if (llt.info() != Eigen::Success) return false;
  return llt.matrixLLT().diagonal().minCoeff() > 0.0;
}

double symmetric_spectral_norm(const Matrix& m) {
  return symmetric_eigen(m).eigenvalues.cwiseAbs().maxCoeff();
}

Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

}  // namespace kinlangevin
