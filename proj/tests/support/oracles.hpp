#pragma once

// Independent reference computations used by the tests. Nothing here calls
// the library's own kernels.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Random SPD matrix with eigenvalues in [lo, hi] and a Haar-ish random basis.
inline Matrix random_spd(int d, std::uint64_t seed, double lo = 0.5, double hi = 5.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) g(i, j) = n01(gen);
  }
  const Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ();
  Vector lambda(d);
  for (int i = 0; i < d; ++i) lambda(i) = u(gen);
  Matrix m = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

inline Matrix random_symmetric(int d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n01;
  Matrix g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) g(i, j) = n01(gen);
  }
  return 0.5 * (g + g.transpose());
}

/// exp(m) by scaling, a long Taylor series and repeated squaring.
inline Matrix expm_taylor(const Matrix& m) {
  const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  while (norm / std::ldexp(1.0, squarings) > 0.25) ++squarings;
  const Matrix a = m / std::ldexp(1.0, squarings);
  Matrix term = Matrix::Identity(m.rows(), m.cols());
  Matrix sum = term;
  for (int k = 1; k < 40; ++k) {
    term = term * a / k;
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

/// Central difference of a matrix-valued function of one scalar.
inline Matrix central_difference(const std::function<Matrix(double)>& f, double h) {
  return (f(h) - f(-h)) / (2.0 * h);
}

/// Trapezoid rule on [lo, hi]^2 with n x n nodes.
inline double quadrature_2d(const std::function<double(double, double)>& f, double lo = -10.0, double hi = 10.0,
                            int n = 2001) {
  const double h = (hi - lo) / (n - 1);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = lo + i * h;
    const double wx = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      const double y = lo + j * h;
      const double wy = (j == 0 || j == n - 1) ? 0.5 : 1.0;
      row += wy * f(x, y);
    }
    acc += wx * row;
  }
  return acc * h * h;
}

/// Density of N(mean, cov) in two dimensions.
inline double gaussian_pdf_2d(double x, double y, const Vector& mean, const Matrix& cov) {
  const Eigen::Vector2d z(x - mean(0), y - mean(1));
  const Eigen::Matrix2d c = cov;
  const double det = c.determinant();
  return std::exp(-0.5 * z.dot(c.inverse() * z)) / (2.0 * M_PI * std::sqrt(det));
}

/// Gradient of the density of N(mean, cov) in two dimensions.
inline Eigen::Vector2d gaussian_pdf_grad_2d(double x, double y, const Vector& mean, const Matrix& cov) {
  const Eigen::Vector2d z(x - mean(0), y - mean(1));
  const Eigen::Matrix2d c = cov;
  return -gaussian_pdf_2d(x, y, mean, cov) * (c.inverse() * z);
}

/// max of f over n uniform draws in (lo, hi).
inline double brute_force_max(const std::function<double(double)>& f, double lo, double hi, int n,
                              std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  double best = -INFINITY;
  for (int i = 0; i < n; ++i) best = std::max(best, f(u(gen)));
  return best;
}

/// 1-d oscillator with w = 1 at critical damping: e^{Ft} = e^{-t} [[1 + t, t], [-t, 1 - t]].
inline Matrix critical_transition(double t) {
  Matrix m(2, 2);
  m << 1.0 + t, t, -t, 1.0 - t;
  return std::exp(-t) * m;
}

/// Closed-form covariance of the 1-d oscillator (w = 1) started at a point, lambda > 2.
inline Matrix overdamped_covariance(double lambda, double t) {
  const double r = std::sqrt(lambda * lambda - 4.0);
  const double a1 = (-lambda + r) / 2.0;
  const double a2 = (-lambda - r) / 2.0;
  const double p = (std::exp(2.0 * a1 * t) - 1.0) / (2.0 * a1);
  const double q = -(std::exp((a1 + a2) * t) - 1.0) / (a1 + a2);
  const double rr = (std::exp(2.0 * a2 * t) - 1.0) / (2.0 * a2);
  const double pref = 2.0 * lambda / ((a1 - a2) * (a1 - a2));
  // Eigenvectors of F = [[0, 1], [-1, -lambda]] are (1, a_i).
  Matrix cov(2, 2);
  cov(0, 0) = p + 2.0 * q + rr;
  cov(0, 1) = a1 * p + (a1 + a2) * q + a2 * rr;
  cov(1, 1) = a1 * a1 * p + 2.0 * a1 * a2 * q + a2 * a2 * rr;
  cov(1, 0) = cov(0, 1);
  return pref * cov;
}

}  // namespace oracle
