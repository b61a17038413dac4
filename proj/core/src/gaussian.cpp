#include "kinlangevin/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kinlangevin/error.hpp"

namespace kinlangevin {

namespace {

// Van Loan steps longer than this (in units of 1 / ||F||_1) lose accuracy to
// the growing e^{-F^T h} block.
constexpr double kMaxVanLoanStep = 1.0;

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double norm1(const Matrix& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

struct VanLoanStep {
  Matrix transition;  // e^{F h}
  Matrix injected;    // int_0^h e^{F s} Q e^{F^T s} ds
};

VanLoanStep van_loan(const Matrix& f, const Matrix& q, double h) {
  const Eigen::Index n = f.rows();
  Matrix m = Matrix::Zero(2 * n, 2 * n);
  m.topLeftCorner(n, n) = -f;
  m.topRightCorner(n, n) = q;
  m.bottomRightCorner(n, n) = f.transpose();
  const Matrix e = expm(m, h);
  const Matrix transition = e.bottomRightCorner(n, n).transpose();
  return {transition, sym(transition * e.topRightCorner(n, n))};
}

}  // namespace

GaussianMoments GaussianMoments::make(Vector mean, Matrix cov) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size() || mean.size() == 0 || mean.size() % 2 != 0) {
    throw Error(ErrorCode::DimensionMismatch, "GaussianMoments: mean must have even size 2d and cov be 2d x 2d");
  }
  require_symmetric(cov, "GaussianMoments: cov");
  const SpectralDecomposition eig = symmetric_eigen(cov);
  const double scale = std::max(eig.eigenvalues.cwiseAbs().maxCoeff(), 1e-300);
  if (eig.min_eigenvalue() < -1e-10 * scale) {
    throw Error(ErrorCode::NotPositiveDefinite, "GaussianMoments: cov is not positive semidefinite");
  }
  return {std::move(mean), sym(cov)};
}

LinearDynamics::LinearDynamics(const Matrix& a, const Matrix& friction, double noise_scale)
    : a_(a), friction_(friction), noise_scale_(noise_scale) {
  require_symmetric(a, "LinearDynamics: A");
  require_symmetric(friction, "LinearDynamics: Gamma");
  if (a.rows() != friction.rows()) throw Error(ErrorCode::DimensionMismatch, "LinearDynamics: A and Gamma differ");
  if (!is_positive_definite(a)) throw Error(ErrorCode::NotPositiveDefinite, "LinearDynamics: A");
  if (!is_positive_definite(friction)) throw Error(ErrorCode::NotPositiveDefinite, "LinearDynamics: Gamma");
  if (!(noise_scale > 0.0) || !std::isfinite(noise_scale)) {
    throw Error(ErrorCode::InvalidArgument, "LinearDynamics: noise scale must be positive");
  }
  const Eigen::Index d = a.rows();
  drift_ = Matrix::Zero(2 * d, 2 * d);
  drift_.topRightCorner(d, d) = Matrix::Identity(d, d);
  drift_.bottomLeftCorner(d, d) = -a_;
  drift_.bottomRightCorner(d, d) = -friction_;
  noise_cov_ = Matrix::Zero(2 * d, 2 * d);
  noise_cov_.bottomRightCorner(d, d) = 2.0 * noise_scale_ * friction_;
}

LinearDynamics LinearDynamics::from_problem(const Potential& potential, const FrictionSpec& spec, DynamicsForm form,
                                            double alpha) {
  if (!potential.constant_hessian()) {
    throw Error(ErrorCode::UnsupportedPotential, "linear dynamics need a quadratic potential, got " + potential.family());
  }
  const Vector q0 = Vector::Zero(potential.dim());
  return {potential.hessian(q0), gamma(spec, potential, q0), kinlangevin::noise_scale(form, alpha)};
}

GaussianMoments propagate(const LinearDynamics& dyn, const GaussianMoments& init, double t) {
  return propagate_grid(dyn, init, {t}).front();
}

std::vector<GaussianMoments> propagate_grid(const LinearDynamics& dyn, const GaussianMoments& init,
                                            const std::vector<double>& times) {
  const Matrix& f = dyn.drift();
  if (init.phase_dim() != f.rows()) throw Error(ErrorCode::DimensionMismatch, "propagate: init size");
  std::vector<GaussianMoments> out;
  out.reserve(times.size());
  const double fn = norm1(f);
  double prev = 0.0;
  Matrix cov = init.cov;
  for (const double t : times) {
    if (!(t >= prev) || !std::isfinite(t)) {
      throw Error(ErrorCode::InvalidArgument, "propagate: times must be finite, non-negative and ascending");
    }
    const double span = t - prev;
    if (span > 0.0) {
      const auto pieces = static_cast<long>(std::max(1.0, std::ceil(span * fn / kMaxVanLoanStep)));
      const VanLoanStep piece = van_loan(f, dyn.noise_covariance(), span / static_cast<double>(pieces));
      for (long k = 0; k < pieces; ++k) cov = sym(piece.transition * cov * piece.transition.transpose() + piece.injected);
    }
    out.push_back({expm(f, t) * init.mean, cov});
    prev = t;
  }
  return out;
}

GaussianMoments stationary_moments(const LinearDynamics& dyn) {
  const Eigen::Index d = dyn.dim();
  Matrix cov = block_diag(spd_inverse(dyn.a()), Matrix::Identity(d, d)) * dyn.noise_scale();
  return {Vector::Zero(2 * d), cov};
}

double gaussian_chi2(const GaussianMoments& rho, const GaussianMoments& pi) {
  const Eigen::Index n = rho.mean.size();
  if (pi.mean.size() != n || rho.cov.rows() != n || pi.cov.rows() != n) {
    throw Error(ErrorCode::DimensionMismatch, "gaussian_chi2: sizes differ");
  }
  if (!is_positive_definite(rho.cov)) throw Error(ErrorCode::NotPositiveDefinite, "gaussian_chi2: rho covariance");
  if (!is_positive_definite(pi.cov)) throw Error(ErrorCode::NotPositiveDefinite, "gaussian_chi2: pi covariance");

  // Completing the square in int rho^2 / pi after whitening by pi = N(mu2, L L^T):
  // rho becomes N(m, I + D) and
  //   log(1 + chi2) = m^T (I - D)^-1 m - 1/2 sum_i log(1 - delta_i^2),
  // delta_i the eigenvalues of D. Working with D = L^-1 (Sigma1 - Sigma2) L^-T
  // keeps full relative accuracy when rho is close to pi.
  const Eigen::LLT<Matrix> llt(sym(pi.cov));
  const auto l = llt.matrixL();
  Matrix d = l.solve(Matrix(rho.cov - pi.cov));
  d = l.solve(Matrix(d.transpose()));
  const Vector m = l.solve(Vector(rho.mean - pi.mean));
  const Eigen::SelfAdjointEigenSolver<Matrix> es(sym(d));
  const Vector& delta = es.eigenvalues();
  if (!(delta.maxCoeff() < 1.0)) return kDivergent;
  const Vector mt = es.eigenvectors().transpose() * m;
  double log_one_plus = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    log_one_plus += mt(i) * mt(i) / (1.0 - delta(i)) - 0.5 * std::log1p(-delta(i) * delta(i));
  }
  if (!(log_one_plus <= 709.0)) return kDivergent;
  return std::max(0.0, std::expm1(log_one_plus));
}

DecayFit fit_decay(const std::vector<double>& times, const std::vector<double>& chi2, double tail_fraction,
                   DecayModel model) {
  if (times.size() != chi2.size()) throw Error(ErrorCode::DimensionMismatch, "fit_decay: times and values differ");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "fit_decay: tail_fraction must be in (0, 1]");
  }
  const std::size_t n = times.size();
  const auto used = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n) - 1e-9));
  if (used < 8) {
    throw Error(ErrorCode::InsufficientData, "fit_decay: " + std::to_string(used) + " samples in the tail, need 8");
  }
  const std::size_t first = n - used;
  const int cols = model == DecayModel::Exponential ? 2 : 3;
  Matrix x(static_cast<Eigen::Index>(used), cols);
  Vector y(static_cast<Eigen::Index>(used));
  for (std::size_t i = first; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i - first);
    if (!(chi2[i] > 0.0) || !std::isfinite(chi2[i])) {
      throw Error(ErrorCode::NonPositiveValues, "fit_decay: value at t = " + std::to_string(times[i]) +
                                                    " is not positive and finite");
    }
    x(r, 0) = 1.0;
    x(r, 1) = times[i];
    if (cols == 3) {
      if (!(times[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "fit_decay: power model needs t > 0");
      x(r, 2) = std::log(times[i]);
    }
    y(r) = std::log(chi2[i]);
  }
  const Vector coef = x.colPivHouseholderQr().solve(y);
  DecayFit fit;
  fit.intercept = coef(0);
  fit.rate = -coef(1);
  fit.power = cols == 3 ? coef(2) : 0.0;
  fit.samples = static_cast<int>(used);
  fit.t_first = times[first];
  fit.t_last = times[n - 1];
  return fit;
}

double fit_decay_rate(const std::vector<double>& times, const std::vector<double>& chi2, double tail_fraction,
                      DecayModel model) {
  return fit_decay(times, chi2, tail_fraction, model).rate;
}

double ou_rate_closed_form(double w, double lambda) {
  if (!(w > 0.0) || !(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "ou_rate_closed_form: w, lambda > 0");
  if (lambda > 2.0 * w) return lambda - std::sqrt(lambda * lambda - 4.0 * w * w);
  return lambda;
}

double diagonal_system_rate(const Vector& v, const FrictionSpec& spec) {
  if (v.size() == 0) throw Error(ErrorCode::InvalidArgument, "diagonal_system_rate: empty v");
  if (!(v.array() > 0.0).all()) throw Error(ErrorCode::NonPositiveFrequency, "diagonal_system_rate");
  if (spec.kind() == FrictionKind::HessianSqrt && spec.s() == 2.0) return 2.0 * v.minCoeff();
  if (spec.kind() == FrictionKind::ConstantScalar) {
    double rate = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < v.size(); ++i) rate = std::min(rate, ou_rate_closed_form(v(i), spec.lambda()));
    return rate;
  }
  throw Error(ErrorCode::UnsupportedFriction, "diagonal_system_rate supports constant_scalar and hessian_sqrt(2)");
}

}  // namespace kinlangevin
