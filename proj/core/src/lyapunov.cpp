#include "kinlangevin/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kinlangevin/error.hpp"
#include "kinlangevin/format.hpp"

namespace kinlangevin {

WeightMatrixS build_s(const LyapunovCoefficients& coeffs, const Matrix& gamma) {
  require_symmetric(gamma, "build_s: Gamma");
  if (!is_positive_definite(gamma)) throw Error(ErrorCode::NotPositiveDefinite, "build_s: Gamma");
  if (!(coeffs.determinant() > 0.0)) {
    throw Error(ErrorCode::DegenerateS, "build_s: b c - a^2 = " + format_double(coeffs.determinant()));
  }
  const Eigen::Index d = gamma.rows();
  const Matrix inv = spd_inverse(gamma);
  Matrix s(2 * d, 2 * d);
  s.topLeftCorner(d, d) = coeffs.b * inv * inv;
  s.topRightCorner(d, d) = coeffs.a * inv;
  s.bottomLeftCorner(d, d) = coeffs.a * inv;
  s.bottomRightCorner(d, d) = coeffs.c * Matrix::Identity(d, d);
  s = 0.5 * (s + s.transpose()).eval();
  if (!is_positive_definite(s)) throw Error(ErrorCode::NotPositiveDefinite, "build_s: S");
  return {s, coeffs};
}

WeightMatrixS build_s_original(const LyapunovCoefficients& coeffs, const Matrix& gamma_rescaled, double alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "build_s_original: alpha must be positive");
  WeightMatrixS w = build_s(coeffs, gamma_rescaled);
  const Eigen::Index d = gamma_rescaled.rows();
  Vector p = Vector::Ones(2 * d);
  p.tail(d).setConstant(std::sqrt(alpha));
  w.s = p.asDiagonal() * w.s * p.asDiagonal();
  return w;
}

LyapunovValue lyapunov_value_gaussian(const GaussianMoments& rho, const GaussianMoments& pi, const WeightMatrixS& s) {
  const Eigen::Index n = rho.mean.size();
  if (s.s.rows() != n || s.s.cols() != n) throw Error(ErrorCode::DimensionMismatch, "lyapunov: S size");
  LyapunovValue out;
  out.chi2 = gaussian_chi2(rho, pi);
  if (is_divergent(out.chi2)) {
    out.divergent = true;
    out.cross = out.total = kDivergent;
    return out;
  }
  // grad h = h (K x + k0); rho^2 / pi = (1 + chi2) N(Q^-1 b, (2Q)^-1).
  const Matrix p1 = spd_inverse(rho.cov);
  const Matrix p2 = spd_inverse(pi.cov);
  const Matrix q = 0.5 * (p1 - 0.5 * p2 + (p1 - 0.5 * p2).transpose());
  const Vector b = p1 * rho.mean - 0.5 * p2 * pi.mean;
  const Matrix kmat = p2 - p1;
  const Vector k0 = p1 * rho.mean - p2 * pi.mean;
  const Eigen::LLT<Matrix> llt(q);
  const Vector m = llt.solve(b);
  Matrix c = 0.5 * llt.solve(Matrix::Identity(n, n));
  c = 0.5 * (c + c.transpose()).eval();
  Matrix quad = kmat.transpose() * s.s * kmat;
  quad = 0.5 * (quad + quad.transpose()).eval();
  const Vector lin = 2.0 * kmat.transpose() * (s.s * k0);
  const double cst = k0.dot(s.s * k0);
  const double cross = (1.0 + out.chi2) * gaussian_quadratic_expectation(m, c, quad, lin, cst);
  out.cross = std::max(0.0, cross);
  out.total = out.chi2 + out.cross;
  return out;
}

AuditReport decay_audit(const LinearDynamics& dyn, const GaussianMoments& init, const WeightMatrixS& s, double rate,
                        const std::vector<double>& times, double tol) {
  if (times.size() < 2) throw Error(ErrorCode::InsufficientData, "decay_audit: need at least 2 times");
  const GaussianMoments pi = stationary_moments(dyn);
  const std::vector<GaussianMoments> path = propagate_grid(dyn, init, times);

  AuditReport r;
  r.rate = rate;
  r.tolerance = tol;
  r.points.resize(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    r.points[i].t = times[i];
    r.points[i].value = lyapunov_value_gaussian(path[i], pi, s);
  }
  while (r.first_finite < times.size() && r.points[r.first_finite].value.divergent) ++r.first_finite;
  if (r.first_finite == times.size()) throw Error(ErrorCode::InsufficientData, "decay_audit: every point diverges");

  const std::size_t i0 = r.first_finite;
  const double t0 = times[i0];
  const double l0 = r.points[i0].value.total;
  r.monotone = true;
  r.bound_holds = true;
  r.derivative_holds = true;
  const auto value_at = [&](double t) { return lyapunov_value_gaussian(propagate(dyn, init, t), pi, s).total; };

  for (std::size_t i = 0; i < times.size(); ++i) {
    AuditPoint& pt = r.points[i];
    pt.derivative = std::numeric_limits<double>::quiet_NaN();
    if (i < i0) continue;
    const double decay = std::exp(-rate * (pt.t - t0)) * l0;
    pt.bound = decay * (1.0 + tol);
    pt.within_bound = pt.value.total <= pt.bound;
    r.bound_holds = r.bound_holds && pt.within_bound;
    if (decay > 0.0) r.max_bound_ratio = std::max(r.max_bound_ratio, pt.value.total / decay);
    if (i > i0 && pt.value.total > r.points[i - 1].value.total * (1.0 + tol)) r.monotone = false;
    if (i > i0 && i + 1 < times.size()) {
      const double h = std::min({1e-3, 0.5 * (pt.t - times[i - 1]), 0.5 * (times[i + 1] - pt.t)});
      const double lp = value_at(pt.t + h);
      const double lm = value_at(pt.t - h);
      if (std::isfinite(lp) && std::isfinite(lm)) {
        pt.derivative = (lp - lm) / (2.0 * h);
        pt.derivative_ok = pt.derivative <= -rate * pt.value.total + tol * l0;
        r.derivative_holds = r.derivative_holds && pt.derivative_ok;
      }
    }
  }
  return r;
}

AuditReport decay_audit(const LinearDynamics& dyn, const GaussianMoments& init, const WeightMatrixS& s,
                        const RateCertificate& cert, const std::vector<double>& times, double tol) {
  if (!cert.valid) throw Error(ErrorCode::InvalidArgument, "decay_audit: certificate is not valid");
  return decay_audit(dyn, init, s, cert.original_rate, times, tol);
}

}  // namespace kinlangevin
