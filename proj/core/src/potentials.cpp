#include "kinlangevin/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "kinlangevin/error.hpp"
#include "kinlangevin/rng.hpp"

namespace kinlangevin {

std::string to_string(ConstantsSource source) {
  switch (source) {
    case ConstantsSource::ClosedForm: return "closed_form";
    case ConstantsSource::Estimated: return "estimated";
    case ConstantsSource::UserSupplied: return "user_supplied";
  }
  return "unknown";
}

SamplingBox SamplingBox::cube(int dim, double lo, double hi) {
  return {Vector::Constant(dim, lo), Vector::Constant(dim, hi)};
}

AssumptionConstants AssumptionConstants::make(double alpha, double beta, double gamma, int dim,
                                              ConstantsSource source) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must be positive and finite");
  }
  if (!(beta >= alpha) || !std::isfinite(beta)) throw Error(ErrorCode::InvalidArgument, "beta must be >= alpha");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw Error(ErrorCode::InvalidArgument, "gamma must be >= 0");
  if (dim < 1) throw Error(ErrorCode::InvalidArgument, "dim must be >= 1");
  AssumptionConstants c;
  c.alpha = alpha;
  c.beta = beta;
  c.gamma = gamma;
  c.kappa = beta / alpha;
  c.dim = dim;
  c.source = source;
  return c;
}

void Potential::check_dim(std::span<const double> q) const {
  if (static_cast<int>(q.size()) != dim_) {
    throw Error(ErrorCode::DimensionMismatch,
                family() + ": expected q of size " + std::to_string(dim_) + ", got " + std::to_string(q.size()));
  }
}

Vector Potential::gradient(const Vector& q) const {
  Vector out(dim_);
  gradient_into(span_of(q), {out.data(), static_cast<std::size_t>(dim_)});
  return out;
}

Matrix Potential::hessian(const Vector& q) const {
  Matrix out(dim_, dim_);
  hessian_into(span_of(q), out);
  return out;
}

void Potential::hessian_diagonal_into(std::span<const double> q, std::span<double> out) const {
  Matrix h(dim_, dim_);
  hessian_into(q, h);
  for (int i = 0; i < dim_; ++i) out[i] = h(i, i);
}

Matrix Potential::sqrt_hessian_partial(std::span<const double> q, int i) const {
  Matrix h(dim_, dim_);
  hessian_into(q, h);
  return spd_sqrt_directional_derivative(h, hessian_partial(q, i));
}

// ---------------------------------------------------------------------------
// log cosh

double LogCoshPerturbation::f(double x) const {
  const double ax = std::abs(x);
  return ax + std::log1p(std::exp(-2.0 * ax)) - std::log(2.0);
}

double LogCoshPerturbation::d1(double x) const { return std::tanh(x); }

double LogCoshPerturbation::d2(double x) const {
  const double c = std::cosh(x);
  return 1.0 / (c * c);
}

double LogCoshPerturbation::d3(double x) const { return -2.0 * std::tanh(x) * d2(x); }

double LogCoshPerturbation::sup_sqrt_derivative(double v2, double eps) const {
  if (eps == 0.0) return 0.0;
  // With u = tanh x: f'' = 1 - u^2 and |f'''| = 2|u|(1 - u^2), so the
  // supremum over x is a maximum over u in [0, 1].
  const auto ratio = [&](double u) {
    const double s = 1.0 - u * u;
    return std::abs(eps) * u * s / std::sqrt(v2 + eps * s);
  };
  constexpr int kGrid = 2048;
  int best = 0;
  double best_val = -1.0;
  for (int k = 0; k <= kGrid; ++k) {
    const double val = ratio(static_cast<double>(k) / kGrid);
    if (val > best_val) {
      best_val = val;
      best = k;
    }
  }
  double lo = std::max(0, best - 1) / static_cast<double>(kGrid);
  double hi = std::min(kGrid, best + 1) / static_cast<double>(kGrid);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = ratio(c);
  double fd = ratio(d);
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = ratio(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = ratio(d);
    }
  }
  return std::max({best_val, fc, fd, ratio(0.5 * (lo + hi))});
}

namespace {

// ---------------------------------------------------------------------------
// Quadratic families

class QuadraticDiagonal final : public Potential {
 public:
  explicit QuadraticDiagonal(Vector v)
      : Potential(static_cast<int>(v.size())), v2_(v.array().square()), hess_(v2_.asDiagonal()) {}

  std::string family() const override { return "quadratic_diagonal"; }

  double energy(std::span<const double> q) const override {
    check_dim(q);
    double acc = 0.0;
    for (int i = 0; i < dim(); ++i) acc += v2_(i) * q[i] * q[i];
    return 0.5 * acc;
  }

  void gradient_into(std::span<const double> q, std::span<double> out) const override {
    for (int i = 0; i < dim(); ++i) out[i] = v2_(i) * q[i];
  }

  void hessian_into(std::span<const double>, Eigen::Ref<Matrix> out) const override { out = hess_; }
  void hessian_diagonal_into(std::span<const double>, std::span<double> out) const override {
    for (int i = 0; i < dim(); ++i) out[i] = v2_(i);
  }

  Matrix hessian_partial(std::span<const double>, int) const override { return Matrix::Zero(dim(), dim()); }
  Matrix sqrt_hessian_partial(std::span<const double>, int) const override { return Matrix::Zero(dim(), dim()); }

  bool constant_hessian() const override { return true; }
  bool diagonal_hessian() const override { return true; }

  AssumptionConstants constants() const override {
    return AssumptionConstants::make(v2_.minCoeff(), v2_.maxCoeff(), 0.0, dim());
  }

 private:
  Vector v2_;
  Matrix hess_;
};

class QuadraticGeneral final : public Potential {
 public:
  explicit QuadraticGeneral(Matrix a) : Potential(static_cast<int>(a.rows())), a_(std::move(a)) {
    const SpectralDecomposition eig = symmetric_eigen(a_);
    alpha_ = eig.min_eigenvalue();
    beta_ = eig.max_eigenvalue();
  }

  std::string family() const override { return "quadratic_general"; }

  double energy(std::span<const double> q) const override {
    check_dim(q);
    Eigen::Map<const Vector> x(q.data(), dim());
    return 0.5 * x.dot(a_ * x);
  }

  void gradient_into(std::span<const double> q, std::span<double> out) const override {
    Eigen::Map<const Vector> x(q.data(), dim());
    Eigen::Map<Vector> g(out.data(), dim());
    g.noalias() = a_ * x;
  }

  void hessian_into(std::span<const double>, Eigen::Ref<Matrix> out) const override { out = a_; }

  Matrix hessian_partial(std::span<const double>, int) const override { return Matrix::Zero(dim(), dim()); }
  Matrix sqrt_hessian_partial(std::span<const double>, int) const override { return Matrix::Zero(dim(), dim()); }

  bool constant_hessian() const override { return true; }

  AssumptionConstants constants() const override { return AssumptionConstants::make(alpha_, beta_, 0.0, dim()); }

 private:
  Matrix a_;
  double alpha_ = 0.0;
  double beta_ = 0.0;
};

// ---------------------------------------------------------------------------
// Perturbed diagonal family

class PerturbedDiagonal final : public Potential {
 public:
  PerturbedDiagonal(Vector v, double eps, std::shared_ptr<const ScalarPerturbation> f)
      : Potential(static_cast<int>(v.size())), v2_(v.array().square()), eps_(eps), f_(std::move(f)) {}

  std::string family() const override { return "perturbed_diagonal"; }

  double energy(std::span<const double> q) const override {
    check_dim(q);
    double acc = 0.0;
    for (int i = 0; i < dim(); ++i) acc += 0.5 * v2_(i) * q[i] * q[i] + eps_ * f_->f(q[i]);
    return acc;
  }

  void gradient_into(std::span<const double> q, std::span<double> out) const override {
    for (int i = 0; i < dim(); ++i) out[i] = v2_(i) * q[i] + eps_ * f_->d1(q[i]);
  }

  void hessian_into(std::span<const double> q, Eigen::Ref<Matrix> out) const override {
    out.setZero();
    for (int i = 0; i < dim(); ++i) out(i, i) = v2_(i) + eps_ * f_->d2(q[i]);
  }

  void hessian_diagonal_into(std::span<const double> q, std::span<double> out) const override {
    for (int i = 0; i < dim(); ++i) out[i] = v2_(i) + eps_ * f_->d2(q[i]);
  }

  Matrix hessian_partial(std::span<const double> q, int i) const override {
    check_dim(q);
    Matrix out = Matrix::Zero(dim(), dim());
    out(i, i) = eps_ * f_->d3(q[i]);
    return out;
  }

  Matrix sqrt_hessian_partial(std::span<const double> q, int i) const override {
    check_dim(q);
    Matrix out = Matrix::Zero(dim(), dim());
    out(i, i) = eps_ * f_->d3(q[i]) / (2.0 * std::sqrt(v2_(i) + eps_ * f_->d2(q[i])));
    return out;
  }

  bool diagonal_hessian() const override { return true; }

  AssumptionConstants constants() const override {
    double alpha = std::numeric_limits<double>::infinity();
    double beta = -std::numeric_limits<double>::infinity();
    double gamma = 0.0;
    for (int i = 0; i < dim(); ++i) {
      alpha = std::min(alpha, v2_(i) + eps_ * f_->d2_inf());
      beta = std::max(beta, v2_(i) + eps_ * f_->d2_sup());
      gamma = std::max(gamma, f_->sup_sqrt_derivative(v2_(i), eps_));
    }
    return AssumptionConstants::make(alpha, beta, gamma, dim());
  }

 private:
  Vector v2_;
  double eps_;
  std::shared_ptr<const ScalarPerturbation> f_;
};

void require_positive_frequencies(const Vector& v) {
  if (v.size() == 0) throw Error(ErrorCode::InvalidArgument, "frequency vector is empty");
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v(i) > 0.0) || !std::isfinite(v(i))) {
      throw Error(ErrorCode::NonPositiveFrequency, "v[" + std::to_string(i) + "] = " + std::to_string(v(i)));
    }
  }
}

}  // namespace

PotentialPtr quadratic_diagonal(const Vector& v) {
  require_positive_frequencies(v);
  return std::make_shared<QuadraticDiagonal>(v);
}

PotentialPtr quadratic_general(const Matrix& a) {
  require_symmetric(a, "quadratic_general");
  if (!is_positive_definite(a)) throw Error(ErrorCode::NotPositiveDefinite, "quadratic_general: a");
  return std::make_shared<QuadraticGeneral>(0.5 * (a + a.transpose()));
}

PotentialPtr perturbed_diagonal(const Vector& v, double eps, std::shared_ptr<const ScalarPerturbation> perturbation) {
  require_positive_frequencies(v);
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw Error(ErrorCode::InvalidArgument, "perturbed_diagonal: eps must be >= 0");
  if (!perturbation) throw Error(ErrorCode::InvalidArgument, "perturbed_diagonal: missing perturbation");
  const double alpha = v.array().square().minCoeff() + eps * perturbation->d2_inf();
  if (!(alpha > 0.0)) {
    throw Error(ErrorCode::ConvexityLost, "perturbed_diagonal: alpha(eps) = " + std::to_string(alpha));
  }
  return std::make_shared<PerturbedDiagonal>(v, eps, std::move(perturbation));
}

AssumptionConstants estimate_constants(const Potential& potential, const SamplingBox& box, std::int64_t n_samples,
                                       std::uint64_t seed) {
  const int d = potential.dim();
  if (n_samples < 1) throw Error(ErrorCode::InvalidArgument, "estimate_constants: n_samples must be >= 1");
  if (box.lo.size() != d || box.hi.size() != d) {
    throw Error(ErrorCode::DimensionMismatch, "estimate_constants: box dimension");
  }
  if (!(box.lo.array() <= box.hi.array()).all()) {
    throw Error(ErrorCode::InvalidArgument, "estimate_constants: box lo > hi");
  }

  const NormalStream stream(seed, StreamDomain::ConstantSampling);
  double alpha = std::numeric_limits<double>::infinity();
  double beta = -std::numeric_limits<double>::infinity();
  double gamma = 0.0;
  Vector q(d);
  Matrix h(d, d);
  const std::span<const double> qs(q.data(), static_cast<std::size_t>(d));
  for (std::int64_t k = 0; k < n_samples; ++k) {
    for (int j = 0; j < d; ++j) {
      q(j) = box.lo(j) + (box.hi(j) - box.lo(j)) * stream.uniform(static_cast<std::uint64_t>(k), static_cast<std::uint32_t>(j));
    }
    potential.hessian_into(qs, h);
    if (potential.diagonal_hessian()) {
      alpha = std::min(alpha, h.diagonal().minCoeff());
      beta = std::max(beta, h.diagonal().maxCoeff());
    } else {
      const SpectralDecomposition eig = symmetric_eigen(h);
      alpha = std::min(alpha, eig.min_eigenvalue());
      beta = std::max(beta, eig.max_eigenvalue());
    }
    if (!potential.constant_hessian()) {
      for (int i = 0; i < d; ++i) {
        const Matrix partial = potential.sqrt_hessian_partial(qs, i);
        const double norm = potential.diagonal_hessian() ? partial.diagonal().cwiseAbs().maxCoeff()
                                                         : symmetric_spectral_norm(partial);
        gamma = std::max(gamma, norm);
      }
    }
  }
  AssumptionConstants c = AssumptionConstants::make(alpha, beta, gamma, d, ConstantsSource::Estimated);
  c.box = box;
  c.n_samples = n_samples;
  return c;
}

}  // namespace kinlangevin
