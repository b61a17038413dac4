#include "kinlangevin/friction.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "kinlangevin/error.hpp"

namespace kinlangevin {

std::string to_string(DynamicsForm form) { return form == DynamicsForm::Original ? "original" : "rescaled"; }

DynamicsForm dynamics_form_from_string(const std::string& name) {
  if (name == "original") return DynamicsForm::Original;
  if (name == "rescaled") return DynamicsForm::Rescaled;
  throw Error(ErrorCode::InvalidArgument, "unknown dynamics form '" + name + "'");
}

std::string to_string(FrictionKind kind) {
  switch (kind) {
    case FrictionKind::ConstantScalar:
      return "constant_scalar";
    case FrictionKind::ConstantMatrix:
      return "constant_matrix";
    case FrictionKind::HessianSqrt:
      return "hessian_sqrt";
  }
  return "unknown";
}

FrictionSpec FrictionSpec::constant_scalar(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::NotPositiveDefinite, "constant_scalar: lambda must be positive");
  }
  FrictionSpec f;
  f.kind_ = FrictionKind::ConstantScalar;
  f.lambda_ = lambda;
  return f;
}

FrictionSpec FrictionSpec::constant_matrix(const Matrix& m) {
  require_symmetric(m, "constant_matrix");
  if (!is_positive_definite(m)) throw Error(ErrorCode::NotPositiveDefinite, "constant_matrix: friction must be SPD");
  FrictionSpec f;
  f.kind_ = FrictionKind::ConstantMatrix;
  f.matrix_ = 0.5 * (m + m.transpose());
  return f;
}

FrictionSpec FrictionSpec::hessian_sqrt(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorCode::InvalidArgument, "hessian_sqrt: s must be positive");
  FrictionSpec f;
  f.kind_ = FrictionKind::HessianSqrt;
  f.s_ = s;
  return f;
}

double noise_scale(DynamicsForm form, double alpha) {
  if (form == DynamicsForm::Original) return 1.0;
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::InvalidArgument, "rescaled dynamics need alpha > 0");
  }
  return 1.0 / alpha;
}

Matrix gamma(const FrictionSpec& spec, const Potential& potential, const Vector& q) {
  const int d = potential.dim();
  if (q.size() != d) throw Error(ErrorCode::DimensionMismatch, "gamma: q has the wrong size");
  switch (spec.kind()) {
    case FrictionKind::ConstantScalar:
      return spec.lambda() * Matrix::Identity(d, d);
    case FrictionKind::ConstantMatrix:
      if (spec.matrix().rows() != d) throw Error(ErrorCode::DimensionMismatch, "gamma: friction matrix size");
      return spec.matrix();
    case FrictionKind::HessianSqrt:
      return spec.s() * spd_sqrt(potential.hessian(q));
  }
  throw Error(ErrorCode::UnsupportedFriction, "gamma");
}

Matrix diffusion(const FrictionSpec& spec, const Potential& potential, const Vector& q, DynamicsForm form,
                 double alpha) {
  return spd_sqrt(2.0 * noise_scale(form, alpha) * gamma(spec, potential, q));
}

FrictionField::FrictionField(FrictionSpec spec, PotentialPtr potential, DynamicsForm form, double alpha)
    : spec_(std::move(spec)),
      potential_(std::move(potential)),
      noise_scale_(noise_scale(form, alpha)),
      dim_(potential_->dim()) {
  const bool constant = spec_.is_constant() || potential_->constant_hessian();
  diagonal_ = spec_.kind() == FrictionKind::ConstantScalar ||
              (spec_.kind() == FrictionKind::HessianSqrt && potential_->diagonal_hessian());
  if (constant) {
    const Vector q0 = Vector::Zero(dim_);
    constant_gamma_ = gamma(spec_, *potential_, q0);
    constant_diffusion_ = spd_sqrt(2.0 * noise_scale_ * *constant_gamma_);
  }
}

void FrictionField::diagonal_into(std::span<const double> q, std::span<double> gamma_diag,
                                  std::span<double> diffusion_diag) const {
  if (spec_.kind() == FrictionKind::ConstantScalar) {
    const double g = spec_.lambda();
    const double sigma = std::sqrt(2.0 * noise_scale_ * g);
    for (int i = 0; i < dim_; ++i) {
      gamma_diag[i] = g;
      diffusion_diag[i] = sigma;
    }
    return;
  }
  potential_->hessian_diagonal_into(q, gamma_diag);
  for (int i = 0; i < dim_; ++i) {
    const double h = gamma_diag[i];
    if (!(h > 0.0)) throw Error(ErrorCode::NotPositiveDefinite, "hessian_sqrt: Hessian entry is not positive");
    gamma_diag[i] = spec_.s() * std::sqrt(h);
    diffusion_diag[i] = std::sqrt(2.0 * noise_scale_ * gamma_diag[i]);
  }
}

void FrictionField::evaluate(std::span<const double> q, Matrix& gamma_out, Matrix& diffusion_out) const {
  if (constant_gamma_) {
    gamma_out = *constant_gamma_;
    diffusion_out = *constant_diffusion_;
    return;
  }
  const Vector qv = Eigen::Map<const Vector>(q.data(), dim_);
  gamma_out = gamma(spec_, *potential_, qv);
  diffusion_out = spd_sqrt(2.0 * noise_scale_ * gamma_out);
}

}  // namespace kinlangevin
