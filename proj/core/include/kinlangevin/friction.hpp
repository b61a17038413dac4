#pragma once

// Friction coefficients Gamma(q) and the matching diffusion coefficients.

#include <optional>
#include <span>
#include <string>

#include "kinlangevin/linalg.hpp"
#include "kinlangevin/potentials.hpp"

namespace kinlangevin {

/// Original dynamics carry noise sqrt(2 Gamma); the rescaled ones sqrt(2 Gamma / alpha).
enum class DynamicsForm { Original, Rescaled };

std::string to_string(DynamicsForm form);
DynamicsForm dynamics_form_from_string(const std::string& name);

enum class FrictionKind { ConstantScalar, ConstantMatrix, HessianSqrt };

std::string to_string(FrictionKind kind);

/// Gamma = lambda I, a fixed SPD matrix, or s sqrt(Hess V(q)).
class FrictionSpec {
 public:
  static FrictionSpec constant_scalar(double lambda);
  /// Rejects matrices that are not symmetric positive definite.
  static FrictionSpec constant_matrix(const Matrix& m);
  static FrictionSpec hessian_sqrt(double s);

  FrictionKind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  const Matrix& matrix() const { return matrix_; }
  double s() const { return s_; }
  bool is_constant() const { return kind_ != FrictionKind::HessianSqrt; }

 private:
  FrictionKind kind_ = FrictionKind::ConstantScalar;
  double lambda_ = 0.0;
  Matrix matrix_;
  double s_ = 0.0;
};

/// Gamma(q). Constant kinds ignore q.
Matrix gamma(const FrictionSpec& spec, const Potential& potential, const Vector& q);

/// sqrt(2 Gamma(q)) or sqrt(2 Gamma(q) / alpha).
Matrix diffusion(const FrictionSpec& spec, const Potential& potential, const Vector& q,
                 DynamicsForm form = DynamicsForm::Original, double alpha = 1.0);

/// Noise variance multiplier of a dynamics form: 1 or 1 / alpha.
double noise_scale(DynamicsForm form, double alpha);

/// Gamma(q) and diffusion(q) bound to one potential, memoized when they do not
/// depend on q. Evaluation is const and thread-safe.
class FrictionField {
 public:
  FrictionField(FrictionSpec spec, PotentialPtr potential, DynamicsForm form, double alpha);

  int dim() const { return dim_; }
  const FrictionSpec& spec() const { return spec_; }

  /// Gamma and diffusion are independent of q; see constant_gamma().
  bool is_constant() const { return constant_gamma_.has_value(); }
  /// Gamma(q) is diagonal at every q, with diagonal_into() available.
  bool is_diagonal() const { return diagonal_; }

  const Matrix& constant_gamma() const { return *constant_gamma_; }
  const Matrix& constant_diffusion() const { return *constant_diffusion_; }

  /// Diagonals of Gamma(q) and diffusion(q); requires is_diagonal().
  void diagonal_into(std::span<const double> q, std::span<double> gamma_diag, std::span<double> diffusion_diag) const;

  /// Dense Gamma(q) and diffusion(q) for any kind.
  void evaluate(std::span<const double> q, Matrix& gamma_out, Matrix& diffusion_out) const;

 private:
  FrictionSpec spec_;
  PotentialPtr potential_;
  double noise_scale_;
  int dim_;
  bool diagonal_ = false;
  std::optional<Matrix> constant_gamma_;
  std::optional<Matrix> constant_diffusion_;
};

}  // namespace kinlangevin
