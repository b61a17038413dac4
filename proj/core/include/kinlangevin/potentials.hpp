#pragma once

// Potential functions V(q) and the assumption constants (alpha, beta, gamma)
// that the rate certificates consume.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "kinlangevin/linalg.hpp"

namespace kinlangevin {

/// UserSupplied marks constants entered by hand, not derived from a potential.
enum class ConstantsSource { ClosedForm, Estimated, UserSupplied };

std::string to_string(ConstantsSource source);

/// Axis-aligned box the empirical constants were sampled from.
struct SamplingBox {
  Vector lo;
  Vector hi;

  static SamplingBox cube(int dim, double lo, double hi);
};

/// alpha I <= Hess V <= beta I and ||d sqrt(Hess V) / dq_i||_2 <= gamma for all i.
struct AssumptionConstants {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.0;
  double kappa = 1.0;  ///< beta / alpha
  int dim = 1;
  ConstantsSource source = ConstantsSource::ClosedForm;
  std::optional<SamplingBox> box;  ///< set when source == Estimated
  std::int64_t n_samples = 0;

  /// Validates 0 < alpha <= beta, gamma >= 0, dim >= 1 and fills kappa.
  static AssumptionConstants make(double alpha, double beta, double gamma, int dim,
                                  ConstantsSource source = ConstantsSource::ClosedForm);
};

/// Abstract potential. Implementations are immutable and safe to evaluate
/// concurrently.
class Potential {
 public:
  explicit Potential(int dim) : dim_(dim) {}
  virtual ~Potential() = default;

  int dim() const { return dim_; }
  virtual std::string family() const = 0;

  virtual double energy(std::span<const double> q) const = 0;
  virtual void gradient_into(std::span<const double> q, std::span<double> out) const = 0;
  virtual void hessian_into(std::span<const double> q, Eigen::Ref<Matrix> out) const = 0;
  /// Diagonal of Hess V; the default extracts it from hessian_into.
  virtual void hessian_diagonal_into(std::span<const double> q, std::span<double> out) const;

  /// d(Hess V)/dq_i.
  virtual Matrix hessian_partial(std::span<const double> q, int i) const = 0;

  /// d(sqrt(Hess V))/dq_i. The default solves the Sylvester equation of
  /// spd_sqrt_directional_derivative; families with a closed form override it.
  virtual Matrix sqrt_hessian_partial(std::span<const double> q, int i) const;

  /// Hess V does not depend on q (quadratic families).
  virtual bool constant_hessian() const { return false; }
  /// Hess V is diagonal at every q.
  virtual bool diagonal_hessian() const { return false; }

  /// Closed-form assumption constants of the family.
  virtual AssumptionConstants constants() const = 0;

  double value(const Vector& q) const { return energy(span_of(q)); }
  Vector gradient(const Vector& q) const;
  Matrix hessian(const Vector& q) const;
  Matrix hessian_partial(const Vector& q, int i) const { return hessian_partial(span_of(q), i); }
  Matrix sqrt_hessian_partial(const Vector& q, int i) const { return sqrt_hessian_partial(span_of(q), i); }

 protected:
  void check_dim(std::span<const double> q) const;
  static std::span<const double> span_of(const Vector& q) { return {q.data(), static_cast<std::size_t>(q.size())}; }

 private:
  int dim_;
};

using PotentialPtr = std::shared_ptr<const Potential>;

/// One-dimensional perturbation f with bounded second and third derivatives.
class ScalarPerturbation {
 public:
  virtual ~ScalarPerturbation() = default;
  virtual std::string name() const = 0;
  virtual double f(double x) const = 0;
  virtual double d1(double x) const = 0;
  virtual double d2(double x) const = 0;
  virtual double d3(double x) const = 0;
  virtual double d2_inf() const = 0;
  virtual double d2_sup() const = 0;
  /// sup over x of |eps f'''(x)| / (2 sqrt(v2 + eps f''(x))).
  virtual double sup_sqrt_derivative(double v2, double eps) const = 0;
};

/// f(x) = log cosh x: f'' = sech^2 in (0, 1], |f'''| <= 4 / (3 sqrt 3).
class LogCoshPerturbation final : public ScalarPerturbation {
 public:
  std::string name() const override { return "log_cosh"; }
  double f(double x) const override;
  double d1(double x) const override;
  double d2(double x) const override;
  double d3(double x) const override;
  double d2_inf() const override { return 0.0; }
  double d2_sup() const override { return 1.0; }
  double sup_sqrt_derivative(double v2, double eps) const override;
};

/// V(q) = 1/2 sum v_i^2 q_i^2.
PotentialPtr quadratic_diagonal(const Vector& v);

/// V(q) = 1/2 q^T a q with a symmetric positive definite.
PotentialPtr quadratic_general(const Matrix& a);

/// V(q) = 1/2 sum v_i^2 q_i^2 + eps sum f(q_i).
PotentialPtr perturbed_diagonal(const Vector& v, double eps,
                                std::shared_ptr<const ScalarPerturbation> perturbation =
                                    std::make_shared<LogCoshPerturbation>());

/// Empirical constants from n_samples uniform points in the box: min of
/// lambda_min(Hess V), max of lambda_max(Hess V) and max over i, q of
/// ||d sqrt(Hess V)/dq_i||_2. The result is flagged Estimated and records the box.
AssumptionConstants estimate_constants(const Potential& potential, const SamplingBox& box,
                                       std::int64_t n_samples, std::uint64_t seed);

}  // namespace kinlangevin
