#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "kinlangevin/error.hpp"
#include "kinlangevin/potentials.hpp"
#include "oracles.hpp"

using namespace kinlangevin;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

void expect_derivatives_consistent(const Potential& pot, const Vector& q) {
  const int d = pot.dim();
  const double h = 1e-5;
  const Vector g = pot.gradient(q);
  const Matrix hess = pot.hessian(q);
  for (int i = 0; i < d; ++i) {
    Vector e = Vector::Zero(d);
    e(i) = h;
    const double fd = (pot.value(q + e) - pot.value(q - e)) / (2 * h);
    EXPECT_NEAR(fd, g(i), 1e-5 * std::max(1.0, std::abs(g(i))));
    const Vector fd_col = (pot.gradient(q + e) - pot.gradient(q - e)) / (2 * h);
    EXPECT_LT((fd_col - hess.col(i)).norm(), 1e-5 * std::max(1.0, hess.col(i).norm()));
    const Matrix fd_h = (pot.hessian(q + e) - pot.hessian(q - e)) / (2 * h);
    EXPECT_LT((fd_h - pot.hessian_partial(q, i)).norm(), 1e-5 * std::max(1.0, fd_h.norm()));
  }
}

}  // namespace

TEST(QuadraticDiagonal, Examples) {
  const auto p = quadratic_diagonal(vec({1, 1}));
  EXPECT_DOUBLE_EQ(p->value(vec({1, 1})), 1.0);
  EXPECT_EQ(p->hessian(vec({3, -2})), Matrix::Identity(2, 2));
  EXPECT_EQ(p->constants().gamma, 0.0);

  const auto c = quadratic_diagonal(vec({1, 2}))->constants();
  EXPECT_EQ(c.alpha, 1.0);
  EXPECT_EQ(c.beta, 4.0);
  EXPECT_EQ(c.kappa, 4.0);
}

TEST(QuadraticDiagonal, RejectsNonPositiveFrequency) {
  try {
    quadratic_diagonal(vec({1, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveFrequency);
  }
}

TEST(QuadraticGeneral, RotatedSpectrum) {
  const double th = std::numbers::pi / 6;
  Matrix r(2, 2);
  r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  Matrix a = r.transpose() * vec({1, 4}).asDiagonal() * r;
  a = 0.5 * (a + a.transpose());
  const auto c = quadratic_general(a)->constants();
  EXPECT_NEAR(c.alpha, 1.0, 1e-12);
  EXPECT_NEAR(c.beta, 4.0, 1e-12);
}

TEST(QuadraticGeneral, IdentityMatchesDiagonal) {
  const auto g = quadratic_general(Matrix::Identity(3, 3));
  const auto d = quadratic_diagonal(Vector::Ones(3));
  const Vector q = vec({0.3, -1.2, 2.0});
  EXPECT_DOUBLE_EQ(g->value(q), d->value(q));
  EXPECT_EQ(g->gradient(q), d->gradient(q));
  EXPECT_EQ(g->hessian(q), d->hessian(q));
}

TEST(QuadraticGeneral, RejectsIndefinite) {
  EXPECT_THROW(quadratic_general(-Matrix::Identity(2, 2)), Error);
}

TEST(Potentials, FiniteDifferenceConsistency) {
  const auto general = quadratic_general(oracle::random_spd(4, 11));
  const auto pert = perturbed_diagonal(vec({1.0, 1.5, 0.7}), 0.3);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int k = 0; k < 10; ++k) {
    Vector q4(4), q3(3);
    for (int i = 0; i < 4; ++i) q4(i) = u(gen);
    for (int i = 0; i < 3; ++i) q3(i) = u(gen);
    expect_derivatives_consistent(*general, q4);
    expect_derivatives_consistent(*pert, q3);
  }
}

TEST(Potentials, AnalyticSqrtPartialMatchesSylvester) {
  const auto pert = perturbed_diagonal(vec({1.0, 2.0}), 0.5);
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-4, 4);
  for (int k = 0; k < 20; ++k) {
    const Vector q = vec({u(gen), u(gen)});
    for (int i = 0; i < 2; ++i) {
      const Matrix analytic = pert->sqrt_hessian_partial(q, i);
      const Matrix generic = spd_sqrt_directional_derivative(pert->hessian(q), pert->hessian_partial(q, i));
      EXPECT_LT((analytic - generic).norm(), 1e-8 * std::max(1e-12, generic.norm()) + 1e-15);
    }
  }
}

TEST(Potentials, QuadraticHessianBitwiseConstant) {
  const auto p = quadratic_general(oracle::random_spd(3, 2));
  EXPECT_EQ(p->hessian(vec({0, 0, 0})), p->hessian(vec({5, -1, 3})));
  EXPECT_TRUE(p->sqrt_hessian_partial(vec({1, 1, 1}), 2).isZero(0.0));
}

TEST(LogCosh, Derivatives) {
  const LogCoshPerturbation f;
  EXPECT_DOUBLE_EQ(f.d2(0.0), 1.0);
  EXPECT_NEAR(f.f(800.0), 800.0 - std::log(2.0), 1e-12);
  for (double x : {-3.0, -0.4, 0.0, 0.9, 2.5}) {
    const double h = 1e-5;
    EXPECT_NEAR((f.f(x + h) - f.f(x - h)) / (2 * h), f.d1(x), 1e-9);
    EXPECT_NEAR((f.d1(x + h) - f.d1(x - h)) / (2 * h), f.d2(x), 1e-9);
    EXPECT_NEAR((f.d2(x + h) - f.d2(x - h)) / (2 * h), f.d3(x), 1e-9);
  }
  // sup |f'''| = 4 / (3 sqrt 3), attained at tanh^2 x = 1/3.
  EXPECT_NEAR(f.sup_sqrt_derivative(1.0, 1e-12) / 1e-12 * 2.0, 4.0 / (3.0 * std::sqrt(3.0)), 1e-6);
}

TEST(PerturbedDiagonal, UnperturbedLimit) {
  const auto p = perturbed_diagonal(vec({1, 2}), 0.0);
  const auto q = quadratic_diagonal(vec({1, 2}));
  const Vector x = vec({0.4, -0.7});
  EXPECT_DOUBLE_EQ(p->value(x) - p->value(Vector::Zero(2)), q->value(x));
  EXPECT_EQ(p->constants().gamma, 0.0);
  EXPECT_EQ(p->constants().alpha, 1.0);
  EXPECT_EQ(p->constants().beta, 4.0);
}

TEST(PerturbedDiagonal, GammaDenseGridOracle) {
  const double eps = 0.1;
  const auto p = perturbed_diagonal(vec({1}), eps);
  const LogCoshPerturbation f;
  double best = 0;
  for (int k = 0; k <= 2000000; ++k) {
    const double x = -10.0 + 20.0 * k / 2000000.0;
    best = std::max(best, std::abs(eps * f.d3(x)) / (2 * std::sqrt(1 + eps * f.d2(x))));
  }
  EXPECT_NEAR(p->constants().gamma, best, 1e-9);
  EXPECT_NEAR(p->hessian(vec({0}))(0, 0), 1.1, 1e-15);
}

TEST(PerturbedDiagonal, GammaIsLinearInEps) {
  std::vector<double> ratios;
  for (double eps : {1e-1, 1e-2, 1e-3}) ratios.push_back(perturbed_diagonal(vec({1}), eps)->constants().gamma / eps);
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  EXPECT_LT((*hi - *lo) / *lo, 0.05);
}

TEST(PerturbedDiagonal, ConstantsConvergeAsEpsVanishes) {
  for (double eps : {1e-2, 1e-4}) {
    const auto c = perturbed_diagonal(vec({1, 3}), eps)->constants();
    EXPECT_LE(std::abs(c.alpha - 1.0), eps);
    EXPECT_LE(std::abs(c.beta - 9.0), eps);
  }
}

TEST(EstimateConstants, QuadraticIsExact) {
  const auto p = quadratic_diagonal(vec({1, 2}));
  const auto c = estimate_constants(*p, SamplingBox::cube(2, -5, 5), 100, 1);
  EXPECT_EQ(c.alpha, 1.0);
  EXPECT_EQ(c.beta, 4.0);
  EXPECT_EQ(c.gamma, 0.0);
  EXPECT_EQ(c.source, ConstantsSource::Estimated);
  ASSERT_TRUE(c.box.has_value());
  EXPECT_EQ(c.n_samples, 100);
}

TEST(EstimateConstants, LogCoshWithinTwoPercent) {
  const auto p = perturbed_diagonal(vec({1}), 0.05);
  const auto exact = p->constants();
  const auto est = estimate_constants(*p, SamplingBox::cube(1, -5, 5), 10000, 3);
  EXPECT_NEAR(est.alpha, exact.alpha, 0.02 * exact.alpha);
  EXPECT_NEAR(est.beta, exact.beta, 0.02 * exact.beta);
  EXPECT_NEAR(est.gamma, exact.gamma, 0.02 * exact.gamma);
  EXPECT_GE(est.alpha, exact.alpha - 1e-12);
  EXPECT_LE(est.gamma, exact.gamma + 1e-12);
}

TEST(EstimateConstants, GeneralPathUsesSylvester) {
  const auto p = quadratic_general(oracle::random_spd(3, 4, 1.0, 2.0));
  const auto est = estimate_constants(*p, SamplingBox::cube(3, -1, 1), 5, 9);
  EXPECT_NEAR(est.alpha, p->constants().alpha, 1e-12);
  EXPECT_EQ(est.gamma, 0.0);
}

TEST(PerturbedDiagonal, ConvexityLost) {
  struct Concave final : ScalarPerturbation {
    std::string name() const override { return "neg"; }
    double f(double x) const override { return -x * x; }
    double d1(double x) const override { return -2 * x; }
    double d2(double) const override { return -2; }
    double d3(double) const override { return 0; }
    double d2_inf() const override { return -2; }
    double d2_sup() const override { return -2; }
    double sup_sqrt_derivative(double, double) const override { return 0; }
  };
  try {
    perturbed_diagonal(vec({1}), 1.0, std::make_shared<Concave>());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConvexityLost);
  }
}
