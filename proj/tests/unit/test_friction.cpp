#include <gtest/gtest.h>

#include <cmath>

#include "kinlangevin/error.hpp"
#include "kinlangevin/friction.hpp"
#include "oracles.hpp"

using namespace kinlangevin;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace

TEST(Friction, ConstantScalar) {
  const auto p = quadratic_diagonal(Vector::Ones(3));
  EXPECT_EQ(gamma(FrictionSpec::constant_scalar(2), *p, vec({1, 2, 3})), 2.0 * Matrix::Identity(3, 3));
  EXPECT_LT((diffusion(FrictionSpec::constant_scalar(2), *p, Vector::Zero(3)) - 2.0 * Matrix::Identity(3, 3)).norm(),
            1e-15);
}

TEST(Friction, HessianSqrtOnDiagonalQuadratic) {
  const auto p = quadratic_diagonal(vec({1, 2}));
  const Matrix g = gamma(FrictionSpec::hessian_sqrt(2), *p, vec({0.3, 0.1}));
  EXPECT_LT((g - Matrix(vec({2, 4}).asDiagonal())).norm(), 1e-14);
  const Matrix s = diffusion(FrictionSpec::hessian_sqrt(2), *p, Vector::Zero(2));
  EXPECT_LT((s - Matrix(vec({2, 2 * std::sqrt(2.0)}).asDiagonal())).norm(), 1e-14);
}

TEST(Friction, HessianSqrtOnLogCosh) {
  const auto p = perturbed_diagonal(vec({1}), 0.1);
  EXPECT_NEAR(gamma(FrictionSpec::hessian_sqrt(1), *p, vec({0}))(0, 0), std::sqrt(1.1), 1e-15);
}

TEST(Friction, RescaledDiffusion) {
  const auto p = quadratic_diagonal(vec({1}));
  EXPECT_NEAR(diffusion(FrictionSpec::constant_scalar(2), *p, vec({0}), DynamicsForm::Rescaled, 4.0)(0, 0), 1.0,
              1e-15);
  EXPECT_THROW(diffusion(FrictionSpec::constant_scalar(2), *p, vec({0}), DynamicsForm::Rescaled, 0.0), Error);
}

TEST(Friction, FluctuationDissipation) {
  const auto p = perturbed_diagonal(vec({0.5, 1.0, 2.0}), 0.4);
  const auto g = quadratic_general(oracle::random_spd(3, 21));
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int k = 0; k < 50; ++k) {
    const Vector q = vec({u(gen), u(gen), u(gen)});
    for (const Potential* pot : {static_cast<const Potential*>(p.get()), static_cast<const Potential*>(g.get())}) {
      const FrictionSpec spec = FrictionSpec::hessian_sqrt(2);
      const Matrix s = diffusion(spec, *pot, q);
      const Matrix two_gamma = 2.0 * gamma(spec, *pot, q);
      EXPECT_LT((s * s - two_gamma).norm(), 1e-10 * two_gamma.norm());
    }
  }
}

TEST(Friction, EigenvalueSandwich) {
  const double s = 2.0;
  const auto p = perturbed_diagonal(vec({0.5, 1.0, 2.0}), 0.4);
  const auto c = p->constants();
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int k = 0; k < 1000; ++k) {
    const Vector q = vec({u(gen), u(gen), u(gen)});
    const auto eig = symmetric_eigen(gamma(FrictionSpec::hessian_sqrt(s), *p, q));
    EXPECT_GE(eig.min_eigenvalue(), s * std::sqrt(c.alpha) - 1e-8);
    EXPECT_LE(eig.max_eigenvalue(), s * std::sqrt(c.beta) + 1e-8);
  }
}

TEST(Friction, ConstantKindsIgnoreQ) {
  const auto p = quadratic_diagonal(vec({1, 2}));
  const Matrix m = oracle::random_spd(2, 3);
  const FrictionSpec spec = FrictionSpec::constant_matrix(m);
  EXPECT_EQ(gamma(spec, *p, vec({0, 0})), gamma(spec, *p, vec({9, -9})));
  EXPECT_EQ(diffusion(spec, *p, vec({0, 0})), diffusion(spec, *p, vec({9, -9})));
}

TEST(Friction, RejectsIndefiniteMatrix) {
  Matrix m(2, 2);
  m << 1, 2, 2, 1;
  try {
    FrictionSpec::constant_matrix(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
  }
}

TEST(FrictionField, MemoAndDiagonalPaths) {
  const auto quad = quadratic_diagonal(vec({1, 3}));
  const FrictionField memo(FrictionSpec::hessian_sqrt(2), quad, DynamicsForm::Original, 1.0);
  EXPECT_TRUE(memo.is_constant());
  EXPECT_LT((memo.constant_gamma() - Matrix(vec({2, 6}).asDiagonal())).norm(), 1e-14);

  const auto pert = perturbed_diagonal(vec({1, 3}), 0.2);
  const FrictionField field(FrictionSpec::hessian_sqrt(2), pert, DynamicsForm::Rescaled, 2.0);
  EXPECT_FALSE(field.is_constant());
  ASSERT_TRUE(field.is_diagonal());
  const Vector q = vec({0.3, -1.1});
  std::vector<double> g(2), s(2);
  field.diagonal_into({q.data(), 2}, g, s);
  Matrix gd, sd;
  field.evaluate({q.data(), 2}, gd, sd);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(g[i], gd(i, i), 1e-14);
    EXPECT_NEAR(s[i], sd(i, i), 1e-14);
    EXPECT_NEAR(s[i] * s[i], g[i], 1e-13);  // 2 Gamma / alpha with alpha = 2
  }
}
