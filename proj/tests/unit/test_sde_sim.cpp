#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "error_code.hpp"
#include "kinlangevin/rng.hpp"
#include "kinlangevin/sde_sim.hpp"
#include "oracles.hpp"

using namespace kinlangevin;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

SimConfig config(double dt, std::int64_t steps, std::int64_t n, std::uint64_t seed = 7) {
  SimConfig c;
  c.dt = dt;
  c.n_steps = steps;
  c.n_particles = n;
  c.seed = seed;
  return c;
}

PotentialPtr unit_oscillator() { return quadratic_diagonal(vec({1.0})); }

/// Standard error of each entry of an unbiased sample covariance of a Gaussian.
Matrix cov_standard_error(const Matrix& cov, double n) {
  Matrix se(cov.rows(), cov.cols());
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    for (Eigen::Index j = 0; j < cov.cols(); ++j) se(i, j) = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / n);
  }
  return se;
}

}  // namespace

TEST(Step, ZeroNoiseMatchesLinearOde) {
  auto cfg = config(1e-4, 100000, 1);
  cfg.inject_noise = false;
  Ensemble e = Ensemble::from_point(vec({1.0}), vec({0.0}), 1);
  Simulator(unit_oscillator(), FrictionSpec::constant_scalar(2.0), cfg).advance(e, cfg.n_steps);
  const Vector exact = oracle::expm_taylor(10.0 * (Matrix(2, 2) << 0, 1, -1, -2).finished()).col(0);
  EXPECT_NEAR(e.q[0], exact(0), 1e-3);
  EXPECT_NEAR(e.p[0], exact(1), 1e-3);
  EXPECT_NEAR(e.time, 10.0, 1e-9);
  EXPECT_EQ(e.steps_taken, 100000);
}

TEST(Step, HamiltonianLimitConservesEnergyToOrderDt) {
  const auto pot = quadratic_diagonal(vec({1.0, 2.0}));
  const auto friction = FrictionSpec::constant_matrix(1e-12 * Matrix::Identity(2, 2));
  const auto energy = [&](const Ensemble& e) {
    return pot->energy({e.q.data(), 2}) + 0.5 * (e.p[0] * e.p[0] + e.p[1] * e.p[1]);
  };
  double drift[2];
  int idx = 0;
  for (double dt : {1e-3, 5e-4}) {
    const auto cfg = config(dt, static_cast<std::int64_t>(std::lround(5.0 / dt)), 1);
    Ensemble e = Ensemble::from_point(vec({1.0, 0.5}), vec({0.0, 1.0}), 1);
    const double e0 = energy(e);
    Simulator(pot, friction, cfg).advance(e, cfg.n_steps);
    drift[idx] = std::abs(energy(e) - e0) / e0 / 5.0;
    // Explicit Euler multiplies the energy of mode w by 1 + w^2 dt^2 per step.
    EXPECT_LT(drift[idx], 4.0 * dt) << dt;
    ++idx;
  }
  EXPECT_NEAR(drift[0] / drift[1], 2.0, 0.2);
}

TEST(Step, PureNoiseKick) {
  const auto pot = quadratic_diagonal(vec({1.0, 3.0}));
  auto cfg = config(0.01, 1, 5, 99);
  Ensemble e = Ensemble::zeros(5, 2);
  const auto friction = FrictionSpec::constant_scalar(2.0);
  step(e, pot, friction, cfg);
  const NormalStream stream(99, StreamDomain::DynamicsNoise);
  for (std::int64_t i = 0; i < 5; ++i) {
    double xi[2];
    stream.fill(static_cast<std::uint64_t>(i), 0u, xi, 2);
    for (int c = 0; c < 2; ++c) {
      EXPECT_EQ(e.q[static_cast<std::size_t>(2 * i + c)], 0.0);
      EXPECT_NEAR(e.p[static_cast<std::size_t>(2 * i + c)], 2.0 * xi[c] * 0.1, 1e-15);
    }
  }
}

TEST(Step, DiagonalAndGeneralPathsAgree) {
  // hessian_sqrt on a diagonal potential takes the diagonal kernel; an
  // equivalent constant dense matrix takes the dense one.
  const auto pot = quadratic_diagonal(vec({1.0, 2.0}));
  const auto cfg = config(1e-3, 50, 10);
  Ensemble a = Ensemble::from_point(vec({0.3, -0.2}), vec({0.1, 0.4}), 10);
  Ensemble b = a;
  Simulator(pot, FrictionSpec::hessian_sqrt(2.0), cfg).advance(a, 50);
  Simulator(pot, FrictionSpec::constant_matrix(vec({2.0, 4.0}).asDiagonal()), cfg).advance(b, 50);
  for (std::size_t k = 0; k < a.q.size(); ++k) {
    EXPECT_NEAR(a.q[k], b.q[k], 1e-13);
    EXPECT_NEAR(a.p[k], b.p[k], 1e-13);
  }
}

TEST(Step, Blowup) {
  const auto cfg = config(10.0, 100, 3);
  Ensemble e = Ensemble::from_point(vec({1.0}), vec({0.0}), 3);
  try {
    Simulator(unit_oscillator(), FrictionSpec::constant_scalar(2.0), cfg).advance(e, 100);
    FAIL() << "expected NumericalBlowup";
  } catch (const NumericalBlowup& err) {
    EXPECT_EQ(err.code(), ErrorCode::NumericalBlowup);
    EXPECT_GT(err.step(), 1);
    EXPECT_LE(err.step(), 100);
  }
}

TEST(Step, InvalidConfig) {
  EXPECT_EQ(code_of([] { config(0.0, 1, 1).validate(); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { config(1e-3, 1, 0).validate(); }), ErrorCode::InvalidArgument);
  auto c = config(1e-3, 1, 1);
  c.form = DynamicsForm::Rescaled;
  c.alpha = -1.0;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::InvalidArgument);
}

TEST(Run, RecordingSchedule) {
  const auto cfg = config(1e-2, 10, 50);
  Ensemble e = Ensemble::from_point(vec({1.0}), vec({0.0}), 50);
  const auto result = run(e, unit_oscillator(), FrictionSpec::constant_scalar(2.0), cfg, 4);
  ASSERT_EQ(result.trajectory.size(), 4u);
  EXPECT_EQ(result.trajectory[1].step, 4);
  EXPECT_EQ(result.trajectory[3].step, 10);
  EXPECT_NEAR(result.trajectory[3].time, 0.1, 1e-12);
  EXPECT_TRUE(result.warnings.empty());
  EXPECT_EQ(code_of([&] { run(e, unit_oscillator(), FrictionSpec::constant_scalar(2.0), cfg, 0); }),
            ErrorCode::InvalidArgument);
}

TEST(Run, StabilityWarning) {
  const auto cfg = config(1.5, 1, 10);
  Ensemble e = Ensemble::from_point(vec({0.0}), vec({0.0}), 10);
  const auto result = run(e, unit_oscillator(), FrictionSpec::constant_scalar(2.0), cfg, 1);
  EXPECT_EQ(result.warnings.size(), 1u);
}

TEST(Run, OuMomentsMatchOracle) {
  const auto cfg = config(1e-3, 1000, 100000, 2024);
  Ensemble e = Ensemble::from_point(vec({1.0}), vec({0.0}), cfg.n_particles);
  const auto result = run(e, unit_oscillator(), FrictionSpec::constant_scalar(2.0), cfg, 1000);
  const MomentSummary& m = result.trajectory.back();
  const LinearDynamics dyn(Matrix::Identity(1, 1), 2.0 * Matrix::Identity(1, 1));
  const GaussianMoments exact = propagate(dyn, GaussianMoments::make(vec({1.0, 0.0}), Matrix::Zero(2, 2)), 1.0);
  for (int i = 0; i < 2; ++i) {
    EXPECT_LT(std::abs(m.mean(i) - exact.mean(i)), 3.0 * std::sqrt(exact.cov(i, i) / 1e5)) << i;
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(m.cov(i, j), exact.cov(i, j), 0.05 * std::abs(exact.cov(i, j)));
  }
}

TEST(Run, DeterministicAndWorkerIndependent) {
  const auto pot = perturbed_diagonal(vec({1.0, 2.0}), 0.1);
  auto cfg = config(1e-2, 30, 20000, 5);
  const auto friction = FrictionSpec::hessian_sqrt(2.0);
  const auto init = GaussianMoments::make(Vector::Zero(4), Matrix::Identity(4, 4));
  Ensemble a = Ensemble::from_gaussian(init, cfg.n_particles, 11);
  Ensemble b = a;
  Ensemble c = a;
  const auto ra = run(a, pot, friction, cfg, 10);
  const auto rb = run(b, pot, friction, cfg, 10);
  cfg.workers = 3;
  const auto rc = run(c, pot, friction, cfg, 10);
  ASSERT_EQ(ra.trajectory.size(), rb.trajectory.size());
  for (std::size_t k = 0; k < ra.trajectory.size(); ++k) {
    EXPECT_EQ(ra.trajectory[k].mean, rb.trajectory[k].mean);
    EXPECT_EQ(ra.trajectory[k].cov, rb.trajectory[k].cov);
    EXPECT_EQ(ra.trajectory[k].mean, rc.trajectory[k].mean);
    EXPECT_EQ(ra.trajectory[k].cov, rc.trajectory[k].cov);
  }
  EXPECT_EQ(a.q, c.q);
  EXPECT_EQ(a.p, c.p);
}

TEST(Run, ParticleCountExtendsStreams) {
  const auto pot = unit_oscillator();
  const auto friction = FrictionSpec::constant_scalar(1.0);
  const auto init = GaussianMoments::make(Vector::Zero(2), Matrix::Identity(2, 2));
  Ensemble small = Ensemble::from_gaussian(init, 100, 3);
  Ensemble large = Ensemble::from_gaussian(init, 20000, 3);
  for (std::size_t k = 0; k < 100; ++k) EXPECT_EQ(small.q[k], large.q[k]);
  Simulator(pot, friction, config(1e-2, 40, 100)).advance(small, 40);
  Simulator(pot, friction, config(1e-2, 40, 20000)).advance(large, 40);
  for (std::size_t k = 0; k < 100; ++k) {
    EXPECT_EQ(small.q[k], large.q[k]);
    EXPECT_EQ(small.p[k], large.p[k]);
  }
}

TEST(Run, RescaledFormMapsToOriginal) {
  // V = 2 q^2 (alpha = 4), Gamma = 2 sqrt(Hess V) = 4. Rescaled: V / 4 = q^2 / 2,
  // Gamma / 2 = 2, tau = 2 t, p~ = p / 2.
  const double alpha = 4.0;
  const std::int64_t n = 20000;
  const auto init = GaussianMoments::make(vec({1.0, 0.5}), 0.2 * Matrix::Identity(2, 2));
  Ensemble orig = Ensemble::from_gaussian(init, n, 8);
  Ensemble resc = orig;
  for (double& p : resc.p) p /= std::sqrt(alpha);

  const auto cfg_o = config(1e-3, 1000, n, 21);
  auto cfg_r = config(2e-3, 1000, n, 21);
  cfg_r.form = DynamicsForm::Rescaled;
  cfg_r.alpha = alpha;
  const auto ro = run(orig, quadratic_diagonal(vec({2.0})), FrictionSpec::hessian_sqrt(2.0), cfg_o, 1000);
  const auto rr = run(resc, quadratic_diagonal(vec({1.0})), FrictionSpec::hessian_sqrt(2.0), cfg_r, 1000);

  const MomentSummary& mo = ro.trajectory.back();
  const MomentSummary& mr = rr.trajectory.back();
  EXPECT_NEAR(mr.time, 2.0 * mo.time, 1e-12);
  const Vector scale = vec({1.0, std::sqrt(alpha)});
  const Vector mean_back = scale.cwiseProduct(mr.mean);
  const Matrix cov_back = scale.asDiagonal() * mr.cov * scale.asDiagonal();
  const Matrix se = cov_standard_error(mo.cov, static_cast<double>(n));
  for (int i = 0; i < 2; ++i) {
    EXPECT_LT(std::abs(mean_back(i) - mo.mean(i)), 3.0 * std::sqrt(mo.cov(i, i) / n));
    for (int j = 0; j < 2; ++j) EXPECT_LT(std::abs(cov_back(i, j) - mo.cov(i, j)), 3.0 * se(i, j));
  }
  // Same noise keys and matched step sizes give the same discrete paths.
  EXPECT_LT((mean_back - mo.mean).norm(), 1e-10);
}

TEST(Run, StationarityPreserved) {
  const LinearDynamics dyn(Matrix::Identity(1, 1), 2.0 * Matrix::Identity(1, 1));
  const GaussianMoments pi = stationary_moments(dyn);
  const std::int64_t n = 10000;
  Ensemble e = Ensemble::from_gaussian(pi, n, 77);
  const auto result = run(e, unit_oscillator(), FrictionSpec::constant_scalar(2.0), config(1e-3, 5000, n, 78), 5000);
  const MomentSummary& first = result.trajectory.front();
  const MomentSummary& last = result.trajectory.back();
  // The two summaries are nearly independent, so their difference has sqrt(2) times the error.
  const Matrix se = std::sqrt(2.0) * cov_standard_error(pi.cov, static_cast<double>(n));
  for (int i = 0; i < 2; ++i) {
    EXPECT_LT(std::abs(last.mean(i) - first.mean(i)), 3.0 * std::sqrt(2.0 * pi.cov(i, i) / n));
    for (int j = 0; j < 2; ++j) EXPECT_LT(std::abs(last.cov(i, j) - first.cov(i, j)), 3.0 * se(i, j));
  }
}

TEST(Run, NoiseRefinementSharesPaths) {
  // dt = 0.02 with 2 fine increments and dt = 0.01 with 1 see the same Brownian path.
  auto coarse = config(0.02, 1, 1, 4);
  coarse.noise_refinement = 2;
  coarse.inject_noise = true;
  Ensemble a = Ensemble::zeros(1, 1);
  Simulator(quadratic_diagonal(vec({1e-9})), FrictionSpec::constant_scalar(1e-12), coarse).advance(a, 1);
  Ensemble b = Ensemble::zeros(1, 1);
  Simulator(quadratic_diagonal(vec({1e-9})), FrictionSpec::constant_scalar(1e-12), config(0.01, 2, 1, 4)).advance(b, 2);
  EXPECT_NEAR(a.p[0], b.p[0], 1e-12 * std::abs(b.p[0]) + 1e-22);
}

TEST(Summarize, SmallSample) {
  Ensemble e = Ensemble::zeros(3, 1);
  e.q = {1.0, 2.0, 3.0};
  e.p = {0.0, 0.0, 3.0};
  const MomentSummary m = summarize(e);
  EXPECT_DOUBLE_EQ(m.mean(0), 2.0);
  EXPECT_DOUBLE_EQ(m.mean(1), 1.0);
  EXPECT_DOUBLE_EQ(m.cov(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m.cov(0, 1), 1.5);
  EXPECT_DOUBLE_EQ(m.cov(1, 1), 3.0);
  EXPECT_EQ(code_of([] { summarize(Ensemble::zeros(1, 1)); }), ErrorCode::InsufficientData);
}

TEST(Chi2Proxy, MeanShift) {
  const auto pi = GaussianMoments::make(Vector::Zero(2), Matrix::Identity(2, 2));
  const Ensemble e = Ensemble::from_gaussian(GaussianMoments::make(vec({1.0, 0.0}), Matrix::Identity(2, 2)), 100000, 5);
  EXPECT_NEAR(estimate_chi2_gaussian_proxy(e, pi), std::exp(1.0) - 1.0, 0.05 * (std::exp(1.0) - 1.0));
}

TEST(Chi2Proxy, VanishesAtTarget) {
  const auto pi = GaussianMoments::make(Vector::Zero(2), Matrix::Identity(2, 2));
  const std::int64_t n = 100000;
  const Ensemble e = Ensemble::from_gaussian(pi, n, 6);
  const double v = estimate_chi2_gaussian_proxy(e, pi);
  EXPECT_GE(v, 0.0);
  EXPECT_LT(v, 10.0 * 4.0 / static_cast<double>(n));
}

TEST(Chi2Proxy, Degenerate) {
  const auto pi = GaussianMoments::make(Vector::Zero(2), Matrix::Identity(2, 2));
  const Ensemble e = Ensemble::from_point(vec({1.0}), vec({0.0}), 100);
  EXPECT_EQ(code_of([&] { estimate_chi2_gaussian_proxy(e, pi); }), ErrorCode::NotPositiveDefinite);
}

TEST(Csv, HeaderAndRows) {
  MomentSummary m;
  m.time = 0.5;
  m.mean = vec({1.0, 2.0});
  m.cov = Matrix::Identity(2, 2);
  m.chi2_proxy = 0.25;
  std::ostringstream out;
  write_trajectory_csv(out, {m}, "seed=1");
  EXPECT_EQ(out.str(),
            "# seed=1\n"
            "time,mean_1,mean_2,cov_1_1,cov_1_2,cov_2_1,cov_2_2,chi2_proxy\n"
            "0.5,1,2,1,0,0,1,0.25\n");
}
