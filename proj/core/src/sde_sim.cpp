#include "kinlangevin/sde_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>

#include "kinlangevin/error.hpp"
#include "kinlangevin/format.hpp"
#include "kinlangevin/rng.hpp"

namespace kinlangevin {

namespace {

// Fixed so that reductions are identical for every worker count.
constexpr std::int64_t kChunk = 8192;

std::int64_t chunk_count(std::int64_t n) { return (n + kChunk - 1) / kChunk; }

/// Runs fn(chunk) for every chunk on up to `workers` threads and rethrows the
/// exception of the lowest failing chunk.
template <typename Fn>
void for_each_chunk(std::int64_t chunks, int workers, Fn&& fn) {
  const int threads = static_cast<int>(std::min<std::int64_t>(std::max(1, workers), chunks));
  if (threads <= 1) {
    for (std::int64_t c = 0; c < chunks; ++c) fn(c);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::mutex mu;
  std::int64_t failed_chunk = chunks;
  std::exception_ptr failure;
  auto body = [&] {
    for (std::int64_t c = next++; c < chunks; c = next++) {
      try {
        fn(c);
      } catch (...) {
        std::lock_guard lock(mu);
        if (c < failed_chunk) {
          failed_chunk = c;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads - 1));
  for (int t = 1; t < threads; ++t) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

struct Blowup {
  std::int64_t step;
  std::int64_t particle;
};

bool escaped(double x) { return !(std::abs(x) <= kBlowupThreshold); }

enum class Mode { ConstantDiagonal, Diagonal, ConstantDense, General };

bool is_diagonal_matrix(const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i != j && m(i, j) != 0.0) return false;
    }
  }
  return true;
}

}  // namespace

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidArgument, "SimConfig: dt must be positive");
  if (n_steps < 0) throw Error(ErrorCode::InvalidArgument, "SimConfig: n_steps must be >= 0");
  if (n_particles < 1) throw Error(ErrorCode::InvalidArgument, "SimConfig: n_particles must be >= 1");
  if (noise_refinement < 1) throw Error(ErrorCode::InvalidArgument, "SimConfig: noise_refinement must be >= 1");
  if (workers < 1) throw Error(ErrorCode::InvalidArgument, "SimConfig: workers must be >= 1");
  noise_scale(form, alpha);
}

Ensemble Ensemble::zeros(std::int64_t n, int d) {
  if (n < 1 || d < 1) throw Error(ErrorCode::InvalidArgument, "Ensemble: need n >= 1 and d >= 1");
  Ensemble e;
  e.n = n;
  e.d = d;
  e.q.assign(static_cast<std::size_t>(n * d), 0.0);
  e.p.assign(static_cast<std::size_t>(n * d), 0.0);
  return e;
}

Ensemble Ensemble::from_gaussian(const GaussianMoments& moments, std::int64_t n, std::uint64_t seed) {
  const int two_d = moments.phase_dim();
  const int d = two_d / 2;
  Ensemble e = zeros(n, d);
  e.seed = seed;
  const SpectralDecomposition eig = symmetric_eigen(moments.cov);
  const Matrix factor = eig.eigenvectors * eig.eigenvalues.cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const NormalStream stream(seed, StreamDomain::InitialState);
  Vector z(two_d);
  for (std::int64_t i = 0; i < n; ++i) {
    stream.fill(static_cast<std::uint64_t>(i), 0u, z.data(), two_d);
    const Vector x = moments.mean + factor * z;
    for (int j = 0; j < d; ++j) {
      e.q[static_cast<std::size_t>(i * d + j)] = x(j);
      e.p[static_cast<std::size_t>(i * d + j)] = x(d + j);
    }
  }
  return e;
}

Ensemble Ensemble::from_point(const Vector& q0, const Vector& p0, std::int64_t n) {
  if (q0.size() != p0.size()) throw Error(ErrorCode::DimensionMismatch, "Ensemble::from_point");
  const int d = static_cast<int>(q0.size());
  Ensemble e = zeros(n, d);
  for (std::int64_t i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      e.q[static_cast<std::size_t>(i * d + j)] = q0(j);
      e.p[static_cast<std::size_t>(i * d + j)] = p0(j);
    }
  }
  return e;
}

Simulator::Simulator(PotentialPtr potential, FrictionSpec friction, SimConfig config)
    : potential_(std::move(potential)),
      config_(config),
      field_(std::move(friction), potential_, config.form, config.alpha) {
  config_.validate();
}

void Simulator::check_ensemble(const Ensemble& e) const {
  if (e.d != potential_->dim()) throw Error(ErrorCode::DimensionMismatch, "ensemble and potential dimensions differ");
  if (e.n < 1 || e.q.size() != static_cast<std::size_t>(e.n * e.d) || e.p.size() != e.q.size()) {
    throw Error(ErrorCode::DimensionMismatch, "ensemble storage does not match n x d");
  }
}

void Simulator::step(Ensemble& ensemble) const { advance(ensemble, 1); }

void Simulator::advance(Ensemble& e, std::int64_t n_steps) const {
  check_ensemble(e);
  if (n_steps <= 0) return;
  const int r = config_.noise_refinement;
  const std::int64_t last_fine = (e.steps_taken + n_steps) * r;
  if (last_fine > static_cast<std::int64_t>(std::numeric_limits<std::uint32_t>::max())) {
    throw Error(ErrorCode::InvalidArgument, "step counter exceeds 2^32 fine noise increments");
  }

  const int d = e.d;
  const double dt = config_.dt;
  const double sqrt_dt = std::sqrt(dt);
  const double inv_sqrt_r = 1.0 / std::sqrt(static_cast<double>(r));
  const bool noisy = config_.inject_noise;
  const NormalStream stream(config_.seed, StreamDomain::DynamicsNoise);
  const std::int64_t step0 = e.steps_taken;

  Mode mode = Mode::General;
  Vector const_gamma_diag;
  Vector const_sigma_diag;
  if (field_.is_constant()) {
    const Matrix& g = field_.constant_gamma();
    const Matrix& s = field_.constant_diffusion();
    if (is_diagonal_matrix(g) && is_diagonal_matrix(s)) {
      mode = Mode::ConstantDiagonal;
      const_gamma_diag = g.diagonal();
      const_sigma_diag = s.diagonal();
    } else {
      mode = Mode::ConstantDense;
    }
  } else if (field_.is_diagonal()) {
    mode = Mode::Diagonal;
  }

  std::vector<std::optional<Blowup>> blowups(static_cast<std::size_t>(chunk_count(e.n)));

  auto kernel = [&](std::int64_t chunk) {
    const std::int64_t lo = chunk * kChunk;
    const std::int64_t hi = std::min(e.n, lo + kChunk);
    std::vector<double> grad(d), xi(d), fine(d), gdiag(d), sdiag(d), gp(d), kick(d);
    Matrix gmat(d, d), smat(d, d);
    std::optional<Blowup> found;
    for (std::int64_t i = lo; i < hi; ++i) {
      double* q = e.q.data() + i * d;
      double* p = e.p.data() + i * d;
      const std::span<const double> qs(q, static_cast<std::size_t>(d));
      for (std::int64_t k = 0; k < n_steps; ++k) {
        const std::int64_t global_step = step0 + k;
        potential_->gradient_into(qs, grad);
        if (noisy) {
          std::fill(xi.begin(), xi.end(), 0.0);
          for (int j = 0; j < r; ++j) {
            stream.fill(static_cast<std::uint64_t>(i), static_cast<std::uint32_t>(global_step * r + j), fine.data(), d);
            for (int c = 0; c < d; ++c) xi[c] += fine[c];
          }
          for (int c = 0; c < d; ++c) xi[c] *= inv_sqrt_r * sqrt_dt;
        }
        switch (mode) {
          case Mode::ConstantDiagonal:
            for (int c = 0; c < d; ++c) {
              gp[c] = const_gamma_diag(c) * p[c];
              kick[c] = noisy ? const_sigma_diag(c) * xi[c] : 0.0;
            }
            break;
          case Mode::Diagonal:
            field_.diagonal_into(qs, gdiag, sdiag);
            for (int c = 0; c < d; ++c) {
              gp[c] = gdiag[c] * p[c];
              kick[c] = noisy ? sdiag[c] * xi[c] : 0.0;
            }
            break;
          case Mode::ConstantDense:
          case Mode::General: {
            const Matrix& g = mode == Mode::ConstantDense ? field_.constant_gamma() : gmat;
            const Matrix& s = mode == Mode::ConstantDense ? field_.constant_diffusion() : smat;
            if (mode == Mode::General) field_.evaluate(qs, gmat, smat);
            for (int a = 0; a < d; ++a) {
              double acc_g = 0.0;
              double acc_s = 0.0;
              for (int b = 0; b < d; ++b) {
                acc_g += g(a, b) * p[b];
                acc_s += s(a, b) * xi[b];
              }
              gp[a] = acc_g;
              kick[a] = noisy ? acc_s : 0.0;
            }
            break;
          }
        }
        bool bad = false;
        for (int c = 0; c < d; ++c) {
          const double q_new = q[c] + p[c] * dt;
          const double p_new = p[c] - (grad[c] + gp[c]) * dt + kick[c];
          q[c] = q_new;
          p[c] = p_new;
          bad = bad || escaped(q_new) || escaped(p_new);
        }
        if (bad) {
          if (!found || global_step + 1 < found->step) found = Blowup{global_step + 1, i};
          break;
        }
      }
    }
    blowups[static_cast<std::size_t>(chunk)] = found;
  };

  for_each_chunk(chunk_count(e.n), config_.workers, kernel);

  std::optional<Blowup> first;
  for (const auto& b : blowups) {
    if (b && (!first || b->step < first->step)) first = b;
  }
  if (first) {
    throw NumericalBlowup(first->step, first->particle,
                          "coordinate left [-1e12, 1e12] or became non-finite (dt = " + format_double(dt) + ")");
  }
  e.steps_taken += n_steps;
  e.dt = dt;
  e.seed = config_.seed;
  e.time += static_cast<double>(n_steps) * dt;
}

std::vector<std::string> Simulator::stability_warnings(const Ensemble& e) const {
  check_ensemble(e);
  Vector mean_q = Vector::Zero(e.d);
  for (std::int64_t i = 0; i < e.n; ++i) {
    for (int c = 0; c < e.d; ++c) mean_q(c) += e.q[static_cast<std::size_t>(i * e.d + c)];
  }
  mean_q /= static_cast<double>(e.n);
  Matrix g, s;
  field_.evaluate({mean_q.data(), static_cast<std::size_t>(e.d)}, g, s);
  const double lmax = symmetric_eigen(g).max_eigenvalue();
  std::vector<std::string> out;
  if (!(config_.dt * lmax < 2.0)) {
    out.push_back("dt * lambda_max(Gamma) = " + format_double(config_.dt * lmax) +
                  " >= 2 at the mean initial position; Euler-Maruyama may be unstable");
  }
  return out;
}

SimulationResult Simulator::run(Ensemble& e, std::int64_t record_every, const GaussianMoments* pi) const {
  if (record_every < 1) throw Error(ErrorCode::InvalidArgument, "run: record_every must be >= 1");
  if (e.n != config_.n_particles) {
    throw Error(ErrorCode::InvalidArgument, "run: ensemble has " + std::to_string(e.n) + " particles, config " +
                                                std::to_string(config_.n_particles));
  }
  SimulationResult result;
  result.warnings = stability_warnings(e);
  auto record = [&] {
    MomentSummary m = summarize(e, config_.workers);
    if (pi) {
      try {
        m.chi2_proxy = estimate_chi2_gaussian_proxy(m, *pi);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::NotPositiveDefinite) throw;
      }
    }
    result.trajectory.push_back(std::move(m));
  };
  record();
  std::int64_t done = 0;
  while (done < config_.n_steps) {
    const std::int64_t chunk = std::min(record_every, config_.n_steps - done);
    advance(e, chunk);
    done += chunk;
    record();
  }
  return result;
}

void step(Ensemble& ensemble, PotentialPtr potential, const FrictionSpec& friction, const SimConfig& config) {
  Simulator(std::move(potential), friction, config).step(ensemble);
}

SimulationResult run(Ensemble& ensemble, PotentialPtr potential, const FrictionSpec& friction,
                     const SimConfig& config, std::int64_t record_every, const GaussianMoments* pi) {
  return Simulator(std::move(potential), friction, config).run(ensemble, record_every, pi);
}

MomentSummary summarize(const Ensemble& e, int workers) {
  if (e.n < 2) throw Error(ErrorCode::InsufficientData, "summarize: need at least 2 particles");
  const int d = e.d;
  const int m = 2 * d;
  const std::int64_t chunks = chunk_count(e.n);
  auto row = [&](std::int64_t i, double* z) {
    for (int c = 0; c < d; ++c) {
      z[c] = e.q[static_cast<std::size_t>(i * d + c)];
      z[d + c] = e.p[static_cast<std::size_t>(i * d + c)];
    }
  };

  std::vector<Vector> sums(static_cast<std::size_t>(chunks), Vector::Zero(m));
  for_each_chunk(chunks, workers, [&](std::int64_t chunk) {
    Vector& s = sums[static_cast<std::size_t>(chunk)];
    Vector z(m);
    for (std::int64_t i = chunk * kChunk; i < std::min(e.n, (chunk + 1) * kChunk); ++i) {
      row(i, z.data());
      s += z;
    }
  });
  Vector mean = Vector::Zero(m);
  for (const auto& s : sums) mean += s;
  mean /= static_cast<double>(e.n);

  std::vector<Matrix> cross(static_cast<std::size_t>(chunks), Matrix::Zero(m, m));
  for_each_chunk(chunks, workers, [&](std::int64_t chunk) {
    Matrix& acc = cross[static_cast<std::size_t>(chunk)];
    Vector z(m);
    for (std::int64_t i = chunk * kChunk; i < std::min(e.n, (chunk + 1) * kChunk); ++i) {
      row(i, z.data());
      z -= mean;
      acc.selfadjointView<Eigen::Lower>().rankUpdate(z);
    }
  });
  Matrix cov = Matrix::Zero(m, m);
  for (const auto& c : cross) cov += c;
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(e.n - 1);

  MomentSummary out;
  out.time = e.time;
  out.step = e.steps_taken;
  out.mean = std::move(mean);
  out.cov = std::move(cov);
  return out;
}

double estimate_chi2_gaussian_proxy(const MomentSummary& summary, const GaussianMoments& pi) {
  if (!is_positive_definite(summary.cov)) {
    throw Error(ErrorCode::NotPositiveDefinite, "chi2 proxy: empirical covariance is degenerate");
  }
  return gaussian_chi2({summary.mean, summary.cov}, pi);
}

double estimate_chi2_gaussian_proxy(const Ensemble& ensemble, const GaussianMoments& pi) {
  return estimate_chi2_gaussian_proxy(summarize(ensemble), pi);
}

void write_trajectory_csv(std::ostream& out, const std::vector<MomentSummary>& trajectory,
                          const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  const int m = trajectory.empty() ? 0 : static_cast<int>(trajectory.front().mean.size());
  out << "time";
  for (int i = 1; i <= m; ++i) out << ",mean_" << i;
  for (int i = 1; i <= m; ++i) {
    for (int j = 1; j <= m; ++j) out << ",cov_" << i << '_' << j;
  }
  out << ",chi2_proxy\n";
  for (const auto& row : trajectory) {
    out << format_double(row.time);
    for (int i = 0; i < m; ++i) out << ',' << format_double(row.mean(i));
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) out << ',' << format_double(row.cov(i, j));
    }
    out << ',' << format_double(row.chi2_proxy) << '\n';
  }
}

}  // namespace kinlangevin
