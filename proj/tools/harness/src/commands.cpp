#include "kinlangevin/harness/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "kinlangevin/error.hpp"
#include "kinlangevin/format.hpp"
#include "kinlangevin/lyapunov.hpp"
#include "kinlangevin/rate_bounds.hpp"
#include "kinlangevin/sde_sim.hpp"

namespace kinlangevin::harness {

namespace fs = std::filesystem;

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return t;
}

Json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

Json report_header(const ExperimentConfig& config) {
  return {{"format_version", kFormatVersion}, {"kind", to_string(config.kind)}, {"config", to_json(config)}};
}

std::string csv_comment(const ExperimentConfig& config) {
  return "format_version=" + std::to_string(kFormatVersion) + " config=" + to_json(config).dump();
}

class Output {
 public:
  explicit Output(const ExperimentConfig& config) : dir_(config.output_dir) { fs::create_directories(dir_); }

  std::ofstream open(const std::string& name) {
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path.string());
    files_.push_back(path);
    return out;
  }

  void json(const std::string& name, const Json& j) {
    auto out = open(name);
    out << j.dump(2) << '\n';
  }

  std::vector<fs::path> files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
};

void write_row(std::ostream& out, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out << ',';
    out << c;
    first = false;
  }
  out << '\n';
}

std::string num(double x) { return format_double(x); }
std::string flag(bool b) { return b ? "1" : "0"; }

Json constants_json(const AssumptionConstants& k) {
  Json j = {{"alpha", k.alpha}, {"beta", k.beta}, {"gamma", k.gamma}, {"kappa", k.kappa},
            {"dim", k.dim},     {"source", to_string(k.source)}};
  if (k.box) {
    j["box"] = {{"lo", vector_json(k.box->lo)}, {"hi", vector_json(k.box->hi)}};
    j["n_samples"] = k.n_samples;
  }
  return j;
}

Json coeffs_json(const LyapunovCoefficients& c) { return {{"s", c.s}, {"a", c.a}, {"b", c.b}, {"c", c.c}}; }

Json certificate_json(const RateCertificate& c) {
  return {{"coefficients", coeffs_json(c.coeffs)},
          {"l1", c.l1},
          {"l2", c.l2},
          {"m1", c.m1},
          {"m2", c.m2},
          {"x_low", c.x_low},
          {"x_high", c.x_high},
          {"rescaled_rate", c.rescaled_rate},
          {"time_multiplier", c.time_multiplier},
          {"original_rate", c.original_rate},
          {"gamma_threshold", c.gamma_threshold},
          {"valid", c.valid}};
}

struct CertifiedProblem {
  AssumptionConstants constants;
  RescaledConstants rescaled;
  OptimizerResult optimizer;
  RateCertificate cert;
  ComparisonReport comparison;
};

CertifiedProblem certify_problem(const ExperimentConfig& config) {
  const PotentialPtr pot = config.potential->build();
  CertifiedProblem p;
  p.constants = config.constants.build(*pot);
  p.rescaled = rescale_rate(p.constants);
  p.optimizer = optimize_m1(p.rescaled.constants, config.certificate->s_grid, config.certificate->x0_grid);
  p.cert = certify_rescaled(p.constants, p.optimizer.best.coeffs);
  p.comparison = compare_to_constant_friction(p.constants, p.cert, config.certificate->lambda_grid);
  return p;
}

Json comparison_summary(const ComparisonReport& r) {
  Json j = {{"applicable", r.applicable},     {"certified_rate", r.certified_rate}, {"ratio", r.ratio},
            {"all_dominate", r.all_dominate}, {"min_margin", r.min_margin},         {"n_rows", r.rows.size()}};
  if (!r.applicable) j["note"] = "certificate is not valid (gamma >= sqrt(m1 / m2)); comparison does not apply";
  return j;
}

DecayModel decay_model(const std::string& name) {
  return name == "exponential_times_power" ? DecayModel::ExponentialTimesPower : DecayModel::Exponential;
}

}  // namespace

GaussianMoments reference_moments(const Potential& potential, double noise_scale) {
  const int d = potential.dim();
  Matrix cov = Matrix::Zero(2 * d, 2 * d);
  Vector mean = Vector::Zero(2 * d);
  cov.bottomRightCorner(d, d) = noise_scale * Matrix::Identity(d, d);
  if (potential.constant_hessian()) {
    const Matrix a = potential.hessian(Vector::Zero(d));
    const Vector minimizer = -spd_inverse(a) * potential.gradient(Vector::Zero(d));
    mean.head(d) = minimizer;
    cov.topLeftCorner(d, d) = noise_scale * spd_inverse(a);
    return GaussianMoments::make(mean, cov);
  }
  if (!potential.diagonal_hessian()) {
    throw Error(ErrorCode::UnsupportedPotential, "reference moments need a quadratic or separable potential");
  }
  // Separable: integrate each coordinate's marginal exp(-V_i(x) / scale).
  const double alpha = potential.constants().alpha;
  constexpr int kNodes = 20001;
  for (int i = 0; i < d; ++i) {
    const double half = 14.0 * std::sqrt(noise_scale / alpha);
    Vector q = Vector::Zero(d);
    std::vector<double> x(kNodes), e(kNodes);
    double e_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < kNodes; ++k) {
      x[k] = -half + 2.0 * half * k / (kNodes - 1);
      q(i) = x[k];
      e[k] = potential.value(q) / noise_scale;
      e_min = std::min(e_min, e[k]);
    }
    double z = 0.0, m1 = 0.0, m2 = 0.0;
    for (int k = 0; k < kNodes; ++k) {
      const double w = std::exp(-(e[k] - e_min)) * ((k == 0 || k == kNodes - 1) ? 0.5 : 1.0);
      z += w;
      m1 += w * x[k];
      m2 += w * x[k] * x[k];
    }
    mean(i) = m1 / z;
    cov(i, i) = m2 / z - mean(i) * mean(i);
  }
  return GaussianMoments::make(mean, cov);
}

RunOutcome cmd_oracle_ou(const ExperimentConfig& config) {
  const OracleOuConfig& o = *config.oracle_ou;
  Output out(config);
  RunOutcome outcome;
  Json report = report_header(config);
  report["initial_state"] = "mean (1/w, 0), covariance half the stationary covariance";

  auto csv = out.open("oracle_ou.csv");
  csv << "# " << csv_comment(config) << '\n';
  write_row(csv, {"w", "lambda", "friction", "t", "chi2"});

  Json rows = Json::array();
  double max_gap = 0.0;
  for (const double w : o.w) {
    std::vector<std::pair<std::string, double>> cases;
    for (const double lambda : o.lambda) cases.emplace_back("constant_scalar", lambda);
    cases.emplace_back("hessian_sqrt", 2.0 * w);
    for (const auto& [kind, lambda] : cases) {
      const LinearDynamics dyn(Matrix::Constant(1, 1, w * w), Matrix::Constant(1, 1, lambda));
      const GaussianMoments pi = stationary_moments(dyn);
      Vector m0(2);
      m0 << 1.0 / w, 0.0;
      const GaussianMoments init = GaussianMoments::make(m0, 0.5 * pi.cov);
      const double rate = ou_rate_closed_form(w, lambda);
      const std::vector<double> times = linspace(0.0, o.t_max_factor / rate, o.n_times);
      std::vector<double> chi2;
      for (const auto& m : propagate_grid(dyn, init, times)) chi2.push_back(gaussian_chi2(m, pi));
      for (std::size_t k = 0; k < times.size(); ++k) write_row(csv, {num(w), num(lambda), kind, num(times[k]), num(chi2[k])});
      const DecayFit fit = fit_decay(times, chi2, o.tail_fraction, decay_model(o.model));
      const double gap = std::abs(fit.rate - rate) / rate;
      max_gap = std::max(max_gap, gap);
      rows.push_back({{"w", w},
                      {"lambda", lambda},
                      {"friction", kind},
                      {"closed_form_rate", rate},
                      {"fitted_rate", fit.rate},
                      {"relative_gap", gap},
                      {"fit_window", {fit.t_first, fit.t_last}},
                      {"fit_samples", fit.samples},
                      {"fit_power", fit.power}});
    }
  }
  report["model"] = o.model;
  report["rates"] = rows;
  report["max_relative_gap"] = max_gap;

  if (!o.diagonal_v.empty()) {
    const Vector v = Eigen::Map<const Vector>(o.diagonal_v.data(), static_cast<Eigen::Index>(o.diagonal_v.size()));
    auto dom = out.open("dominance.csv");
    dom << "# " << csv_comment(config) << '\n';
    write_row(dom, {"friction", "lambda", "rate"});
    const double hs = diagonal_system_rate(v, FrictionSpec::hessian_sqrt(2.0));
    write_row(dom, {"hessian_sqrt", "", num(hs)});
    Json table = Json::array();
    bool maximal = true;
    for (const double lambda : o.lambda) {
      const double r = diagonal_system_rate(v, FrictionSpec::constant_scalar(lambda));
      write_row(dom, {"constant_scalar", num(lambda), num(r)});
      table.push_back({{"lambda", lambda}, {"rate", r}});
      maximal = maximal && r <= hs + 1e-12;
    }
    report["dominance"] = {{"v", o.diagonal_v},
                           {"hessian_sqrt_rate", hs},
                           {"constant_scalar", table},
                           {"hessian_sqrt_maximal", maximal}};
  }
  out.json("oracle_ou_summary.json", report);
  outcome.report = std::move(report);
  outcome.files = out.files();
  return outcome;
}

RunOutcome cmd_simulate(const ExperimentConfig& config) {
  const SimulationConfig& s = *config.simulation;
  const PotentialPtr pot = config.potential->build();
  const FrictionSpec spec = config.friction->build();
  Output out(config);
  RunOutcome outcome;

  SimConfig sim;
  sim.dt = s.dt;
  sim.n_steps = s.n_steps;
  sim.n_particles = s.n_particles;
  sim.seed = *s.seed;
  sim.form = dynamics_form_from_string(s.form);
  sim.alpha = s.alpha;
  sim.noise_refinement = s.noise_refinement;
  sim.workers = s.workers;

  const GaussianMoments init = s.initial.build();
  const GaussianMoments pi = reference_moments(*pot, noise_scale(sim.form, sim.alpha));
  Ensemble ensemble = Ensemble::from_gaussian(init, s.n_particles, sim.seed);
  const Simulator simulator(pot, spec, sim);
  const SimulationResult result = simulator.run(ensemble, s.record_every, &pi);
  outcome.warnings = result.warnings;

  Json report = report_header(config);
  report["warnings"] = result.warnings;
  report["reference"] = {{"kind", pot->constant_hessian() ? "exact" : "moment_matched_quadrature"},
                         {"mean", vector_json(pi.mean)},
                         {"cov", matrix_json(pi.cov)}};
  if (!pot->constant_hessian()) {
    report["chi2_proxy_note"] =
        "chi2_proxy compares moment-matched Gaussians of the ensemble and of pi; it is a proxy for non-Gaussian densities";
  }
  const MomentSummary& last = result.trajectory.back();
  report["final"] = {{"time", last.time},
                     {"step", last.step},
                     {"mean", vector_json(last.mean)},
                     {"cov", matrix_json(last.cov)},
                     {"chi2_proxy", last.chi2_proxy}};

  if (pot->constant_hessian()) {
    const LinearDynamics dyn = LinearDynamics::from_problem(*pot, spec, sim.form, sim.alpha);
    const double n = static_cast<double>(s.n_particles);
    Json points = Json::array();
    double worst_z = 0.0, worst_rel = 0.0;
    for (const auto& m : result.trajectory) {
      const GaussianMoments exact = propagate(dyn, init, m.time);
      double z = 0.0, rel = 0.0;
      for (Eigen::Index i = 0; i < m.mean.size(); ++i) {
        const double se = std::sqrt(exact.cov(i, i) / n);
        if (se > 0.0) z = std::max(z, std::abs(m.mean(i) - exact.mean(i)) / se);
        for (Eigen::Index j = 0; j < m.mean.size(); ++j) {
          const double scale = std::sqrt(exact.cov(i, i) * exact.cov(j, j));
          if (scale > 0.0 && std::abs(exact.cov(i, j)) > 1e-3 * scale) {
            rel = std::max(rel, std::abs(m.cov(i, j) - exact.cov(i, j)) / std::abs(exact.cov(i, j)));
          }
        }
      }
      points.push_back({{"time", m.time},
                        {"exact_mean", vector_json(exact.mean)},
                        {"exact_cov", matrix_json(exact.cov)},
                        {"max_mean_z", z},
                        {"max_cov_relative_error", rel}});
      worst_z = z;
      worst_rel = rel;
    }
    report["oracle"] = {{"points", points},
                        {"final_max_mean_z", worst_z},
                        {"final_max_cov_relative_error", worst_rel},
                        {"cov_note", "entries with |cov_ij| <= 1e-3 sqrt(cov_ii cov_jj) are skipped"}};
  }

  auto csv = out.open("trajectory.csv");
  write_trajectory_csv(csv, result.trajectory, csv_comment(config));
  csv.close();
  out.json("simulate_report.json", report);
  outcome.report = std::move(report);
  outcome.files = out.files();
  return outcome;
}

RunOutcome cmd_certify(const ExperimentConfig& config) {
  const CertifiedProblem p = certify_problem(config);
  Output out(config);
  RunOutcome outcome;

  Json report = report_header(config);
  report["constants"] = constants_json(p.constants);
  report["rescaled_constants"] = constants_json(p.rescaled.constants);
  report["rate_multiplier"] = p.rescaled.rate_multiplier;
  report["certificate"] = certificate_json(p.cert);
  report["optimizer"] = {{"best_index", p.optimizer.best_index},
                         {"best_s", p.optimizer.table[p.optimizer.best_index].s},
                         {"best_x0", p.optimizer.table[p.optimizer.best_index].x0},
                         {"entries", p.optimizer.table.size()}};
  report["comparison"] = comparison_summary(p.comparison);

  auto table = out.open("optimizer.csv");
  table << "# " << csv_comment(config) << '\n';
  write_row(table, {"s", "x0", "a", "b", "c", "m1", "m2", "m1_ceiling", "rescaled_rate", "original_rate", "valid"});
  for (const auto& e : p.optimizer.table) {
    const auto& c = e.cert;
    write_row(table, {num(e.s), num(e.x0), num(c.coeffs.a), num(c.coeffs.b), num(c.coeffs.c), num(c.m1), num(c.m2),
                      num(m1_ceiling(e.s)), num(c.rescaled_rate), num(p.rescaled.rate_multiplier * c.rescaled_rate),
                      flag(c.valid)});
  }
  table.close();

  auto cmp = out.open("comparison.csv");
  cmp << "# " << csv_comment(config) << '\n';
  write_row(cmp, {"lambda", "baseline", "certified_rate", "margin", "dominates"});
  for (const auto& r : p.comparison.rows) {
    write_row(cmp, {num(r.lambda), num(r.baseline), num(p.comparison.certified_rate), num(r.margin), flag(r.dominates)});
  }
  cmp.close();

  out.json("certificate.json", report);
  if (!p.cert.valid) outcome.warnings.push_back("certificate is not valid; comparison marked inapplicable");
  outcome.report = std::move(report);
  outcome.files = out.files();
  return outcome;
}

RunOutcome cmd_compare(const ExperimentConfig& config) {
  const CertifiedProblem p = certify_problem(config);
  Output out(config);
  RunOutcome outcome;

  const double bound = std::sqrt(p.constants.alpha) / 2.0;
  Json report = report_header(config);
  report["constants"] = constants_json(p.constants);
  report["certified_rate"] = p.cert.original_rate;
  report["certificate_valid"] = p.cert.valid;
  report["comparison"] = comparison_summary(p.comparison);
  report["baseline_bound"] = bound;

  auto cmp = out.open("comparison.csv");
  cmp << "# " << csv_comment(config) << '\n';
  write_row(cmp, {"lambda", "lambda_dms_sup", "baseline", "baseline_bound", "below_bound", "certified_rate", "margin",
                  "dominates"});
  Json rows = Json::array();
  bool all_below = true;
  for (const auto& r : p.comparison.rows) {
    const bool below = r.baseline < bound;
    all_below = all_below && below;
    write_row(cmp, {num(r.lambda), num(r.baseline / 2.0), num(r.baseline), num(bound), flag(below),
                    num(p.comparison.certified_rate), num(r.margin), flag(r.dominates)});
    rows.push_back({{"lambda", r.lambda},
                    {"baseline", r.baseline},
                    {"below_bound", below},
                    {"margin", r.margin},
                    {"dominates", r.dominates}});
  }
  cmp.close();
  report["rows"] = rows;
  report["all_below_bound"] = all_below;
  out.json("comparison.json", report);
  if (!p.cert.valid) outcome.warnings.push_back("certificate is not valid; comparison marked inapplicable");
  outcome.report = std::move(report);
  outcome.files = out.files();
  return outcome;
}

RunOutcome cmd_audit(const ExperimentConfig& config) {
  const AuditConfig& a = *config.audit;
  const PotentialPtr pot = config.potential->build();
  if (!pot->constant_hessian()) {
    throw Error(ErrorCode::UnsupportedPotential, "audit needs a quadratic potential (the functional is evaluated in closed form)");
  }
  const FrictionSpec spec = config.friction->build();
  if (spec.kind() != FrictionKind::HessianSqrt) {
    throw Error(ErrorCode::InvalidConfig, "friction.kind: audit certificates need hessian_sqrt friction");
  }
  if (a.coefficients == "witness" && spec.s() != 2.0) {
    throw Error(ErrorCode::InvalidConfig, "friction.s: the witness construction needs s = 2");
  }
  const AssumptionConstants k = pot->constants();
  const LinearDynamics dyn = LinearDynamics::from_problem(*pot, spec);
  const Matrix gamma_rescaled = dyn.friction() / std::sqrt(k.alpha);
  const GaussianMoments init = a.initial.build();
  const std::vector<double> times = linspace(0.0, a.t_max, a.n_times);

  Output out(config);
  RunOutcome outcome;
  auto csv = out.open("audit.csv");
  csv << "# " << csv_comment(config) << '\n';
  write_row(csv, {"audit", "t", "chi2", "cross", "total", "divergent", "bound", "derivative", "within_bound",
                  "derivative_ok"});

  Json audits = Json::array();
  bool all_passed = true;
  auto record = [&](const std::string& label, const LyapunovCoefficients& coeffs, double rate, Json extra) {
    const WeightMatrixS s = build_s_original(coeffs, gamma_rescaled, k.alpha);
    const AuditReport r = decay_audit(dyn, init, s, rate, times, a.tolerance);
    for (const auto& pt : r.points) {
      write_row(csv, {label, num(pt.t), num(pt.value.chi2), num(pt.value.cross), num(pt.value.total),
                      flag(pt.value.divergent), num(pt.bound), num(pt.derivative), flag(pt.within_bound),
                      flag(pt.derivative_ok)});
    }
    Json j = {{"label", label},
              {"rate", rate},
              {"coefficients", coeffs_json(coeffs)},
              {"passed", r.passed()},
              {"monotone", r.monotone},
              {"bound_holds", r.bound_holds},
              {"derivative_holds", r.derivative_holds},
              {"max_bound_ratio", r.max_bound_ratio},
              {"first_finite_index", r.first_finite}};
    j.update(extra);
    audits.push_back(j);
    all_passed = all_passed && r.passed();
  };

  if (a.coefficients == "family") {
    const LyapunovCoefficients coeffs = coefficient_family(rescale_rate(k).constants, spec.s(), a.x0);
    const RateCertificate cert = certify_rescaled(k, coeffs);
    if (!cert.valid) throw Error(ErrorCode::InvalidConfig, "audit.x0: the certificate is not valid");
    record("family", coeffs, cert.original_rate, {{"certificate", certificate_json(cert)}});
  } else {
    const SpectralDecomposition eig = symmetric_eigen(dyn.a());
    const Vector v = eig.eigenvalues.cwiseSqrt();
    for (const double eps : a.eps_rate) {
      const DiagonalWitness w = diag_quadratic_certificate(v, eps);
      record("witness_eps_" + num(eps), w.coeffs, w.original_rate,
             {{"eps_rate", eps},
              {"rescaled_rate", w.rescaled_rate},
              {"witness", {{"a", w.a}, {"x", w.x}, {"y", w.y}, {"k", w.k}, {"min_margin", w.min_margin}}}});
    }
  }
  csv.close();

  Json report = report_header(config);
  report["constants"] = constants_json(k);
  report["audits"] = audits;
  report["all_passed"] = all_passed;
  out.json("audit.json", report);
  outcome.report = std::move(report);
  outcome.files = out.files();
  return outcome;
}

RunOutcome run_experiment(const ExperimentConfig& config) {
  fs::create_directories(config.output_dir);
  {
    std::ofstream echo(fs::path(config.output_dir) / "config.resolved.json", std::ios::binary);
    echo << to_json(config).dump(2) << '\n';
  }
  RunOutcome outcome;
  switch (config.kind) {
    case ExperimentKind::OracleOu: outcome = cmd_oracle_ou(config); break;
    case ExperimentKind::Simulate: outcome = cmd_simulate(config); break;
    case ExperimentKind::Certify: outcome = cmd_certify(config); break;
    case ExperimentKind::Compare: outcome = cmd_compare(config); break;
    case ExperimentKind::Audit: outcome = cmd_audit(config); break;
  }
  outcome.files.insert(outcome.files.begin(), fs::path(config.output_dir) / "config.resolved.json");
  return outcome;
}

void write_error_report(const ExperimentConfig& config, const std::exception& error) {
  Json j = report_header(config);
  Json e = {{"message", error.what()}};
  if (const auto* err = dynamic_cast<const Error*>(&error)) e["code"] = std::string(kinlangevin::to_string(err->code()));
  if (const auto* blow = dynamic_cast<const NumericalBlowup*>(&error)) {
    e["step"] = blow->step();
    e["particle"] = blow->particle();
  }
  j["error"] = e;
  fs::create_directories(config.output_dir);
  std::ofstream out(fs::path(config.output_dir) / "error.json", std::ios::binary);
  out << j.dump(2) << '\n';
}

}  // namespace kinlangevin::harness
