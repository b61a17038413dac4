#include "kinlangevin/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "kinlangevin/error.hpp"

namespace kinlangevin::harness {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw Error(ErrorCode::InvalidConfig, field + ": " + message);
}

// Typed access to one JSON object with the dotted path kept for messages.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "config" : path_, "expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [k, _] : j_.items()) {
      if (!known.count(k)) fail(field(k), "unknown key");
    }
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  Section sub(const char* key) const {
    if (!has(key)) fail(field(key), "is required");
    return {j_.at(key), field(key)};
  }

  double number(const char* key, std::optional<double> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(field(key), "is required");
    }
    const Json& v = j_.at(key);
    if (!v.is_number()) fail(field(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(field(key), "must be finite");
    return x;
  }

  std::int64_t integer(const char* key, std::optional<std::int64_t> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(field(key), "is required");
    }
    const Json& v = j_.at(key);
    if (!v.is_number_integer()) fail(field(key), "expected an integer");
    return v.get<std::int64_t>();
  }

  std::optional<std::uint64_t> seed(const char* key) const {
    if (!has(key)) return std::nullopt;
    const Json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail(field(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string text(const char* key, std::optional<std::string> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(field(key), "is required");
    }
    if (!j_.at(key).is_string()) fail(field(key), "expected a string");
    return j_.at(key).get<std::string>();
  }

  /// A list of numbers, or {"linspace": [start, stop, num]}.
  std::vector<double> numbers(const char* key, std::optional<std::vector<double>> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(field(key), "is required");
    }
    const Json& v = j_.at(key);
    if (v.is_object()) {
      const Section s(v, field(key));
      s.allow({"linspace"});
      const Json& l = s.j_.at("linspace");
      if (!l.is_array() || l.size() != 3 || !l[0].is_number() || !l[1].is_number() || !l[2].is_number_integer() ||
          l[2].get<std::int64_t>() < 2) {
        fail(field(key) + ".linspace", "expected [start, stop, num] with num >= 2");
      }
      const double a = l[0].get<double>();
      const double b = l[1].get<double>();
      const auto n = l[2].get<std::int64_t>();
      std::vector<double> out(static_cast<std::size_t>(n));
      for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
      return out;
    }
    if (!v.is_array()) fail(field(key), "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
        fail(field(key) + "[" + std::to_string(i) + "]", "expected a finite number");
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::vector<std::vector<double>> matrix(const char* key) const {
    if (!has(key)) fail(field(key), "is required");
    const Json& v = j_.at(key);
    if (!v.is_array() || v.empty()) fail(field(key), "expected a non-empty list of rows");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string row = field(key) + "[" + std::to_string(i) + "]";
      if (!v[i].is_array() || v[i].size() != v.size()) fail(row, "expected a row of length " + std::to_string(v.size()));
      std::vector<double> r;
      for (const auto& x : v[i]) {
        if (!x.is_number()) fail(row, "expected numbers");
        r.push_back(x.get<double>());
      }
      out.push_back(std::move(r));
    }
    return out;
  }

 private:
  const Json& j_;
  std::string path_;
};

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

Vector to_vector(const std::vector<double>& xs) {
  return Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

void require_positive(const std::vector<double>& xs, const std::string& field) {
  if (xs.empty()) fail(field, "must not be empty");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0)) fail(field + "[" + std::to_string(i) + "]", "must be > 0");
  }
}

// Re-raise library validation errors against the config field that caused them.
template <typename Fn>
auto in_field(const std::string& field, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw;
    fail(field, e.what());
  }
}

PotentialConfig parse_potential(const Section& s) {
  s.allow({"family", "v", "a", "eps", "perturbation"});
  PotentialConfig p;
  p.family = s.text("family");
  if (p.family == "quadratic_diagonal" || p.family == "perturbed_diagonal") {
    p.v = s.numbers("v");
    require_positive(p.v, s.field("v"));
    if (p.family == "perturbed_diagonal") {
      p.eps = s.number("eps");
      p.perturbation = s.text("perturbation", "log_cosh");
      if (p.perturbation != "log_cosh") fail(s.field("perturbation"), "only log_cosh is available");
    }
  } else if (p.family == "quadratic_general") {
    p.a = s.matrix("a");
  } else {
    fail(s.field("family"), "unknown family '" + p.family + "'");
  }
  in_field(s.field("family"), [&] { return p.build(); });
  return p;
}

ConstantsConfig parse_constants(const Section& s) {
  s.allow({"source", "alpha", "beta", "gamma", "lo", "hi", "n_samples", "seed"});
  ConstantsConfig c;
  c.source = s.text("source", "closed_form");
  if (c.source == "user_supplied") {
    c.alpha = s.number("alpha");
    c.beta = s.number("beta");
    c.gamma = s.number("gamma");
    in_field(s.field("alpha"), [&] { return AssumptionConstants::make(c.alpha, c.beta, c.gamma, 1); });
  } else if (c.source == "estimated") {
    c.lo = s.numbers("lo");
    c.hi = s.numbers("hi");
    c.n_samples = s.integer("n_samples", 4096);
    c.seed = s.seed("seed");
    if (!c.seed) fail(s.field("seed"), "is required for estimated constants");
    if (c.n_samples < 1) fail(s.field("n_samples"), "must be >= 1");
  } else if (c.source != "closed_form") {
    fail(s.field("source"), "expected closed_form, estimated or user_supplied");
  }
  return c;
}

FrictionConfig parse_friction(const Section& s) {
  s.allow({"kind", "lambda", "matrix", "s"});
  FrictionConfig f;
  f.kind = s.text("kind");
  if (f.kind == "constant_scalar") {
    f.lambda = s.number("lambda");
  } else if (f.kind == "constant_matrix") {
    f.matrix = s.matrix("matrix");
  } else if (f.kind == "hessian_sqrt") {
    f.s = s.number("s", 2.0);
  } else {
    fail(s.field("kind"), "unknown friction kind '" + f.kind + "'");
  }
  in_field(s.field("kind"), [&] { return f.build(); });
  return f;
}

InitialConfig parse_initial(const Section& s) {
  s.allow({"mean", "cov"});
  InitialConfig init;
  init.mean = s.numbers("mean");
  init.cov = s.matrix("cov");
  if (init.cov.size() != init.mean.size()) fail(s.field("cov"), "size must match mean");
  in_field(s.field("cov"), [&] { return init.build(); });
  return init;
}

SimulationConfig parse_simulation(const Section& s) {
  s.allow({"dt", "n_steps", "n_particles", "seed", "form", "alpha", "record_every", "noise_refinement", "workers",
           "initial"});
  SimulationConfig c;
  c.dt = s.number("dt");
  c.n_steps = s.integer("n_steps");
  c.n_particles = s.integer("n_particles");
  c.seed = s.seed("seed");
  c.form = s.text("form", "original");
  c.alpha = s.number("alpha", 1.0);
  c.record_every = s.integer("record_every", std::max<std::int64_t>(1, c.n_steps));
  c.noise_refinement = static_cast<int>(s.integer("noise_refinement", 1));
  c.workers = static_cast<int>(s.integer("workers", 1));
  c.initial = parse_initial(s.sub("initial"));
  if (!(c.dt > 0.0)) fail(s.field("dt"), "must be > 0");
  if (c.n_steps < 0) fail(s.field("n_steps"), "must be >= 0");
  if (c.n_particles < 2) fail(s.field("n_particles"), "must be >= 2");
  if (c.record_every < 1) fail(s.field("record_every"), "must be >= 1");
  if (c.noise_refinement < 1) fail(s.field("noise_refinement"), "must be >= 1");
  if (c.workers < 1) fail(s.field("workers"), "must be >= 1");
  if (c.form != "original" && c.form != "rescaled") fail(s.field("form"), "expected original or rescaled");
  if (!(c.alpha > 0.0)) fail(s.field("alpha"), "must be > 0");
  if (c.initial.mean.size() % 2 != 0) fail(s.field("initial.mean"), "must have even length 2d");
  return c;
}

OracleOuConfig parse_oracle_ou(const Section& s) {
  s.allow({"w", "lambda", "t_max_factor", "n_times", "tail_fraction", "model", "diagonal_v"});
  OracleOuConfig c;
  c.w = s.numbers("w", std::vector<double>{1.0});
  c.lambda = s.numbers("lambda");
  c.t_max_factor = s.number("t_max_factor", 20.0);
  c.n_times = static_cast<int>(s.integer("n_times", 401));
  c.tail_fraction = s.number("tail_fraction", 0.5);
  c.model = s.text("model", "exponential");
  c.diagonal_v = s.numbers("diagonal_v", std::vector<double>{});
  require_positive(c.w, s.field("w"));
  require_positive(c.lambda, s.field("lambda"));
  if (!c.diagonal_v.empty()) require_positive(c.diagonal_v, s.field("diagonal_v"));
  if (!(c.t_max_factor > 0.0)) fail(s.field("t_max_factor"), "must be > 0");
  if (c.n_times < 16) fail(s.field("n_times"), "must be >= 16");
  if (!(c.tail_fraction > 0.0 && c.tail_fraction <= 1.0)) fail(s.field("tail_fraction"), "must be in (0, 1]");
  if (c.model != "exponential" && c.model != "exponential_times_power") {
    fail(s.field("model"), "expected exponential or exponential_times_power");
  }
  return c;
}

CertificateConfig parse_certificate(const Section& s) {
  s.allow({"s_grid", "x0_grid", "lambda_grid"});
  CertificateConfig c;
  c.s_grid = s.numbers("s_grid", std::vector<double>{2.0});
  c.x0_grid = s.numbers("x0_grid", std::vector<double>{1000.0});
  c.lambda_grid = s.numbers("lambda_grid");
  require_positive(c.s_grid, s.field("s_grid"));
  require_positive(c.x0_grid, s.field("x0_grid"));
  require_positive(c.lambda_grid, s.field("lambda_grid"));
  for (std::size_t i = 0; i < c.s_grid.size(); ++i) {
    if (c.s_grid[i] == 2.0) {
      for (double x0 : c.x0_grid) {
        if (!(x0 > 1.0 / std::sqrt(2.0))) fail(s.field("x0_grid"), "entries must exceed 1/sqrt(2) when s = 2");
      }
    }
  }
  return c;
}

AuditConfig parse_audit(const Section& s) {
  s.allow({"coefficients", "x0", "eps_rate", "t_max", "n_times", "tolerance", "initial"});
  AuditConfig c;
  c.coefficients = s.text("coefficients", "family");
  c.x0 = s.number("x0", 1000.0);
  c.eps_rate = s.numbers("eps_rate", std::vector<double>{1.0, 0.5, 0.1});
  c.t_max = s.number("t_max", 10.0);
  c.n_times = static_cast<int>(s.integer("n_times", 200));
  c.tolerance = s.number("tolerance", 1e-6);
  c.initial = parse_initial(s.sub("initial"));
  if (c.coefficients != "family" && c.coefficients != "witness") {
    fail(s.field("coefficients"), "expected family or witness");
  }
  if (!(c.x0 > 0.0)) fail(s.field("x0"), "must be > 0");
  for (std::size_t i = 0; i < c.eps_rate.size(); ++i) {
    if (!(c.eps_rate[i] > 0.0 && c.eps_rate[i] < 2.0)) fail(s.field("eps_rate"), "entries must be in (0, 2)");
  }
  if (!(c.t_max > 0.0)) fail(s.field("t_max"), "must be > 0");
  if (c.n_times < 3) fail(s.field("n_times"), "must be >= 3");
  if (!(c.tolerance >= 0.0)) fail(s.field("tolerance"), "must be >= 0");
  return c;
}

Json matrix_json(const std::vector<std::vector<double>>& m) {
  Json out = Json::array();
  for (const auto& row : m) out.push_back(row);
  return out;
}

Json initial_json(const InitialConfig& c) { return {{"mean", c.mean}, {"cov", matrix_json(c.cov)}}; }

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::OracleOu: return "oracle-ou";
    case ExperimentKind::Simulate: return "simulate";
    case ExperimentKind::Certify: return "certify";
    case ExperimentKind::Compare: return "compare";
    case ExperimentKind::Audit: return "audit";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (auto k : {ExperimentKind::OracleOu, ExperimentKind::Simulate, ExperimentKind::Certify, ExperimentKind::Compare,
                 ExperimentKind::Audit}) {
    if (to_string(k) == name) return k;
  }
  fail("kind", "unknown experiment kind '" + name + "'");
}

PotentialPtr PotentialConfig::build() const {
  if (family == "quadratic_diagonal") return quadratic_diagonal(to_vector(v));
  if (family == "perturbed_diagonal") return perturbed_diagonal(to_vector(v), eps);
  if (family == "quadratic_general") return quadratic_general(to_matrix(a));
  fail("potential.family", "unknown family '" + family + "'");
}

AssumptionConstants ConstantsConfig::build(const Potential& potential) const {
  if (source == "user_supplied") {
    return AssumptionConstants::make(alpha, beta, gamma, potential.dim(), ConstantsSource::UserSupplied);
  }
  if (source == "estimated") {
    const auto expand = [&](const std::vector<double>& xs, const char* key) {
      if (xs.size() == 1) return Vector::Constant(potential.dim(), xs[0]).eval();
      if (static_cast<int>(xs.size()) != potential.dim()) fail(std::string("constants.") + key, "size must be 1 or d");
      return to_vector(xs);
    };
    return estimate_constants(potential, {expand(lo, "lo"), expand(hi, "hi")}, n_samples, seed.value_or(0));
  }
  return potential.constants();
}

FrictionSpec FrictionConfig::build() const {
  if (kind == "constant_scalar") return FrictionSpec::constant_scalar(lambda);
  if (kind == "constant_matrix") return FrictionSpec::constant_matrix(to_matrix(matrix));
  return FrictionSpec::hessian_sqrt(s);
}

GaussianMoments InitialConfig::build() const { return GaussianMoments::make(to_vector(mean), to_matrix(cov)); }

ExperimentConfig parse_config(const Json& raw, ExperimentKind kind, const Overrides& overrides) {
  const Section root(raw, "");
  root.allow({"format_version", "kind", "output_dir", "potential", "constants", "friction", "simulation", "oracle_ou",
              "certificate", "audit"});
  if (root.has("format_version") && root.integer("format_version") != kFormatVersion) {
    fail("format_version", "expected " + std::to_string(kFormatVersion));
  }
  if (root.has("kind") && experiment_kind_from_string(root.text("kind")) != kind) {
    fail("kind", "config is for '" + root.text("kind") + "', not '" + to_string(kind) + "'");
  }
  ExperimentConfig c;
  c.kind = kind;
  c.output_dir = overrides.output_dir.value_or(root.text("output_dir", "out/" + to_string(kind)));

  const bool needs_potential = kind != ExperimentKind::OracleOu;
  const bool needs_friction = kind == ExperimentKind::Simulate || kind == ExperimentKind::Audit;
  if (needs_potential) c.potential = parse_potential(root.sub("potential"));
  if (root.has("constants")) c.constants = parse_constants(root.sub("constants"));
  if (needs_friction) c.friction = parse_friction(root.sub("friction"));

  switch (kind) {
    case ExperimentKind::OracleOu:
      c.oracle_ou = parse_oracle_ou(root.sub("oracle_ou"));
      break;
    case ExperimentKind::Simulate: {
      c.simulation = parse_simulation(root.sub("simulation"));
      if (overrides.seed) c.simulation->seed = overrides.seed;
      if (overrides.workers) c.simulation->workers = *overrides.workers;
      if (!c.simulation->seed) fail("simulation.seed", "is required for stochastic runs (or pass --seed)");
      if (static_cast<int>(c.simulation->initial.mean.size()) != 2 * c.potential->build()->dim()) {
        fail("simulation.initial.mean", "must have length 2d for the potential's d");
      }
      if (c.simulation->workers < 1) fail("workers", "must be >= 1");
      break;
    }
    case ExperimentKind::Certify:
    case ExperimentKind::Compare:
      c.certificate = parse_certificate(root.sub("certificate"));
      break;
    case ExperimentKind::Audit:
      c.audit = parse_audit(root.sub("audit"));
      if (static_cast<int>(c.audit->initial.mean.size()) != 2 * c.potential->build()->dim()) {
        fail("audit.initial.mean", "must have length 2d for the potential's d");
      }
      break;
  }
  if (c.constants.source == "estimated" && overrides.seed) c.constants.seed = overrides.seed;
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentKind kind, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config file " + path.string());
  Json raw;
  try {
    raw = Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  return parse_config(raw, kind, overrides);
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = to_string(c.kind);
  j["output_dir"] = c.output_dir;
  if (c.potential) {
    Json p = {{"family", c.potential->family}};
    if (c.potential->family == "quadratic_general") {
      p["a"] = matrix_json(c.potential->a);
    } else {
      p["v"] = c.potential->v;
    }
    if (c.potential->family == "perturbed_diagonal") {
      p["eps"] = c.potential->eps;
      p["perturbation"] = c.potential->perturbation;
    }
    j["potential"] = p;
  }
  {
    Json k = {{"source", c.constants.source}};
    if (c.constants.source == "user_supplied") {
      k["alpha"] = c.constants.alpha;
      k["beta"] = c.constants.beta;
      k["gamma"] = c.constants.gamma;
    } else if (c.constants.source == "estimated") {
      k["lo"] = c.constants.lo;
      k["hi"] = c.constants.hi;
      k["n_samples"] = c.constants.n_samples;
      k["seed"] = c.constants.seed.value_or(0);
    }
    j["constants"] = k;
  }
  if (c.friction) {
    Json f = {{"kind", c.friction->kind}};
    if (c.friction->kind == "constant_scalar") f["lambda"] = c.friction->lambda;
    if (c.friction->kind == "constant_matrix") f["matrix"] = matrix_json(c.friction->matrix);
    if (c.friction->kind == "hessian_sqrt") f["s"] = c.friction->s;
    j["friction"] = f;
  }
  if (c.simulation) {
    const SimulationConfig& s = *c.simulation;
    j["simulation"] = {{"dt", s.dt},
                       {"n_steps", s.n_steps},
                       {"n_particles", s.n_particles},
                       {"seed", s.seed.value_or(0)},
                       {"form", s.form},
                       {"alpha", s.alpha},
                       {"record_every", s.record_every},
                       {"noise_refinement", s.noise_refinement},
                       {"workers", s.workers},
                       {"initial", initial_json(s.initial)}};
  }
  if (c.oracle_ou) {
    const OracleOuConfig& o = *c.oracle_ou;
    j["oracle_ou"] = {{"w", o.w},
                      {"lambda", o.lambda},
                      {"t_max_factor", o.t_max_factor},
                      {"n_times", o.n_times},
                      {"tail_fraction", o.tail_fraction},
                      {"model", o.model},
                      {"diagonal_v", o.diagonal_v}};
  }
  if (c.certificate) {
    j["certificate"] = {{"s_grid", c.certificate->s_grid},
                        {"x0_grid", c.certificate->x0_grid},
                        {"lambda_grid", c.certificate->lambda_grid}};
  }
  if (c.audit) {
    const AuditConfig& a = *c.audit;
    j["audit"] = {{"coefficients", a.coefficients}, {"x0", a.x0},
                  {"eps_rate", a.eps_rate},         {"t_max", a.t_max},
                  {"n_times", a.n_times},           {"tolerance", a.tolerance},
                  {"initial", initial_json(a.initial)}};
  }
  return j;
}

}  // namespace kinlangevin::harness
