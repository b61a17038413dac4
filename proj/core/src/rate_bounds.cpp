#include "kinlangevin/rate_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kinlangevin/error.hpp"
#include "kinlangevin/format.hpp"

namespace kinlangevin {

namespace {

void require_positive_x(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, std::string(what) + ": x must be > 0");
}

void require_nondegenerate(const LyapunovCoefficients& c) {
  if (!(c.s > 0.0)) throw Error(ErrorCode::InvalidCoefficients, "s must be positive");
  if (!(c.determinant() > 0.0)) {
    throw Error(ErrorCode::DegenerateS, "b c - a^2 = " + format_double(c.determinant()) + " is not positive");
  }
}

double golden_max(const auto& fn, double lo, double hi, int iters) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = fn(c);
  double fd = fn(d);
  for (int i = 0; i < iters && hi - lo > 1e-15; ++i) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = fn(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = fn(d);
    }
  }
  return std::max(fc, fd);
}

}  // namespace

LConstants l_constants(const AssumptionConstants& k, const LyapunovCoefficients& c) {
  require_nondegenerate(c);
  const double d = k.dim;
  const double det = c.determinant();
  const double s = c.s;
  const double weight = c.b * d * k.alpha + c.c * d * s * s * k.beta;
  LConstants out;
  out.l1 = weight / (4.0 * det * k.alpha) *
           (8.0 * c.b * c.b * std::pow(s, -5) / k.alpha + c.a * c.a * std::pow(s, -3) / k.alpha);
  out.l2 = 0.25 * c.b * d / (s * k.alpha) + weight / (2.0 * det) * c.a * c.a * std::pow(s, -3) / (k.alpha * k.alpha);
  return out;
}

double f_of(double x, const AssumptionConstants& k, const LyapunovCoefficients& c) {
  require_positive_x(x, "f_of");
  require_nondegenerate(c);
  const double ia = 1.0 / k.alpha;
  const double kk = ia + c.c - c.a / (c.s * c.s);
  const double x2 = x * x;
  return 2.0 * c.a * x * kk / ((ia + c.b * x2) * kk + (ia + c.c) * c.a * x2);
}

double g_of(double x, const AssumptionConstants& k, const LyapunovCoefficients& c, const LConstants& l) {
  require_positive_x(x, "g_of");
  require_nondegenerate(c);
  const double ia = 1.0 / k.alpha;
  const double x2 = x * x;
  const double den = (ia + c.b * x2) * (ia + c.c) - c.a * c.a * x2;
  if (!(den > 0.0)) throw Error(ErrorCode::NonPositiveDenominator, "g_of: denominator " + format_double(den));
  return 2.0 * ((ia + c.c) * l.l1 + (ia + c.b * x2) * l.l2) / den;
}

double g_of(double x, const AssumptionConstants& k, const LyapunovCoefficients& c) {
  return g_of(x, k, c, l_constants(k, c));
}

void check_coefficients(const AssumptionConstants& k, const LyapunovCoefficients& c) {
  if (!(c.s > 0.0) || !(c.a > 0.0) || !(c.b > 0.0) || !(c.c > 0.0)) {
    throw Error(ErrorCode::InvalidCoefficients, "s, a, b, c must be positive");
  }
  require_nondegenerate(c);
  const double residual = c.a + c.c - c.b / (c.s * c.s);
  if (!(std::abs(residual) <= 1e-12 * c.b)) {
    throw Error(ErrorCode::InvalidCoefficients, "a + c - b s^-2 = " + format_double(residual) + " is not zero");
  }
  const double strict = 1.0 / k.alpha + c.c - c.a / (c.s * c.s);
  if (!(strict > 0.0)) {
    throw Error(ErrorCode::InvalidCoefficients, "alpha^-1 + c - a s^-2 = " + format_double(strict) + " is not positive");
  }
}

RateCertificate certificate(const AssumptionConstants& k, const LyapunovCoefficients& c) {
  check_coefficients(k, c);
  RateCertificate cert;
  cert.constants = k;
  cert.coeffs = c;
  const LConstants l = l_constants(k, c);
  cert.l1 = l.l1;
  cert.l2 = l.l2;
  cert.x_low = std::sqrt(k.alpha / k.beta) / c.s;
  cert.x_high = 1.0 / c.s;
  cert.m1 = std::min(f_of(cert.x_low, k, c), f_of(cert.x_high, k, c));
  cert.m2 = std::max(g_of(cert.x_low, k, c, l), g_of(cert.x_high, k, c, l));
  cert.rescaled_rate = cert.m1 - k.gamma * k.gamma * cert.m2;
  cert.time_multiplier = std::sqrt(k.alpha);
  cert.original_rate = cert.time_multiplier * cert.rescaled_rate;
  cert.gamma_threshold = std::sqrt(cert.m1 / cert.m2);
  cert.valid = cert.rescaled_rate > 0.0;
  return cert;
}

LyapunovCoefficients cor17_coefficients(const AssumptionConstants& k, double x0) {
  if (!(x0 > 1.0 / std::sqrt(2.0)) || !std::isfinite(x0)) {
    throw Error(ErrorCode::InvalidArgument, "cor17_coefficients: x0 must exceed 1/sqrt(2)");
  }
  const double ia = 1.0 / k.alpha;
  return {2.0, ia * (2.0 * x0 + 2.0), ia * (12.0 * x0 + 8.0), ia * x0};
}

LyapunovCoefficients coefficient_family(const AssumptionConstants& k, double s, double x0) {
  if (!(s > 0.0) || !(x0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "coefficient_family: s, x0 > 0");
  if (s == 2.0) return cor17_coefficients(k, x0);
  const double ia = 1.0 / k.alpha;
  const double a1 = 0.5 * s * s * (1.0 + x0);
  const double b1 = (a1 + x0) * s * s;
  return {s, ia * a1, ia * b1, ia * x0};
}

double m1_ceiling(double s) { return 2.0 / s / (4.0 / (s * s) + 1.0); }

OptimizerResult optimize_m1(const AssumptionConstants& k, const std::vector<double>& s_grid,
                            const std::vector<double>& x0_grid) {
  if (s_grid.empty() || x0_grid.empty()) throw Error(ErrorCode::InvalidArgument, "optimize_m1: empty grid");
  OptimizerResult out;
  double best = -std::numeric_limits<double>::infinity();
  for (const double s : s_grid) {
    for (const double x0 : x0_grid) {
      OptimizerEntry e{s, x0, certificate(k, coefficient_family(k, s, x0))};
      if (e.cert.m1 > best) {
        best = e.cert.m1;
        out.best = e.cert;
        out.best_index = out.table.size();
      }
      out.table.push_back(std::move(e));
    }
  }
  return out;
}

double lambda_dms(double lambda, double alpha, double eps) {
  const double r2 = std::sqrt(2.0);
  const double t1 = eps * (r2 + 0.5 * lambda);
  const double t2 = lambda - (2.0 * alpha + 1.0) / (alpha + 1.0) * eps;
  return (lambda - eps / (1.0 + alpha) - std::sqrt(t1 * t1 + t2 * t2)) / (2.0 * (1.0 + std::abs(eps)));
}

double lambda_dms_sup(double lambda, double alpha, int grid_size, int refine_iters) {
  if (grid_size < 64) throw Error(ErrorCode::InvalidArgument, "lambda_dms_sup: grid_size must be >= 64");
  if (!(lambda > 0.0) || !(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda_dms_sup: lambda, alpha > 0");
  const auto fn = [&](double eps) { return lambda_dms(lambda, alpha, eps); };
  int best = 0;
  double best_val = 0.0;  // eps = 0
  for (int k = 1; k < grid_size; ++k) {
    const double v = fn(static_cast<double>(k) / grid_size);
    if (v > best_val) {
      best_val = v;
      best = k;
    }
  }
  if (best == 0) return 0.0;
  const double lo = static_cast<double>(best - 1) / grid_size;
  const double hi = std::min(static_cast<double>(best + 1) / grid_size, std::nextafter(1.0, 0.0));
  return std::max(best_val, golden_max(fn, lo, hi, refine_iters));
}

ComparisonReport compare_to_constant_friction(const AssumptionConstants& k, const RateCertificate& cert,
                                              const std::vector<double>& lambda_grid) {
  ComparisonReport r;
  r.applicable = cert.valid;
  r.certified_rate = cert.original_rate;
  r.ratio = k.beta * k.beta * k.gamma * k.gamma * k.dim / (k.alpha * k.alpha * k.alpha);
  r.min_margin = std::numeric_limits<double>::infinity();
  r.all_dominate = r.applicable;
  for (const double lambda : lambda_grid) {
    ComparisonRow row;
    row.lambda = lambda;
    row.baseline = 2.0 * lambda_dms_sup(lambda, k.alpha);
    row.margin = cert.original_rate - row.baseline;
    row.dominates = r.applicable && row.margin > 0.0;
    r.all_dominate = r.all_dominate && row.dominates;
    r.min_margin = std::min(r.min_margin, row.margin);
    r.rows.push_back(row);
  }
  if (lambda_grid.empty()) r.all_dominate = false;
  return r;
}

RescaledConstants rescale_rate(const AssumptionConstants& o) {
  const double root = std::sqrt(o.alpha);
  RescaledConstants r;
  r.constants = AssumptionConstants::make(1.0, o.beta / o.alpha, o.gamma / root, o.dim, o.source);
  r.constants.box = o.box;
  r.constants.n_samples = o.n_samples;
  r.rate_multiplier = root;
  return r;
}

AssumptionConstants unrescale(const RescaledConstants& r) {
  const double alpha = r.rate_multiplier * r.rate_multiplier;
  AssumptionConstants o = AssumptionConstants::make(alpha, r.constants.beta * alpha,
                                                    r.constants.gamma * r.rate_multiplier, r.constants.dim,
                                                    r.constants.source);
  o.box = r.constants.box;
  o.n_samples = r.constants.n_samples;
  return o;
}

RateCertificate certify_rescaled(const AssumptionConstants& original, const LyapunovCoefficients& coeffs) {
  const RescaledConstants r = rescale_rate(original);
  RateCertificate cert = certificate(r.constants, coeffs);
  cert.time_multiplier = r.rate_multiplier;
  cert.original_rate = cert.time_multiplier * cert.rescaled_rate;
  return cert;
}

WitnessTerms witness_terms(double v, double a, double x, double y, double k) {
  // Rescaled setting: alpha = 1.
  const double m = 1.0 - k;
  WitnessTerms t;
  t.g1 = (1.0 / v - m / (v * v)) * a - m * (x / (v * v) + 2.0);
  t.g2 = (1.0 - m / v) * a - 0.5 * (x + y);
  t.g3 = (v - m) * a - (2.0 * v - m) * (y - 2.0);
  return t;
}

DiagonalWitness diag_quadratic_certificate(const Vector& v, double eps_rate, double a_cap) {
  if (v.size() == 0 || !(v.array() > 0.0).all()) {
    throw Error(ErrorCode::NonPositiveFrequency, "diag_quadratic_certificate: v must be positive");
  }
  if (!(eps_rate > 0.0 && eps_rate < 2.0)) {
    throw Error(ErrorCode::InvalidArgument, "diag_quadratic_certificate: eps_rate must be in (0, 2)");
  }
  const double vmin = v.minCoeff();
  const Vector scaled = v / vmin;
  const double k = 0.5 * eps_rate;

  std::vector<std::pair<double, double>> xy = {{1.0, 0.5}};
  for (int j = 0; j <= 40; ++j) {
    const double x = std::ldexp(1.0, j);
    for (const double frac : {0.5, 0.25, 0.75, 0.1}) xy.emplace_back(x, frac * x);
  }

  for (const auto& [x, y] : xy) {
    for (double a = 1.0; a <= a_cap; a *= 2.0) {
      if (!(a > y) || !((x - y) * a - x * y > 0.0)) continue;
      double margin = std::numeric_limits<double>::infinity();
      bool ok = true;
      for (Eigen::Index i = 0; i < scaled.size() && ok; ++i) {
        const WitnessTerms t = witness_terms(scaled(i), a, x, y, k);
        ok = t.holds();
        margin = std::min({margin, t.g1, t.g3, t.g1 * t.g3 - t.g2 * t.g2});
      }
      if (!ok) continue;
      DiagonalWitness w;
      w.a = a;
      w.x = x;
      w.y = y;
      w.k = k;
      w.coeffs = {2.0, a, 2.0 * (a + x), 0.5 * (a - y)};
      w.frequencies = scaled;
      w.rescaled_rate = 2.0 - eps_rate;
      w.original_rate = vmin * w.rescaled_rate;
      w.min_margin = margin;
      return w;
    }
  }
  throw Error(ErrorCode::WitnessNotFound, "no (a, x, y) with a <= " + format_double(a_cap) + " for eps_rate " +
                                              format_double(eps_rate));
}

}  // namespace kinlangevin
