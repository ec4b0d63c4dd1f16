#pragma once

// Monte Carlo experiment runner. An experiment is a grid of sample sizes and
// a replicate count; every (n, replicate) pair is an independent task seeded
// by hash64({master_seed, n, replicate}), so rows do not depend on the worker
// count, on execution order, or on which other grid points are present.
//
// Row layout per experiment (columns estimate, target, linear_term,
// remainder, aux1..aux4; "nan" where a column does not apply):
//
//   bahadur_rate           estimator on F_n*, its target, Bahadur linear term
//                          and remainder; aux = Med*, F_n*(v),
//                          F_n*(v+xi) - F_n*(v-xi)
//   bound_check            v*_{n,l} or xi*_{n,m,l} and its target;
//                          aux = exceedance flag, bound, |estimate - target|
//   joint_normality        Med*, v, median linear term, remainder;
//                          aux = MAD*, MAD linear term, sqrt(n)(Med* - v),
//                          sqrt(n)(MAD* - xi)
//   conditional_normality  Med*, Med_n (one fixed sample per n),
//                          (F_n(v) - F_n*(v)) / F'(v), remainder;
//                          aux = MAD*, MAD_n, sqrt(n)(Med* - Med_n),
//                          sqrt(n)(MAD* - MAD_n)
//   pwm_variance           PWM*, PWM(F), mean K(X_i*) - E_F K, remainder;
//                          aux = sqrt(n)(PWM* - PWM(F)), the linear term
//                          centred by the sample mean of K instead, PWM_n
//   ci_coverage            PWM_n, PWM(F); aux = percentile interval for PWM
//                          and t interval for the mean

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "json.hpp"
#include "madstrap/asymptotics.hpp"
#include "madstrap/bahadur.hpp"
#include "madstrap/bootstrap.hpp"
#include "madstrap/depth.hpp"
#include "madstrap/distributions.hpp"
#include "madstrap/errors.hpp"
#include "madstrap/estimators.hpp"
#include "madstrap/parallel.hpp"
#include "madstrap/rng.hpp"

namespace madstrap {

enum class ExperimentKind {
  bahadur_rate,
  bound_check,
  joint_normality,
  conditional_normality,
  pwm_variance,
  ci_coverage
};

inline std::string_view experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::bahadur_rate: return "bahadur_rate";
    case ExperimentKind::bound_check: return "bound_check";
    case ExperimentKind::joint_normality: return "joint_normality";
    case ExperimentKind::conditional_normality: return "conditional_normality";
    case ExperimentKind::pwm_variance: return "pwm_variance";
    case ExperimentKind::ci_coverage: return "ci_coverage";
  }
  return "?";
}

inline ExperimentKind parse_experiment(std::string_view s) {
  for (auto k : {ExperimentKind::bahadur_rate, ExperimentKind::bound_check, ExperimentKind::joint_normality,
                 ExperimentKind::conditional_normality, ExperimentKind::pwm_variance,
                 ExperimentKind::ci_coverage}) {
    if (experiment_name(k) == s) return k;
  }
  throw ConfigError("experiment.kind", "unknown experiment '" + std::string(s) + "'");
}

struct OutputSpec {
  std::string csv_path;      // empty: no CSV file
  std::string summary_path;  // empty: no summary file
  bool record_runtime = false;
};

struct RateThresholds {
  double slope_lo = -0.95;
  double slope_hi = -0.55;
  double weak_factor = 2.0;
  std::size_t min_points = 4;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::bahadur_rate;
  DistributionModel distribution = DistributionModel::normal(0.0, 1.0);
  std::vector<std::size_t> n_grid;
  std::size_t reps = 1;
  std::size_t bootstrap_B = 1000;
  std::uint64_t master_seed = 0;
  EstimatorKind estimator_kind = EstimatorKind::mad();
  WeightFunction weight = WeightFunction::default_weight();
  std::optional<double> epsilon;
  std::optional<std::size_t> k;  // modified-MAD order for the PWM experiments
  double ci_level = 0.95;
  double coverage_tol = 0.02;
  double pwm_variance_tol = 0.10;
  double conditional_diag_tol = 0.15;
  NormalityThresholds normality;
  RateThresholds rate;
  OutputSpec output;

  void validate() const {
    if (n_grid.empty()) throw ConfigError("n_grid", "must be nonempty");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
      if (n_grid[i] < 2) throw ConfigError("n_grid", "sample sizes must be at least 2");
      if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw ConfigError("n_grid", "must be strictly ascending");
    }
    if (reps < 1) throw ConfigError("reps", "must be at least 1");
    const std::size_t n_min = n_grid.front();
    try {
      detail::check_index_param("l", estimator_kind.l, n_min);
      detail::check_index_param("m", estimator_kind.m, n_min);
    } catch (const DomainError& e) {
      throw ConfigError(estimator_kind.l > n_min / 2 ? "l" : "m", e.what());
    }
    if (experiment == ExperimentKind::bound_check && !(epsilon && *epsilon > 0.0)) {
      throw ConfigError("epsilon", "bound_check needs epsilon > 0");
    }
    if (experiment == ExperimentKind::ci_coverage) {
      if (bootstrap_B < 500) throw ConfigError("bootstrap_B", "must be at least 500");
      if (!(ci_level > 0.0 && ci_level < 1.0)) throw ConfigError("ci_level", "must lie in (0, 1)");
      if (!(coverage_tol > 0.0 && coverage_tol < 1.0)) throw ConfigError("coverage_tol", "must lie in (0, 1)");
    }
    if (experiment == ExperimentKind::pwm_variance || experiment == ExperimentKind::ci_coverage) {
      try {
        detail::check_integrability(distribution, weight);
      } catch (const IntegrabilityError& e) {
        throw ConfigError("weight", e.what());
      }
      if (k && (*k < 1 || *k + 1 > n_min)) throw ConfigError("k", "must satisfy 1 <= k <= n - 1");
    }
  }
};

struct ReplicateRecord {
  static constexpr double nan = std::numeric_limits<double>::quiet_NaN();

  std::size_t n = 0;
  std::size_t replicate_index = 0;
  std::uint64_t seed_used = 0;
  double estimate = nan;
  double target = nan;
  double linear_term = nan;
  double remainder = nan;
  bool skipped = false;
  std::array<double, 4> aux{nan, nan, nan, nan};
  std::size_t inner_skipped = 0;  // degenerate bootstrap draws inside the replicate (ci_coverage)
};

struct ResultSet {
  ExperimentConfig config;
  std::vector<ReplicateRecord> rows;  // sorted by (n, replicate_index)
};

inline std::uint64_t replicate_seed(std::uint64_t master, std::size_t n, std::size_t rep) {
  return hash64({master, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep)});
}

// Seed of the fixed outer sample in conditional mode.
inline std::uint64_t outer_sample_seed(std::uint64_t master, std::size_t n) {
  return hash64({master, static_cast<std::uint64_t>(n)});
}

// Sample quantile, linear interpolation between order statistics (type 7).
inline double quantile_type7(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InsufficientData("quantile of an empty set");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

namespace detail {

struct Population {
  RobustParams params;
  std::optional<InfluenceKernel> kernel;
  double kernel_mean = 0.0;  // E_F K, zero up to quadrature error
  double pwm0 = std::numeric_limits<double>::quiet_NaN();
};

inline Population population_for(const ExperimentConfig& cfg) {
  Population pop{robust_params(cfg.distribution), std::nullopt};
  if (cfg.experiment == ExperimentKind::pwm_variance) {
    pop.kernel.emplace(cfg.distribution, cfg.weight, pop.params);
    pop.pwm0 = pop.kernel->pwm0();
    pop.kernel_mean = pop.kernel->mean();
  } else if (cfg.experiment == ExperimentKind::ci_coverage) {
    pop.pwm0 = pwm_population(cfg.distribution, cfg.weight, pop.params).value;
  }
  return pop;
}

inline PwmResult pwm_for(const SortedSample& s, const ExperimentConfig& cfg) {
  return cfg.k ? modified_mad_pwm(s, *cfg.k, cfg.weight) : pwm_sample(s, cfg.weight);
}

inline bool pwm_degenerate(const SortedSample& s, const ExperimentConfig& cfg) {
  return !((cfg.k ? modified_mad(s, *cfg.k) : sample_mad(s)) > 0.0);
}

inline void fill_bahadur(ReplicateRecord& r, const ExperimentConfig& cfg, const Population& pop) {
  const SortedSample s(draw_sample(cfg.distribution, r.n, r.seed_used));
  const BootstrapSample bs = resample(s, {r.seed_used, 0});
  const auto& p = pop.params;
  const auto d = decompose(bs, p, cfg.estimator_kind);
  r.estimate = d.estimate;
  r.target = d.target;
  r.linear_term = d.linear_term;
  r.remainder = d.remainder;
  r.aux[0] = sample_median(bs.resampled);
  r.aux[1] = ecdf(bs.resampled, p.v).value;
  r.aux[2] = ecdf(bs.resampled, p.v + p.xi).value - ecdf(bs.resampled, p.v - p.xi).value;
}

inline void fill_bound(ReplicateRecord& r, const ExperimentConfig& cfg, const Population& pop) {
  const SortedSample s(draw_sample(cfg.distribution, r.n, r.seed_used));
  const BootstrapSample bs = resample(s, {r.seed_used, 0});
  const auto& kind = cfg.estimator_kind;
  const double eps = *cfg.epsilon;
  if (kind.is_scale()) {
    r.estimate = generalized_mad(bs.resampled, kind.m, kind.l);
    r.target = pop.params.xi;
    r.aux[1] = concentration_bound_mad(cfg.distribution, pop.params, r.n, kind.l, kind.m, eps).bound;
  } else {
    r.estimate = generalized_median(bs.resampled, kind.l);
    r.target = pop.params.v;
    r.aux[1] = concentration_bound_median(cfg.distribution, pop.params, r.n, kind.l, eps).bound;
  }
  const double dev = std::abs(r.estimate - r.target);
  r.aux[0] = dev > eps ? 1.0 : 0.0;
  r.aux[2] = dev;
}

inline void fill_joint(ReplicateRecord& r, const ExperimentConfig& cfg, const Population& pop) {
  const SortedSample s(draw_sample(cfg.distribution, r.n, r.seed_used));
  const BootstrapSample bs = resample(s, {r.seed_used, 0});
  const auto& p = pop.params;
  const double rn = std::sqrt(static_cast<double>(r.n));
  const double med = sample_median(bs.resampled);
  const double mad = sample_mad(bs.resampled);
  const double at_v = ecdf(bs.resampled, p.v).value;
  const double hi = ecdf(bs.resampled, p.v + p.xi).value;
  const double lo = ecdf(bs.resampled, p.v - p.xi).value;
  r.estimate = med;
  r.target = p.v;
  r.linear_term = med_linear_term(at_v, p);
  r.remainder = r.estimate - r.target - r.linear_term;
  r.aux = {mad, mad_linear_term(at_v, hi, lo, p), rn * (med - p.v), rn * (mad - p.xi)};
}

inline void fill_conditional(ReplicateRecord& r, const SortedSample& outer, const Population& pop) {
  const BootstrapSample bs = resample(outer, {r.seed_used, 0});
  const auto& p = pop.params;
  const double rn = std::sqrt(static_cast<double>(r.n));
  const double med = sample_median(bs.resampled);
  const double mad = sample_mad(bs.resampled);
  const double med_n = sample_median(outer);
  const double mad_n = sample_mad(outer);
  r.estimate = med;
  r.target = med_n;
  r.linear_term = (ecdf(outer, p.v).value - ecdf(bs.resampled, p.v).value) / p.fv;
  r.remainder = r.estimate - r.target - r.linear_term;
  r.aux = {mad, mad_n, rn * (med - med_n), rn * (mad - mad_n)};
}

inline void fill_pwm_variance(ReplicateRecord& r, const ExperimentConfig& cfg, const Population& pop) {
  const SortedSample s(draw_sample(cfg.distribution, r.n, r.seed_used));
  const BootstrapSample bs = resample(s, {r.seed_used, 0});
  if (pwm_degenerate(bs.resampled, cfg)) {
    r.skipped = true;
    return;
  }
  const InfluenceKernel& K = *pop.kernel;
  const double dn = static_cast<double>(r.n);
  double k_star = 0.0, k_parent = 0.0;
  for (double x : bs.resampled.sorted()) k_star += K(x);
  for (double x : s.sorted()) k_parent += K(x);
  k_star /= dn;
  k_parent /= dn;

  r.estimate = pwm_for(bs.resampled, cfg).value;
  r.target = pop.pwm0;
  r.linear_term = k_star - pop.kernel_mean;
  r.remainder = r.estimate - r.target - r.linear_term;
  r.aux[0] = std::sqrt(dn) * (r.estimate - r.target);
  r.aux[1] = k_star - k_parent;
  if (!pwm_degenerate(s, cfg)) r.aux[2] = pwm_for(s, cfg).value;
}

inline void fill_ci(ReplicateRecord& r, const ExperimentConfig& cfg, const Population& pop) {
  const SortedSample s(draw_sample(cfg.distribution, r.n, r.seed_used));
  r.target = pop.pwm0;
  if (pwm_degenerate(s, cfg)) {
    r.skipped = true;
    return;
  }
  r.estimate = pwm_for(s, cfg).value;

  std::vector<double> boot;
  boot.reserve(cfg.bootstrap_B);
  for (std::size_t b = 0; b < cfg.bootstrap_B; ++b) {
    const BootstrapSample bs = resample(s, {r.seed_used, b});
    if (pwm_degenerate(bs.resampled, cfg)) {
      ++r.inner_skipped;
      continue;
    }
    boot.push_back(pwm_for(bs.resampled, cfg).value);
  }
  if (boot.size() < 2) {
    r.skipped = true;
    return;
  }
  std::sort(boot.begin(), boot.end());
  const double alpha = 1.0 - cfg.ci_level;
  r.aux[0] = quantile_type7(boot, alpha / 2.0);
  r.aux[1] = quantile_type7(boot, 1.0 - alpha / 2.0);

  const double dn = static_cast<double>(r.n);
  double mean = 0.0;
  for (double x : s.values()) mean += x;
  mean /= dn;
  double ss = 0.0;
  for (double x : s.values()) ss += (x - mean) * (x - mean);
  const double se = std::sqrt(ss / (dn - 1.0) / dn);
  const boost::math::students_t t_dist(dn - 1.0);
  const double t = boost::math::quantile(t_dist, 1.0 - alpha / 2.0);
  r.aux[2] = mean - t * se;
  r.aux[3] = mean + t * se;
}

}  // namespace detail

// Runs every (n, replicate) task; no file I/O.
inline ResultSet run_experiment(const ExperimentConfig& cfg, std::size_t workers = 1) {
  cfg.validate();
  const detail::Population pop = detail::population_for(cfg);

  std::vector<std::optional<SortedSample>> outer(cfg.n_grid.size());
  if (cfg.experiment == ExperimentKind::conditional_normality) {
    for (std::size_t g = 0; g < cfg.n_grid.size(); ++g) {
      const std::size_t n = cfg.n_grid[g];
      outer[g].emplace(draw_sample(cfg.distribution, n, outer_sample_seed(cfg.master_seed, n)));
    }
  }

  ResultSet rs{cfg, std::vector<ReplicateRecord>(cfg.n_grid.size() * cfg.reps)};
  parallel_for(rs.rows.size(), workers, [&](std::size_t t) {
    const std::size_t g = t / cfg.reps;
    ReplicateRecord& r = rs.rows[t];
    r.n = cfg.n_grid[g];
    r.replicate_index = t % cfg.reps;
    r.seed_used = replicate_seed(cfg.master_seed, r.n, r.replicate_index);
    switch (cfg.experiment) {
      case ExperimentKind::bahadur_rate: detail::fill_bahadur(r, cfg, pop); break;
      case ExperimentKind::bound_check: detail::fill_bound(r, cfg, pop); break;
      case ExperimentKind::joint_normality: detail::fill_joint(r, cfg, pop); break;
      case ExperimentKind::conditional_normality: detail::fill_conditional(r, *outer[g], pop); break;
      case ExperimentKind::pwm_variance: detail::fill_pwm_variance(r, cfg, pop); break;
      case ExperimentKind::ci_coverage: detail::fill_ci(r, cfg, pop); break;
    }
  });
  return rs;
}

// ---------------------------------------------------------------- CSV

inline constexpr std::string_view kCsvHeader =
    "experiment,dist,n,replicate_index,seed_used,estimate,target,linear_term,remainder,skipped,"
    "aux1,aux2,aux3,aux4";

inline std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_csv(const ResultSet& rs, std::ostream& out) {
  const std::string exp(experiment_name(rs.config.experiment));
  const std::string dist(rs.config.distribution.name());
  out << kCsvHeader << '\n';
  for (const auto& r : rs.rows) {
    out << exp << ',' << dist << ',' << r.n << ',' << r.replicate_index << ',' << r.seed_used << ','
        << format_real(r.estimate) << ',' << format_real(r.target) << ',' << format_real(r.linear_term)
        << ',' << format_real(r.remainder) << ',' << (r.skipped ? 1 : 0);
    for (double a : r.aux) out << ',' << format_real(a);
    out << '\n';
  }
}

// ---------------------------------------------------------------- rate fit

struct RateFit {
  std::vector<double> n;
  std::vector<double> median_abs_remainder;
  std::vector<double> weak_scaled;    // n^{1/2} median|R_n|
  std::vector<double> strong_scaled;  // n^{3/4} median|R_n| / log n
  double slope = 0.0;
  double intercept = 0.0;
  double weak_ratio = 0.0;  // weak_scaled at smallest n over largest n
  bool weak_pass = false;
  bool strong_pass = false;
  bool degenerate = false;  // some median |R_n| was zero; fit not attempted
  RateThresholds thresholds;
};

inline RateFit rate_fit(std::span<const double> n, std::span<const double> median_abs_remainder,
                        const RateThresholds& th = {}) {
  if (n.size() != median_abs_remainder.size()) throw DomainError("rate_fit: size mismatch");
  if (n.size() < th.min_points) {
    throw InsufficientData("rate_fit needs at least " + std::to_string(th.min_points) + " grid points");
  }
  RateFit f;
  f.thresholds = th;
  f.n.assign(n.begin(), n.end());
  f.median_abs_remainder.assign(median_abs_remainder.begin(), median_abs_remainder.end());
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double m = median_abs_remainder[i];
    if (!(m > 0.0)) f.degenerate = true;
    f.weak_scaled.push_back(std::sqrt(n[i]) * m);
    f.strong_scaled.push_back(std::pow(n[i], 0.75) * m / std::log(n[i]));
  }
  if (f.degenerate) return f;

  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    sx += std::log(n[i]);
    sy += std::log(median_abs_remainder[i]);
  }
  const double N = static_cast<double>(n.size());
  const double mx = sx / N, my = sy / N;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double dx = std::log(n[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(median_abs_remainder[i]) - my);
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.weak_ratio = f.weak_scaled.front() / f.weak_scaled.back();
  f.weak_pass = f.weak_ratio >= th.weak_factor;
  f.strong_pass = f.slope >= th.slope_lo && f.slope <= th.slope_hi;
  return f;
}

// ---------------------------------------------------------------- summary

using Json = nlohmann::ordered_json;

namespace detail {

struct Moments {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double median = std::numeric_limits<double>::quiet_NaN();
  double variance = std::numeric_limits<double>::quiet_NaN();  // divisor N - 1
};

inline Moments moments(std::vector<double> xs) {
  Moments m;
  if (xs.empty()) return m;
  const double N = static_cast<double>(xs.size());
  double s = 0.0;
  for (double x : xs) s += x;
  m.mean = s / N;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.variance = ss / (N - 1.0);
  }
  std::sort(xs.begin(), xs.end());
  const std::size_t h = xs.size() / 2;
  m.median = xs.size() % 2 ? xs[h] : 0.5 * (xs[h - 1] + xs[h]);
  return m;
}

// NaN becomes null so the document stays valid JSON.
inline Json real(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json moments_json(const Moments& m) {
  return Json{{"mean", real(m.mean)}, {"median", real(m.median)}, {"variance", real(m.variance)}};
}

inline Json matrix_json(const std::array<std::array<double, 2>, 2>& a) {
  return Json::array({Json::array({real(a[0][0]), real(a[0][1])}), Json::array({real(a[1][0]), real(a[1][1])})});
}

inline Json sigma_json(const SigmaMatrix& s) {
  return matrix_json({{{s.s11, s.s12}, {s.s12, s.s22}}});
}

inline Json normality_json(const NormalityReport& r) {
  return Json{{"empirical_cov", matrix_json(r.emp_cov)},
              {"empirical_mean", Json::array({real(r.emp_mean[0]), real(r.emp_mean[1])})},
              {"max_rel_diag_err", real(r.max_rel_diag_err)},
              {"abs_offdiag_err", real(r.abs_offdiag_err)},
              {"ks_stat", Json::array({real(r.ks_stat_1), real(r.ks_stat_2)})},
              {"ks_critical", real(r.ks_critical)},
              {"diag_ok", r.diag_ok},
              {"offdiag_ok", r.offdiag_ok},
              {"ks_ok", r.ks_ok},
              {"pass", r.pass}};
}

inline Json config_echo(const ExperimentConfig& c) {
  Json dist{{"family", std::string(c.distribution.name())}};
  for (const auto& [name, value] : c.distribution.parameters()) dist[name] = value;
  Json weight{{"kind", c.weight.name()}};
  if (c.weight.kind() == WeightFunction::Kind::power) {
    weight["p"] = c.weight.p();
  } else {
    weight["k"] = c.weight.k();
    weight["c"] = c.weight.c();
  }
  return Json{{"experiment", std::string(experiment_name(c.experiment))},
              {"distribution", dist},
              {"n_grid", c.n_grid},
              {"reps", c.reps},
              {"bootstrap_B", c.bootstrap_B},
              {"master_seed", c.master_seed},
              {"estimator", Json{{"kind", c.estimator_kind.name()}, {"l", c.estimator_kind.l}, {"m", c.estimator_kind.m}}},
              {"weight", weight},
              {"epsilon", c.epsilon ? Json(*c.epsilon) : Json(nullptr)},
              {"k", c.k ? Json(*c.k) : Json(nullptr)},
              {"ci_level", c.ci_level},
              {"coverage_tol", c.coverage_tol},
              {"output", Json{{"csv", c.output.csv_path},
                              {"summary", c.output.summary_path},
                              {"record_runtime", c.output.record_runtime}}}};
}

}  // namespace detail

inline Json summarize(const ResultSet& rs, std::optional<double> runtime_seconds = std::nullopt) {
  using detail::real;
  const ExperimentConfig& cfg = rs.config;
  if (rs.rows.empty()) throw InsufficientData("summarize needs at least one row");

  Json per_n = Json::array();
  Json notes = Json::array();
  bool all_pass = true;
  bool any_empty = false;
  std::vector<double> rate_n, rate_med;

  std::optional<RobustParams> params;
  std::optional<SigmaMatrix> sigma;
  std::optional<double> asym_var;
  try {
    params = robust_params(cfg.distribution);
    sigma = sigma_matrix(*params);
  } catch (const ModelUnsupported& e) {
    notes.push_back(e.what());
  }
  if (cfg.experiment == ExperimentKind::conditional_normality) {
    notes.push_back("conditional mode: the N(0, Sigma/2) limit given the data is a proof-internal claim; "
                    "only the diagonal is asserted");
  }
  if (cfg.experiment == ExperimentKind::pwm_variance && params) {
    asym_var = pwm_asym_variance(cfg.distribution, cfg.weight, *params);
  }

  std::size_t begin = 0;
  while (begin < rs.rows.size()) {
    const std::size_t n = rs.rows[begin].n;
    std::size_t end = begin;
    while (end < rs.rows.size() && rs.rows[end].n == n) ++end;
    const std::span<const ReplicateRecord> group(rs.rows.data() + begin, end - begin);
    begin = end;

    std::vector<const ReplicateRecord*> valid;
    for (const auto& r : group) {
      if (!r.skipped) valid.push_back(&r);
    }
    Json e{{"n", n}, {"reps", group.size()}, {"valid", valid.size()}, {"skipped", group.size() - valid.size()}};
    if (valid.empty()) {
      e["no_valid_replicates"] = true;
      any_empty = true;
      all_pass = false;
      per_n.push_back(e);
      continue;
    }
    auto column = [&](auto get) {
      std::vector<double> out;
      out.reserve(valid.size());
      for (const auto* r : valid) out.push_back(get(*r));
      return out;
    };
    e["estimate"] = detail::moments_json(detail::moments(column([](const auto& r) { return r.estimate; })));
    e["target"] = real(valid.front()->target);

    const double dn = static_cast<double>(n);
    switch (cfg.experiment) {
      case ExperimentKind::bahadur_rate: {
        const auto rem = detail::moments(column([](const auto& r) { return r.remainder; }));
        const auto abs_rem = detail::moments(column([](const auto& r) { return std::abs(r.remainder); }));
        e["remainder"] = detail::moments_json(rem);
        e["median_abs_remainder"] = real(abs_rem.median);
        e["weak_scaled"] = real(std::sqrt(dn) * abs_rem.median);
        e["strong_scaled"] = real(std::pow(dn, 0.75) * abs_rem.median / std::log(dn));
        rate_n.push_back(dn);
        rate_med.push_back(abs_rem.median);
        break;
      }
      case ExperimentKind::bound_check: {
        const auto exceed = detail::moments(column([](const auto& r) { return r.aux[0]; }));
        const double bound = valid.front()->aux[1];
        const double allowance = bound + 3.0 * std::sqrt(bound / static_cast<double>(valid.size()));
        const bool pass = exceed.mean <= allowance;
        e["exceed_frequency"] = real(exceed.mean);
        e["bound"] = real(bound);
        e["bound_nontrivial"] = bound < 1.0;
        e["allowance"] = real(allowance);
        e["pass"] = pass;
        all_pass = all_pass && pass;
        break;
      }
      case ExperimentKind::joint_normality:
      case ExperimentKind::conditional_normality: {
        if (!sigma) break;
        const bool conditional = cfg.experiment == ExperimentKind::conditional_normality;
        std::vector<Pair> draws;
        draws.reserve(valid.size());
        for (const auto* r : valid) draws.push_back({r->aux[2], r->aux[3]});
        const SigmaMatrix target = conditional ? sigma->scaled(0.5) : *sigma;
        NormalityThresholds th = cfg.normality;
        if (conditional) th.diag_rel = cfg.conditional_diag_tol;
        e["sigma_target"] = detail::sigma_json(target);
        if (draws.size() < 100) {
          e["normality"] = nullptr;
          notes.push_back("n=" + std::to_string(n) + ": fewer than 100 draws, normality check skipped");
          break;
        }
        const auto rep = joint_normality_check(draws, target, th, n);
        e["normality"] = detail::normality_json(rep);
        e["diag_ratio"] = Json::array({real(rep.emp_cov[0][0] / target.s11), real(rep.emp_cov[1][1] / target.s22)});
        // Conditional draws are lattice valued and centred at the sample,
        // so only the diagonal is asserted there.
        const bool pass = conditional ? rep.diag_ok : rep.pass;
        e["pass"] = pass;
        all_pass = all_pass && pass;
        break;
      }
      case ExperimentKind::pwm_variance: {
        const auto scaled = detail::moments(column([](const auto& r) { return r.aux[0]; }));
        const auto lin = detail::moments(column([](const auto& r) { return r.linear_term; }));
        e["scaled_error"] = detail::moments_json(scaled);
        e["linear_term"] = detail::moments_json(lin);
        e["remainder"] =
            detail::moments_json(detail::moments(column([](const auto& r) { return r.remainder; })));
        if (asym_var) {
          const double rel = scaled.variance / *asym_var - 1.0;
          const bool pass = std::abs(rel) <= cfg.pwm_variance_tol;
          e["asymptotic_variance"] = real(*asym_var);
          e["relative_error"] = real(rel);
          e["pass"] = pass;
          all_pass = all_pass && pass;
        }
        break;
      }
      case ExperimentKind::ci_coverage: {
        std::size_t hit_pwm = 0, hit_t = 0, inner = 0;
        double len_pwm = 0.0, len_t = 0.0;
        const auto mean = cfg.distribution.mean();
        for (const auto* r : valid) {
          if (r->aux[0] <= r->target && r->target <= r->aux[1]) ++hit_pwm;
          if (mean && r->aux[2] <= *mean && *mean <= r->aux[3]) ++hit_t;
          len_pwm += r->aux[1] - r->aux[0];
          len_t += r->aux[3] - r->aux[2];
        }
        for (const auto& r : group) inner += r.inner_skipped;
        const double N = static_cast<double>(valid.size());
        const double cov = static_cast<double>(hit_pwm) / N;
        const bool pass = std::abs(cov - cfg.ci_level) <= cfg.coverage_tol;
        e["coverage_percentile"] = real(cov);
        e["coverage_t"] = mean ? real(static_cast<double>(hit_t) / N) : Json(nullptr);
        e["mean_length_percentile"] = real(len_pwm / N);
        e["mean_length_t"] = real(len_t / N);
        e["inner_skipped"] = inner;
        e["pass"] = pass;
        all_pass = all_pass && pass;
        break;
      }
    }
    per_n.push_back(e);
  }

  Json rate = nullptr;
  Json flags{{"pass", false}, {"no_valid_replicates", any_empty}};
  if (cfg.experiment == ExperimentKind::bahadur_rate) {
    try {
      const RateFit f = rate_fit(rate_n, rate_med, cfg.rate);
      rate = Json{{"slope", f.degenerate ? Json(nullptr) : real(f.slope)},
                  {"intercept", f.degenerate ? Json(nullptr) : real(f.intercept)},
                  {"weak_ratio", f.degenerate ? Json(nullptr) : real(f.weak_ratio)},
                  {"weak_pass", f.weak_pass},
                  {"strong_pass", f.strong_pass},
                  {"degenerate", f.degenerate}};
      flags["weak_rep"] = f.weak_pass;
      flags["strong_rep"] = f.strong_pass;
      all_pass = all_pass && f.weak_pass && f.strong_pass;
      if (f.degenerate) notes.push_back("zero median remainder; rate fit not attempted");
    } catch (const InsufficientData& e) {
      notes.push_back(e.what());
    }
  }
  flags["pass"] = all_pass;
  flags["thresholds"] = Json{{"rate_slope", Json::array({cfg.rate.slope_lo, cfg.rate.slope_hi})},
                             {"weak_factor", cfg.rate.weak_factor},
                             {"normality_diag_rel", cfg.normality.diag_rel},
                             {"normality_offdiag_abs", cfg.normality.offdiag_abs},
                             {"ks_coeff", cfg.normality.ks_coeff},
                             {"conditional_diag_rel", cfg.conditional_diag_tol},
                             {"pwm_variance_rel", cfg.pwm_variance_tol},
                             {"coverage_tol", cfg.coverage_tol},
                             {"bound_allowance", "bound + 3 sqrt(bound / valid)"}};
  flags["notes"] = notes;

  return Json{{"config_echo", detail::config_echo(cfg)},
              {"per_n", per_n},
              {"rate_fit", rate},
              {"flags", flags},
              {"runtime_seconds", runtime_seconds ? Json(*runtime_seconds) : Json(nullptr)}};
}

// ---------------------------------------------------------------- persistence

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out << text;
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

inline std::string summary_text(const Json& summary) { return summary.dump(2) + "\n"; }

// Runs the experiment, writes the CSV and summary named in config.output, and
// returns the summary document.
inline Json execute_experiment(const ExperimentConfig& cfg, std::size_t workers = 1) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const ResultSet rs = run_experiment(cfg, workers);
  std::optional<double> runtime;
  if (cfg.output.record_runtime) {
    runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  const Json summary = summarize(rs, runtime);
  if (!cfg.output.csv_path.empty()) {
    std::ostringstream csv;
    write_csv(rs, csv);
    write_text_file(cfg.output.csv_path, csv.str());
  }
  if (!cfg.output.summary_path.empty()) write_text_file(cfg.output.summary_path, summary_text(summary));
  return summary;
}

}  // namespace madstrap
