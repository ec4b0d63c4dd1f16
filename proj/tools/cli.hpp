#pragma once

// madstrap command line. Single-shot subcommands print one JSON document to
// stdout; `experiment` also writes CSV/summary files. Exit codes: 0 success,
// 1 runtime failure, 2 usage or configuration error.

#include <charconv>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "madstrap/asymptotics.hpp"
#include "madstrap/bahadur.hpp"
#include "madstrap/bootstrap.hpp"
#include "madstrap/config.hpp"
#include "madstrap/depth.hpp"
#include "madstrap/distributions.hpp"
#include "madstrap/errors.hpp"
#include "madstrap/estimators.hpp"
#include "madstrap/harness.hpp"
#include "madstrap/parallel.hpp"

namespace madstrap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Thrown for problems that are the caller's fault (exit 2).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DistFlags {
  std::string family = "normal";
  std::map<std::string, std::optional<double>> params{
      {"mu", {}}, {"sigma", {}}, {"b", {}}, {"x0", {}}, {"gamma", {}},
      {"a", {}},  {"lambda", {}}, {"eps_c", {}}, {"sigma_c", {}}};

  void attach(CLI::App* app) {
    app->add_option("--dist", family, "Distribution family: normal, laplace, cauchy, uniform, exponential, "
                                      "contaminated_normal")
        ->capture_default_str();
    app->add_option("--mu", params["mu"], "Location (normal, laplace)");
    app->add_option("--sigma", params["sigma"], "Scale (normal)");
    app->add_option("--b", params["b"], "Scale (laplace) or upper end (uniform)");
    app->add_option("--x0", params["x0"], "Location (cauchy)");
    app->add_option("--gamma", params["gamma"], "Scale (cauchy)");
    app->add_option("--a", params["a"], "Lower end (uniform)");
    app->add_option("--lambda", params["lambda"], "Rate (exponential)");
    app->add_option("--eps-c", params["eps_c"], "Contamination fraction (contaminated_normal)");
    app->add_option("--sigma-c", params["sigma_c"], "Contamination scale (contaminated_normal)");
  }

  DistributionModel build() const {
    std::map<std::string, double> given;
    for (const auto& [name, value] : params) {
      if (value) given[name] = *value;
    }
    try {
      return make_distribution(family, given);
    } catch (const DomainError& e) {
      throw UsageError(e.what());
    }
  }
};

struct WeightFlags {
  std::string kind = "power";
  std::optional<double> p, k, c;

  void attach(CLI::App* app) {
    app->add_option("--weight", kind, "Depth weight: power or zuo_exponential")->capture_default_str();
    app->add_option("--p", p, "Power weight exponent (default 2)");
    app->add_option("--wk", k, "zuo_exponential steepness k (default 3)");
    app->add_option("--wc", c, "zuo_exponential threshold c in (0, 1] (default 1)");
  }

  WeightFunction build() const {
    try {
      return make_weight(kind, p, k, c);
    } catch (const DomainError& e) {
      throw UsageError(e.what());
    }
  }
};

inline std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw UsageError("--values: empty entry");
    const std::string token = item.substr(first, last - first + 1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw UsageError("--values: cannot parse '" + token + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("--values: no values");
  return out;
}

inline Json distribution_json(const DistributionModel& m) {
  Json d{{"family", std::string(m.name())}};
  for (const auto& [name, value] : m.parameters()) d[name] = value;
  return d;
}

inline Json params_json(const RobustParams& p) {
  return Json{{"v", p.v},          {"xi", p.xi},       {"fv", p.fv},
              {"f_lo", p.f_lo},    {"f_hi", p.f_hi},   {"g_prime", p.g_prime},
              {"alpha", p.alpha},  {"beta", p.beta},   {"gamma", p.gamma},
              {"cdf_lo", p.cdf_lo}};
}

inline Json pwm_json(const PwmResult& r) {
  return Json{{"value", r.value},
              {"numerator", r.numerator},
              {"denominator", r.denominator},
              {"center", r.depth.center},
              {"scale", r.depth.scale}};
}

inline EstimatorKind estimator_kind(const std::string& which, std::size_t l, std::size_t m) {
  EstimatorKind kind;
  try {
    kind.type = EstimatorKind::parse(which);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  kind.l = l;
  kind.m = m;
  return kind;
}

// Sample from --values, else n draws from the model with --seed.
inline SortedSample obtain_sample(const std::optional<std::string>& values, std::optional<std::size_t> n,
                                  std::uint64_t seed, const DistFlags& dist) {
  if (values) return SortedSample(parse_values(*values));
  if (!n) throw UsageError("give --values or --n");
  return SortedSample(draw_sample(dist.build(), *n, seed));
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bootstrap median/MAD estimators, Bahadur diagnostics and depth weighted means", "madstrap"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  DistFlags dist;
  WeightFlags weight;
  std::optional<std::size_t> n, workers, k;
  std::size_t l = 1, m = 1, reps = 2000;
  std::optional<double> eps;
  std::string which;
  std::uint64_t seed = 0;
  std::optional<std::string> values, out_path, summary_path;
  std::string config_path, mode = "unconditional";

  auto* params = app.add_subcommand("params", "Population v, xi and density constants");
  dist.attach(params);

  auto* sigma = app.add_subcommand("sigma", "Limiting covariance Sigma of sqrt(n)(Med* - v, MAD* - xi)");
  dist.attach(sigma);

  auto* estimate = app.add_subcommand("estimate", "Median, MAD and order-statistic variants of a sample");
  dist.attach(estimate);
  estimate->add_option("--values", values, "Comma separated sample");
  estimate->add_option("--n", n, "Draw n values from the distribution instead");
  estimate->add_option("--seed", seed, "Seed for drawn samples");
  estimate->add_option("--which", which,
                       "median, mad, generalized_median, generalized_mad or modified_mad");
  estimate->add_option("--l", l, "Order-statistic shift l")->capture_default_str();
  estimate->add_option("--m", m, "Order-statistic shift m")->capture_default_str();
  estimate->add_option("--k", k, "Modified MAD order k");

  auto* bound = app.add_subcommand("bound", "Exponential concentration bound for v*_{n,l} or xi*_{n,m,l}");
  dist.attach(bound);
  bound->add_option("--n", n, "Sample size")->required();
  bound->add_option("--l", l, "Order-statistic shift l")->capture_default_str();
  bound->add_option("--m", m, "Order-statistic shift m")->capture_default_str();
  bound->add_option("--eps", eps, "Deviation epsilon > 0")->required();
  bound->add_option("--which", which, "median or mad")->required()->check(CLI::IsMember({"median", "mad"}));

  auto* bahadur = app.add_subcommand("bahadur", "Bahadur decomposition of one bootstrap replicate");
  dist.attach(bahadur);
  bahadur->add_option("--values", values, "Comma separated parent sample");
  bahadur->add_option("--n", n, "Draw the parent sample from the distribution instead");
  bahadur->add_option("--seed", seed, "Seed for the parent draw and the resample");
  bahadur->add_option("--which", which, "median, generalized_median, mad or generalized_mad (default mad)");
  bahadur->add_option("--l", l, "Order-statistic shift l")->capture_default_str();
  bahadur->add_option("--m", m, "Order-statistic shift m")->capture_default_str();

  auto* jointnorm = app.add_subcommand("jointnorm", "Monte Carlo check of sqrt(n)(Med* - v, MAD* - xi) against Sigma");
  dist.attach(jointnorm);
  jointnorm->add_option("--n", n, "Sample size (default 2000)");
  jointnorm->add_option("--reps", reps, "Replicates")->capture_default_str();
  jointnorm->add_option("--seed", seed, "Master seed");
  jointnorm->add_option("--workers", workers, "Worker threads (default MADSTRAP_WORKERS or all cores)");
  jointnorm->add_option("--mode", mode, "unconditional or conditional")
      ->check(CLI::IsMember({"unconditional", "conditional"}))
      ->capture_default_str();

  auto* pwm = app.add_subcommand("pwm", "Projection depth weighted mean and its asymptotic variance");
  dist.attach(pwm);
  weight.attach(pwm);
  pwm->add_option("--values", values, "Comma separated sample for PWM_n");
  pwm->add_option("--n", n, "Draw the sample from the distribution instead");
  pwm->add_option("--seed", seed, "Seed for the draw and for one bootstrap PWM*");
  pwm->add_option("--k", k, "Use the modified MAD of order k as depth scale");

  auto* experiment = app.add_subcommand("experiment", "Run a TOML-configured Monte Carlo experiment");
  experiment->add_option("--config", config_path, "Experiment TOML file")->required();
  experiment->add_option("--out", out_path, "Write the replicate CSV here (overrides [output] csv)");
  experiment->add_option("--summary", summary_path, "Write the summary JSON here (overrides [output] summary)");
  experiment->add_option("--seed", seed, "Override master_seed");
  experiment->add_option("--workers", workers, "Worker threads (default MADSTRAP_WORKERS or all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  auto emit = [&](const Json& j) { out << j.dump(2) << '\n'; };

  try {
    if (*params) {
      const auto model = dist.build();
      Json j{{"distribution", distribution_json(model)}};
      j.update(params_json(robust_params(model)));
      emit(j);
    } else if (*sigma) {
      const auto model = dist.build();
      const auto s = sigma_matrix(robust_params(model));
      emit(Json{{"distribution", distribution_json(model)},
                {"sigma", Json::array({Json::array({s.s11, s.s12}), Json::array({s.s12, s.s22})})},
                {"determinant", s.determinant()}});
    } else if (*estimate) {
      const SortedSample s = obtain_sample(values, n, seed, dist);
      Json j{{"n", s.size()}, {"median", sample_median(s)}, {"mad", sample_mad(s)}};
      if (!which.empty()) {
        double v = 0.0;
        if (which == "modified_mad") {
          if (!k) throw UsageError("modified_mad needs --k");
          v = modified_mad(s, *k);
          j["k"] = *k;
        } else {
          const auto kind = estimator_kind(which, l, m);
          v = evaluate_estimator(s, kind);
          j["l"] = l;
          j["m"] = m;
        }
        j["which"] = which;
        j["estimate"] = v;
      }
      emit(j);
    } else if (*bound) {
      const auto model = dist.build();
      const auto p = robust_params(model);
      const auto cb = which == "median" ? concentration_bound_median(model, p, *n, l, *eps)
                                        : concentration_bound_mad(model, p, *n, l, m, *eps);
      Json j{{"which", which}, {"n", *n}, {"l", l}, {"epsilon", *eps}, {"a0", cb.a0}, {"b0", cb.b0}};
      if (cb.c0) {
        j["m"] = m;
        j["c0"] = *cb.c0;
        j["d0"] = *cb.d0;
      }
      j["delta"] = cb.delta_all;
      j["bound"] = cb.bound;
      j["valid"] = cb.valid;
      j["d_rate"] = cb.d_rate;
      emit(j);
    } else if (*bahadur) {
      const auto model = dist.build();
      const auto p = robust_params(model);
      const SortedSample s = obtain_sample(values, n, seed, dist);
      const auto kind = estimator_kind(which.empty() ? "mad" : which, l, m);
      const auto d = decompose(resample(s, {seed, 0}), p, kind);
      emit(Json{{"estimator", kind.name()},
                {"n", d.n},
                {"seed", seed},
                {"estimate", d.estimate},
                {"target", d.target},
                {"linear_term", d.linear_term},
                {"remainder", d.remainder}});
    } else if (*jointnorm) {
      ExperimentConfig cfg;
      cfg.experiment =
          mode == "conditional" ? ExperimentKind::conditional_normality : ExperimentKind::joint_normality;
      cfg.distribution = dist.build();
      cfg.n_grid = {n.value_or(2000)};
      cfg.reps = reps;
      cfg.master_seed = seed;
      const auto rs = run_experiment(cfg, resolve_workers(workers));
      emit(summarize(rs));
    } else if (*pwm) {
      const auto model = dist.build();
      const auto w = weight.build();
      const auto p = robust_params(model);
      const InfluenceKernel kernel(model, w, p);
      Json j{{"distribution", distribution_json(model)},
             {"weight", w.name()},
             {"population", pwm_json(kernel.population())},
             {"asym_variance", kernel.asym_variance()}};
      if (values || n) {
        const SortedSample s = obtain_sample(values, n, seed, dist);
        j["sample"] = pwm_json(k ? modified_mad_pwm(s, *k, w) : pwm_sample(s, w));
        const auto boot = pwm_bootstrap(s, {seed, 0}, w);
        j["bootstrap"] = boot ? pwm_json(*boot) : Json(nullptr);
      }
      emit(j);
    } else if (*experiment) {
      ExperimentConfig cfg = load_config(config_path);
      if (out_path) cfg.output.csv_path = *out_path;
      if (summary_path) cfg.output.summary_path = *summary_path;
      if (experiment->count("--seed")) cfg.master_seed = seed;
      emit(execute_experiment(cfg, resolve_workers(workers)));
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace madstrap::cli
