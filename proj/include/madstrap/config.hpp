#pragma once

// TOML experiment configuration.
//
//   [experiment]    kind, n_grid, reps, bootstrap_B, master_seed, estimator,
//                   l, m, k, epsilon, ci_level, coverage_tol
//   [distribution]  family plus that family's parameters
//   [weight]        kind = "power" (p) or "zuo_exponential" (k, c)
//   [output]        csv, summary, record_runtime
//
// Unknown tables and keys are rejected with the dotted key as the field.

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "madstrap/bahadur.hpp"
#include "madstrap/depth.hpp"
#include "madstrap/distributions.hpp"
#include "madstrap/errors.hpp"
#include "madstrap/harness.hpp"

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

namespace madstrap {

// Parameter names and defaults of each family, in constructor order.
inline std::vector<std::pair<std::string, double>> family_defaults(Family f) {
  switch (f) {
    case Family::normal: return {{"mu", 0.0}, {"sigma", 1.0}};
    case Family::laplace: return {{"mu", 0.0}, {"b", 1.0}};
    case Family::cauchy: return {{"x0", 0.0}, {"gamma", 1.0}};
    case Family::uniform: return {{"a", 0.0}, {"b", 1.0}};
    case Family::exponential: return {{"lambda", 1.0}};
    case Family::contaminated_normal: return {{"eps_c", 0.1}, {"sigma_c", 3.0}};
  }
  return {};
}

// Builds a model from a family name and named parameters; missing parameters
// take their defaults, parameters of other families are rejected.
inline DistributionModel make_distribution(std::string_view family,
                                           const std::map<std::string, double>& given) {
  const Family f = parse_family(family);
  auto values = family_defaults(f);
  for (const auto& [name, value] : given) {
    bool known = false;
    for (auto& [pname, pvalue] : values) {
      if (pname == name) {
        pvalue = value;
        known = true;
      }
    }
    if (!known) {
      throw ConfigError(name, "not a parameter of the " + std::string(family) + " family");
    }
  }
  const double p1 = values[0].second;
  const double p2 = values.size() > 1 ? values[1].second : 0.0;
  switch (f) {
    case Family::normal: return DistributionModel::normal(p1, p2);
    case Family::laplace: return DistributionModel::laplace(p1, p2);
    case Family::cauchy: return DistributionModel::cauchy(p1, p2);
    case Family::uniform: return DistributionModel::uniform(p1, p2);
    case Family::exponential: return DistributionModel::exponential(p1);
    case Family::contaminated_normal: return DistributionModel::contaminated_normal(p1, p2);
  }
  throw DomainError("unknown distribution family: " + std::string(family));
}

inline WeightFunction make_weight(std::string_view kind, std::optional<double> p, std::optional<double> k,
                                  std::optional<double> c) {
  if (kind == "power") {
    if (k || c) throw ConfigError("weight", "power weight takes only p");
    return WeightFunction::power(p.value_or(2.0));
  }
  if (kind == "zuo_exponential") {
    if (p) throw ConfigError("weight", "zuo_exponential weight takes k and c, not p");
    return WeightFunction::zuo_exponential(k.value_or(3.0), c.value_or(1.0));
  }
  throw ConfigError("weight.kind", "unknown weight '" + std::string(kind) + "'");
}

inline std::uint64_t parse_u64(std::string_view text, const std::string& field) {
  int base = 10;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    text.remove_prefix(2);
    base = 16;
  }
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, base);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError(field, "expected an unsigned 64-bit integer");
  }
  return value;
}

namespace detail {

class TomlReader {
 public:
  TomlReader(const toml::table& root) : root_(root) {
    for (const auto& [key, node] : root_) {
      const std::string name(key.str());
      if (name != "experiment" && name != "distribution" && name != "weight" && name != "output") {
        throw ConfigError(name, "unknown table");
      }
      if (!node.is_table()) throw ConfigError(name, "must be a table");
    }
  }

  const toml::table* table(std::string_view name) const { return root_[name].as_table(); }

  static void reject_unknown(const toml::table* t, std::string_view section,
                             std::initializer_list<std::string_view> allowed) {
    if (!t) return;
    for (const auto& [key, node] : *t) {
      bool ok = false;
      for (auto a : allowed) ok = ok || key.str() == a;
      if (!ok) throw ConfigError(std::string(section) + "." + std::string(key.str()), "unknown key");
    }
  }

  static std::string field(std::string_view section, std::string_view key) {
    return std::string(section) + "." + std::string(key);
  }

  static std::optional<double> real(const toml::table* t, std::string_view section, std::string_view key) {
    if (!t || !t->contains(key)) return std::nullopt;
    const auto& node = *t->get(key);
    if (auto v = node.as_floating_point()) return v->get();
    if (auto v = node.as_integer()) return static_cast<double>(v->get());
    throw ConfigError(field(section, key), "expected a number");
  }

  static std::optional<std::size_t> count(const toml::table* t, std::string_view section, std::string_view key) {
    if (!t || !t->contains(key)) return std::nullopt;
    const auto* v = t->get(key)->as_integer();
    if (!v) throw ConfigError(field(section, key), "expected an integer");
    if (v->get() < 0) throw ConfigError(field(section, key), "must be nonnegative");
    return static_cast<std::size_t>(v->get());
  }

  static std::optional<std::string> text(const toml::table* t, std::string_view section, std::string_view key) {
    if (!t || !t->contains(key)) return std::nullopt;
    const auto* v = t->get(key)->as_string();
    if (!v) throw ConfigError(field(section, key), "expected a string");
    return v->get();
  }

  static std::optional<bool> flag(const toml::table* t, std::string_view section, std::string_view key) {
    if (!t || !t->contains(key)) return std::nullopt;
    const auto* v = t->get(key)->as_boolean();
    if (!v) throw ConfigError(field(section, key), "expected a boolean");
    return v->get();
  }

 private:
  const toml::table& root_;
};

}  // namespace detail

inline ExperimentConfig config_from_toml(const toml::table& root) {
  using R = detail::TomlReader;
  const R reader(root);
  ExperimentConfig cfg;

  const auto* ex = reader.table("experiment");
  if (!ex) throw ConfigError("experiment", "missing table");
  R::reject_unknown(ex, "experiment",
                    {"kind", "n_grid", "reps", "bootstrap_B", "master_seed", "estimator", "l", "m", "k",
                     "epsilon", "ci_level", "coverage_tol"});
  const auto kind = R::text(ex, "experiment", "kind");
  if (!kind) throw ConfigError("experiment.kind", "missing");
  cfg.experiment = parse_experiment(*kind);

  const auto* grid = ex->get("n_grid");
  if (!grid) throw ConfigError("experiment.n_grid", "missing");
  const auto* arr = grid->as_array();
  if (!arr) throw ConfigError("experiment.n_grid", "expected an array of integers");
  for (const auto& node : *arr) {
    const auto* v = node.as_integer();
    if (!v || v->get() < 1) throw ConfigError("experiment.n_grid", "expected positive integers");
    cfg.n_grid.push_back(static_cast<std::size_t>(v->get()));
  }

  if (auto v = R::count(ex, "experiment", "reps")) cfg.reps = *v;
  if (auto v = R::count(ex, "experiment", "bootstrap_B")) cfg.bootstrap_B = *v;
  if (ex->contains("master_seed")) {
    const auto& node = *ex->get("master_seed");
    if (auto i = node.as_integer()) {
      if (i->get() < 0) throw ConfigError("experiment.master_seed", "must be nonnegative");
      cfg.master_seed = static_cast<std::uint64_t>(i->get());
    } else if (auto s = node.as_string()) {
      cfg.master_seed = parse_u64(s->get(), "experiment.master_seed");
    } else {
      throw ConfigError("experiment.master_seed", "expected an integer or a decimal/hex string");
    }
  }
  try {
    const auto est = R::text(ex, "experiment", "estimator").value_or("mad");
    cfg.estimator_kind.type = EstimatorKind::parse(est);
  } catch (const DomainError& e) {
    throw ConfigError("experiment.estimator", e.what());
  }
  cfg.estimator_kind.l = R::count(ex, "experiment", "l").value_or(1);
  cfg.estimator_kind.m = R::count(ex, "experiment", "m").value_or(1);
  cfg.k = R::count(ex, "experiment", "k");
  cfg.epsilon = R::real(ex, "experiment", "epsilon");
  if (auto v = R::real(ex, "experiment", "ci_level")) cfg.ci_level = *v;
  if (auto v = R::real(ex, "experiment", "coverage_tol")) cfg.coverage_tol = *v;

  if (const auto* dist = reader.table("distribution")) {
    const auto family = R::text(dist, "distribution", "family");
    if (!family) throw ConfigError("distribution.family", "missing");
    std::map<std::string, double> given;
    for (const auto& [key, node] : *dist) {
      const std::string name(key.str());
      if (name == "family") continue;
      given[name] = *R::real(dist, "distribution", name);
    }
    try {
      cfg.distribution = make_distribution(*family, given);
    } catch (const ConfigError& e) {
      throw ConfigError("distribution." + e.field(), e.what());
    } catch (const DomainError& e) {
      throw ConfigError("distribution", e.what());
    }
  }

  if (const auto* w = reader.table("weight")) {
    R::reject_unknown(w, "weight", {"kind", "p", "k", "c"});
    try {
      cfg.weight = make_weight(R::text(w, "weight", "kind").value_or("power"), R::real(w, "weight", "p"),
                               R::real(w, "weight", "k"), R::real(w, "weight", "c"));
    } catch (const DomainError& e) {
      throw ConfigError("weight", e.what());
    }
  }

  if (const auto* out = reader.table("output")) {
    R::reject_unknown(out, "output", {"csv", "summary", "record_runtime"});
    cfg.output.csv_path = R::text(out, "output", "csv").value_or("");
    cfg.output.summary_path = R::text(out, "output", "summary").value_or("");
    cfg.output.record_runtime = R::flag(out, "output", "record_runtime").value_or(false);
  }

  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config(std::string_view text, std::string_view source = "config") {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string(source), std::string(e.description()));
  }
  return config_from_toml(root);
}

inline ExperimentConfig load_config(const std::string& path) {
  toml::table root;
  try {
    root = toml::parse_file(path);
  } catch (const toml::parse_error& e) {
    const std::string what(e.description());
    if (what.find("File could not be opened") != std::string::npos) throw IoError(path, what);
    throw ConfigError(path, what);
  }
  return config_from_toml(root);
}

}  // namespace madstrap
