#pragma once

// Bahadur linear terms and remainders for the bootstrap median, MAD and their
// single-order-statistic variants, plus the exponential concentration bounds
// on |v* - v| and |xi* - xi|.
//
// For every kind the linear term is built from the bootstrap ECDF F_n*
// evaluated at the population points v and v +/- xi:
//
//   median:  (1/2 - F_n*(v)) / F'(v)
//   MAD:     (1/2 - [F_n*(v+xi) - F_n*(v-xi)]) / G'(xi)
//            + (F'(v+xi) - F'(v-xi)) / G'(xi) * (1/2 - F_n*(v)) / F'(v)
//
// The same linear term serves the almost-sure O(n^-3/4 log n) statement and
// the in-probability o(n^-1/2) statement; only the rate claim differs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "madstrap/bootstrap.hpp"
#include "madstrap/distributions.hpp"
#include "madstrap/errors.hpp"
#include "madstrap/estimators.hpp"

namespace madstrap {

struct EstimatorKind {
  enum class Type { median, generalized_median, mad, generalized_mad };

  Type type = Type::mad;
  std::size_t m = 1;
  std::size_t l = 1;

  static EstimatorKind median() { return {Type::median, 1, 1}; }
  static EstimatorKind generalized_median(std::size_t l) { return {Type::generalized_median, 1, l}; }
  static EstimatorKind mad() { return {Type::mad, 1, 1}; }
  static EstimatorKind generalized_mad(std::size_t m, std::size_t l) {
    return {Type::generalized_mad, m, l};
  }

  bool is_scale() const noexcept { return type == Type::mad || type == Type::generalized_mad; }

  std::string name() const {
    switch (type) {
      case Type::median: return "median";
      case Type::generalized_median: return "generalized_median";
      case Type::mad: return "mad";
      case Type::generalized_mad: return "generalized_mad";
    }
    return "?";
  }

  static Type parse(std::string_view s) {
    if (s == "median") return Type::median;
    if (s == "generalized_median") return Type::generalized_median;
    if (s == "mad") return Type::mad;
    if (s == "generalized_mad") return Type::generalized_mad;
    throw DomainError("unknown estimator kind: " + std::string(s));
  }
};

// Value of the estimator `kind` on a (bootstrap) sample.
inline double evaluate_estimator(const SortedSample& s, const EstimatorKind& kind) {
  switch (kind.type) {
    case EstimatorKind::Type::median: return sample_median(s);
    case EstimatorKind::Type::generalized_median: return generalized_median(s, kind.l);
    case EstimatorKind::Type::mad: return sample_mad(s);
    case EstimatorKind::Type::generalized_mad: return generalized_mad(s, kind.m, kind.l);
  }
  return 0.0;
}

struct BahadurDecomposition {
  double estimate = 0.0;
  double target = 0.0;
  double linear_term = 0.0;
  double remainder = 0.0;  // estimate - target - linear_term
  std::size_t n = 0;
  EstimatorKind kind;
};

inline double med_linear_term(double fn_star_at_v, const RobustParams& params) {
  if (!(params.fv > 0.0)) throw DegenerateDensity("F'(v) must be positive");
  return (0.5 - fn_star_at_v) / params.fv;
}

inline double mad_linear_term(double fn_star_at_v, double fn_star_hi, double fn_star_lo,
                              const RobustParams& params) {
  if (!(params.fv > 0.0)) throw DegenerateDensity("F'(v) must be positive");
  if (!(params.g_prime > 0.0)) throw DegenerateDensity("G'(xi) must be positive");
  const double scale_part = (0.5 - (fn_star_hi - fn_star_lo)) / params.g_prime;
  // Linearizing G_n*(xi*) = 1/2 gives
  //   (f_hi - f_lo)(v* - v) + G'(xi)(xi* - xi) = 1/2 - [F_n*(v+xi) - F_n*(v-xi)],
  // so the median part enters with coefficient -(f_hi - f_lo)/G' = beta/G'.
  const double slope = params.beta / params.g_prime;
  return scale_part + slope * (0.5 - fn_star_at_v) / params.fv;
}

// Decomposition on an already resampled sample.
inline BahadurDecomposition decompose(const SortedSample& boot, const RobustParams& params,
                                      const EstimatorKind& kind) {
  BahadurDecomposition d;
  d.n = boot.size();
  d.kind = kind;
  d.estimate = evaluate_estimator(boot, kind);
  const double at_v = ecdf(boot, params.v).value;
  if (kind.is_scale()) {
    d.target = params.xi;
    const double hi = ecdf(boot, params.v + params.xi).value;
    const double lo = ecdf(boot, params.v - params.xi).value;
    d.linear_term = mad_linear_term(at_v, hi, lo, params);
  } else {
    d.target = params.v;
    d.linear_term = med_linear_term(at_v, params);
  }
  d.remainder = d.estimate - d.target - d.linear_term;
  return d;
}

inline BahadurDecomposition decompose(const BootstrapSample& bs, const RobustParams& params,
                                      const EstimatorKind& kind) {
  return decompose(bs.resampled, params, kind);
}

// Exponential tail bound on P(|v*_{n,l} - v| > eps) (median) or
// P(|xi*_{n,m,l} - xi| > eps) (MAD). The constants are population
// quantities; when any of them is nonpositive n is too small for the bound
// to apply, `valid` is cleared and the trivial bound 1 is reported.
struct ConcentrationBound {
  enum class Which { median, mad };

  Which which = Which::median;
  double epsilon = 0.0;
  std::size_t n = 0;
  double a0 = 0.0;
  double b0 = 0.0;
  std::optional<double> c0;
  std::optional<double> d0;
  double delta = 0.0;      // min(a0, b0)
  double delta_all = 0.0;  // min(a0, b0, c0, d0); equals delta for the median
  double bound = 1.0;
  bool valid = false;
  double d_rate = 0.0;  // max(8 / F'(v), 8 / G'(xi))
};

namespace detail {

inline void check_bound_inputs(std::size_t n, std::size_t l, double epsilon) {
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
  if (n < 2) throw DomainError("n must be at least 2");
  check_index_param("l", l, n);
}

inline double rate_constant(const RobustParams& params) {
  return std::max(8.0 / params.fv, 8.0 / params.g_prime);
}

}  // namespace detail

inline ConcentrationBound concentration_bound_median(const DistributionModel& model,
                                                     const RobustParams& params, std::size_t n,
                                                     std::size_t l, double epsilon) {
  detail::check_bound_inputs(n, l, epsilon);
  const double dn = static_cast<double>(n);
  const double k = static_cast<double>((n + l) / 2);

  ConcentrationBound cb;
  cb.which = ConcentrationBound::Which::median;
  cb.epsilon = epsilon;
  cb.n = n;
  cb.a0 = model.cdf(params.v + epsilon / 2.0) - (k - 1.0) / dn;
  cb.b0 = k / dn - model.cdf(params.v - epsilon / 2.0);
  cb.delta = std::min(cb.a0, cb.b0);
  cb.delta_all = cb.delta;
  cb.d_rate = detail::rate_constant(params);
  cb.valid = cb.a0 > 0.0 && cb.b0 > 0.0;
  cb.bound = cb.valid ? 2.0 * std::exp(-std::numbers::sqrt2 * dn * cb.delta * cb.delta) : 1.0;
  return cb;
}

inline ConcentrationBound concentration_bound_mad(const DistributionModel& model,
                                                  const RobustParams& params, std::size_t n,
                                                  std::size_t l, std::size_t m, double epsilon) {
  detail::check_bound_inputs(n, l, epsilon);
  detail::check_index_param("m", m, n);
  auto cb = concentration_bound_median(model, params, n, l, epsilon);
  const double dn = static_cast<double>(n);
  const double k = static_cast<double>((n + m) / 2);
  const double v = params.v;
  const double xi = params.xi;
  const double h = epsilon / 2.0;

  cb.which = ConcentrationBound::Which::mad;
  cb.c0 = model.cdf(v + xi + h) - model.cdf(v - xi - h) - (k - 1.0) / dn;
  cb.d0 = k / dn - model.cdf(v + xi - h) + model.cdf(v - xi + h);
  cb.delta_all = std::min({cb.a0, cb.b0, *cb.c0, *cb.d0});
  cb.valid = cb.delta_all > 0.0;
  cb.bound = cb.valid ? 6.0 * std::exp(-std::numbers::sqrt2 * dn * cb.delta_all * cb.delta_all) : 1.0;
  return cb;
}

}  // namespace madstrap
