#pragma once

// Projection depth PD(x) = 1 / (1 + |x - center| / scale) and the depth
// weighted mean PWM = int x w(PD) dF / int w(PD) dF, in population, sample
// and bootstrap form, together with its influence kernel K and the limiting
// variance 2 var K(X) of sqrt(n) (PWM* - PWM(F)).
//
// Indicators are evaluated with the midpoint convention at their boundary
// (I(y <= t) = 1/2 when y == t), matching sign(0) = 0. This only changes
// values on a null set but makes f(2v - x, 2v - y) = f(x, y) hold everywhere
// and K(v) = 0 exactly for symmetric models.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "madstrap/bootstrap.hpp"
#include "madstrap/distributions.hpp"
#include "madstrap/errors.hpp"
#include "madstrap/estimators.hpp"
#include "madstrap/quadrature.hpp"

namespace madstrap {

class WeightFunction {
 public:
  enum class Kind { power, zuo_exponential };

  // w(r) = r^p
  static WeightFunction power(double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw DomainError("power weight needs p >= 1");
    return WeightFunction(Kind::power, p, 0.0);
  }

  // Zuo-type exponential weight shifted and rescaled so that w(0) = 0:
  //   w(r) = (exp(-k (1 - r/c)^2) - exp(-k)) / (1 - exp(-k))   for r < c
  //   w(r) = 1                                                  for r >= c
  static WeightFunction zuo_exponential(double k, double c) {
    if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("zuo_exponential weight needs k > 0");
    if (!(c > 0.0 && c <= 1.0)) throw DomainError("zuo_exponential weight needs 0 < c <= 1");
    return WeightFunction(Kind::zuo_exponential, k, c);
  }

  static WeightFunction default_weight() { return power(2.0); }

  Kind kind() const noexcept { return kind_; }
  double p() const noexcept { return kind_ == Kind::power ? a_ : 0.0; }
  double k() const noexcept { return kind_ == Kind::zuo_exponential ? a_ : 0.0; }
  double c() const noexcept { return c_; }

  std::string name() const { return kind_ == Kind::power ? "power" : "zuo_exponential"; }

  double operator()(double r) const {
    if (kind_ == Kind::power) {
      if (r <= 0.0) return 0.0;
      return a_ == 1.0 ? r : (a_ == 2.0 ? r * r : std::pow(r, a_));
    }
    if (r >= c_) return 1.0;
    const double t = 1.0 - r / c_;
    const double floor = std::exp(-a_);
    return (std::exp(-a_ * t * t) - floor) / (1.0 - floor);
  }

  double derivative(double r) const {
    if (kind_ == Kind::power) {
      if (a_ == 1.0) return 1.0;
      if (r <= 0.0) return 0.0;
      return a_ == 2.0 ? 2.0 * r : a_ * std::pow(r, a_ - 1.0);
    }
    if (r >= c_) return 0.0;
    const double t = 1.0 - r / c_;
    return std::exp(-a_ * t * t) * 2.0 * a_ * t / (c_ * (1.0 - std::exp(-a_)));
  }

  // Depth value where w'' jumps, if inside (0, 1).
  std::optional<double> kink() const noexcept {
    if (kind_ == Kind::zuo_exponential && c_ < 1.0) return c_;
    return std::nullopt;
  }

  // Order of vanishing of w at 0: w(r) ~ r^e as r -> 0.
  double tail_exponent() const noexcept { return kind_ == Kind::power ? a_ : 1.0; }

 private:
  WeightFunction(Kind kind, double a, double c) : kind_(kind), a_(a), c_(c) {}

  Kind kind_;
  double a_;
  double c_;
};

struct DepthParams {
  double center = 0.0;
  double scale = 1.0;

  DepthParams(double center_, double scale_) : center(center_), scale(scale_) {
    if (!(scale > 0.0)) throw DegenerateScale("depth scale must be positive");
  }
};

inline double projection_depth(double x, const DepthParams& dp) {
  return 1.0 / (1.0 + std::abs(x - dp.center) / dp.scale);
}

struct WeightSummary {
  std::size_t count = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

struct PwmResult {
  double value = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  WeightSummary weights_used;
  DepthParams depth{0.0, 1.0};
};

namespace detail {

// I(y <= t) with value 1/2 on the boundary.
inline double indicator_le(double y, double t) {
  if (y < t) return 1.0;
  if (y > t) return 0.0;
  return 0.5;
}

// I(lo < y <= hi) with value 1/2 at either endpoint.
inline double indicator_band(double y, double lo, double hi) {
  return indicator_le(y, hi) - indicator_le(y, lo);
}

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline PwmResult weighted_mean(std::span<const double> xs, const DepthParams& dp,
                               const WeightFunction& w) {
  PwmResult r;
  r.depth = dp;
  r.weights_used.count = xs.size();
  r.weights_used.min = std::numeric_limits<double>::infinity();
  r.weights_used.max = -std::numeric_limits<double>::infinity();
  for (double x : xs) {
    const double wi = w(projection_depth(x, dp));
    r.numerator += wi * x;
    r.denominator += wi;
    r.weights_used.min = std::min(r.weights_used.min, wi);
    r.weights_used.max = std::max(r.weights_used.max, wi);
  }
  if (!(r.denominator > 0.0)) throw DegenerateScale("all depth weights are zero");
  r.weights_used.mean = r.denominator / static_cast<double>(xs.size());
  r.value = r.numerator / r.denominator;
  return r;
}

inline void check_integrability(const DistributionModel& model, const WeightFunction& w) {
  if (model.heavy_tailed() && w.tail_exponent() < 3.0) {
    throw IntegrabilityError(std::string(model.name()) +
                             " needs a weight vanishing at least like r^3 at depth 0 (power p >= 3)");
  }
}

// Points x where w(PD(x)) has a kink beyond those at v and v +/- xi.
inline std::vector<double> weight_breaks(const WeightFunction& w, const RobustParams& p) {
  if (auto r = w.kink()) {
    const double d = p.xi * (1.0 / *r - 1.0);
    return {p.v - d, p.v + d};
  }
  return {};
}

}  // namespace detail

inline PwmResult pwm_population(const DistributionModel& model, const WeightFunction& w,
                                const RobustParams& params, const GaussLegendre& rule = default_rule()) {
  detail::check_integrability(model, w);
  const DepthParams dp(params.v, params.xi);
  const auto breaks = detail::weight_breaks(w, params);
  PwmResult r;
  r.depth = dp;
  // Integrate x - v rather than x so the symmetric case cancels cleanly.
  const double centred = integrate_dF(
      model, params, [&](double x) { return (x - params.v) * w(projection_depth(x, dp)); }, rule, breaks);
  r.denominator =
      integrate_dF(model, params, [&](double x) { return w(projection_depth(x, dp)); }, rule, breaks);
  if (!(r.denominator > 0.0) || !std::isfinite(centred) || !std::isfinite(r.denominator)) {
    throw IntegrabilityError("depth weighted mean integrals did not converge");
  }
  r.numerator = centred + params.v * r.denominator;
  r.value = params.v + centred / r.denominator;
  r.weights_used.mean = r.denominator;
  r.weights_used.min = 0.0;
  r.weights_used.max = w(1.0);
  return r;
}

inline PwmResult pwm_sample(const SortedSample& s, const WeightFunction& w) {
  const double mad = sample_mad(s);
  if (!(mad > 0.0)) throw DegenerateScale("sample MAD is zero");
  return detail::weighted_mean(s.sorted(), DepthParams(sample_median(s), mad), w);
}

// nullopt when the resample has MAD* = 0.
inline std::optional<PwmResult> pwm_bootstrap(const SortedSample& s, const ResamplePlan& plan,
                                              const WeightFunction& w) {
  const BootstrapSample bs = resample(s, plan);
  if (!(sample_mad(bs.resampled) > 0.0)) return std::nullopt;
  return pwm_sample(bs.resampled, w);
}

inline PwmResult modified_mad_pwm(const SortedSample& s, std::size_t k, const WeightFunction& w) {
  const double scale = modified_mad(s, k);
  if (!(scale > 0.0)) throw DegenerateScale("modified MAD is zero");
  return detail::weighted_mean(s.sorted(), DepthParams(sample_median(s), scale), w);
}

// Parts of f(x, y): f = A(x) (1/2 - I(v-xi < y <= v+xi)) + B(x) (1/2 - I(y <= v)).
inline double influence_band_coef(double x, const RobustParams& p) {
  const double d = std::abs(x - p.v);
  const double den = p.xi + d;
  return d / (den * den) / p.g_prime;
}

inline double influence_median_coef(double x, const RobustParams& p) {
  const double d = std::abs(x - p.v);
  const double den2 = (p.xi + d) * (p.xi + d);
  // beta = f_lo - f_hi: the median share of xi* - xi (see mad_linear_term)
  return (d * p.beta / (p.g_prime * den2) + p.xi * detail::sign(x - p.v) / den2) / p.fv;
}

inline double influence_f(double x, double y, const RobustParams& p) {
  if (!(p.fv > 0.0) || !(p.g_prime > 0.0)) throw DegenerateDensity("influence kernel needs F'(v), G'(xi) > 0");
  const double band = 0.5 - detail::indicator_band(y, p.v - p.xi, p.v + p.xi);
  const double med = 0.5 - detail::indicator_le(y, p.v);
  return influence_band_coef(x, p) * band + influence_median_coef(x, p) * med;
}

// K(x) with the inner integral over y taken by quadrature at this x.
inline double influence_K(double x, const DistributionModel& model, const WeightFunction& w,
                          const RobustParams& params, double pwm0,
                          const GaussLegendre& rule = default_rule()) {
  detail::check_integrability(model, w);
  const DepthParams dp(params.v, params.xi);
  const auto breaks = detail::weight_breaks(w, params);
  const double denominator =
      integrate_dF(model, params, [&](double y) { return w(projection_depth(y, dp)); }, rule, breaks);
  const double inner = integrate_dF(
      model, params,
      [&](double y) { return (y - pwm0) * w.derivative(projection_depth(y, dp)) * influence_f(y, x, params); },
      rule, breaks);
  return (inner + (x - pwm0) * w(projection_depth(x, dp))) / denominator;
}

// K with the inner integral reduced to two constants, since f(y, x) depends
// on x only through two step functions.
class InfluenceKernel {
 public:
  InfluenceKernel(const DistributionModel& model, const WeightFunction& w, const RobustParams& params,
                  const GaussLegendre& rule = default_rule())
      : model_(model),
        w_(w),
        params_(params),
        dp_(params.v, params.xi),
        rule_(&rule),
        breaks_(detail::weight_breaks(w, params)) {
    if (!(params.fv > 0.0) || !(params.g_prime > 0.0)) {
      throw DegenerateDensity("influence kernel needs F'(v), G'(xi) > 0");
    }
    pwm_ = pwm_population(model, w, params, rule);
    const double pwm0 = pwm_.value;
    band_ = integrate_dF(
        model, params,
        [&](double y) { return (y - pwm0) * w.derivative(projection_depth(y, dp_)) * influence_band_coef(y, params); },
        rule, breaks_);
    median_ = integrate_dF(
        model, params,
        [&](double y) {
          return (y - pwm0) * w.derivative(projection_depth(y, dp_)) * influence_median_coef(y, params);
        },
        rule, breaks_);
  }

  const PwmResult& population() const noexcept { return pwm_; }
  double pwm0() const noexcept { return pwm_.value; }
  double denominator() const noexcept { return pwm_.denominator; }
  double band_coefficient() const noexcept { return band_; }
  double median_coefficient() const noexcept { return median_; }

  // Inner integral of K at x (before division by the denominator).
  double inner_term(double x) const {
    const double band = 0.5 - detail::indicator_band(x, params_.v - params_.xi, params_.v + params_.xi);
    const double med = 0.5 - detail::indicator_le(x, params_.v);
    return band_ * band + median_ * med;
  }

  double operator()(double x) const {
    return (inner_term(x) + (x - pwm_.value) * w_(projection_depth(x, dp_))) / pwm_.denominator;
  }

  double mean() const {
    return integrate_dF(model_, params_, [&](double x) { return (*this)(x); }, *rule_, breaks_);
  }

  double second_moment() const {
    return integrate_dF(model_, params_, [&](double x) { const double k = (*this)(x); return k * k; }, *rule_, breaks_);
  }

  double variance() const {
    const double m = mean();
    return std::max(0.0, second_moment() - m * m);
  }

  double asym_variance() const {
    const double v = 2.0 * variance();
    if (!std::isfinite(v)) throw IntegrabilityError("var K(X) is not finite");
    return v;
  }

 private:
  DistributionModel model_;
  WeightFunction w_;
  RobustParams params_;
  DepthParams dp_;
  const GaussLegendre* rule_;
  std::vector<double> breaks_;
  PwmResult pwm_;
  double band_ = 0.0;
  double median_ = 0.0;
};

inline double pwm_asym_variance(const DistributionModel& model, const WeightFunction& w,
                                const RobustParams& params, const GaussLegendre& rule = default_rule()) {
  return InfluenceKernel(model, w, params, rule).asym_variance();
}

}  // namespace madstrap
