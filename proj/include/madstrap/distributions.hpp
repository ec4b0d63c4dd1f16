#pragma once

// Population models F and the robust constants (median, MAD, densities at
// v and v +/- xi) consumed by every asymptotic formula in the library.
//
// F is assumed twice differentiable at v and v +/- xi for the strong
// representation results; F'' is a smoothness hypothesis only and is never
// evaluated.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/roots.hpp>

#include "madstrap/errors.hpp"
#include "madstrap/rng.hpp"

namespace madstrap {

enum class Family { normal, laplace, cauchy, uniform, exponential, contaminated_normal };

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::normal: return "normal";
    case Family::laplace: return "laplace";
    case Family::cauchy: return "cauchy";
    case Family::uniform: return "uniform";
    case Family::exponential: return "exponential";
    case Family::contaminated_normal: return "contaminated_normal";
  }
  return "?";
}

inline Family parse_family(std::string_view name) {
  for (Family f : {Family::normal, Family::laplace, Family::cauchy, Family::uniform,
                   Family::exponential, Family::contaminated_normal}) {
    if (family_name(f) == name) return f;
  }
  throw DomainError("unknown distribution family: " + std::string(name));
}

namespace detail {

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

// Lower-tail quantile; exact in the sense that std_normal_cdf(result) == p to
// a few ulps for all p in (0, 1).
inline double std_normal_quantile(double p) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace detail

// A univariate continuous population. Immutable after construction.
class DistributionModel {
 public:
  static DistributionModel normal(double mu, double sigma) {
    require(sigma > 0.0 && std::isfinite(sigma) && std::isfinite(mu), "normal requires sigma > 0");
    return {Family::normal, mu, sigma};
  }
  static DistributionModel laplace(double mu, double b) {
    require(b > 0.0 && std::isfinite(b) && std::isfinite(mu), "laplace requires b > 0");
    return {Family::laplace, mu, b};
  }
  static DistributionModel cauchy(double x0, double gamma) {
    require(gamma > 0.0 && std::isfinite(gamma) && std::isfinite(x0), "cauchy requires gamma > 0");
    return {Family::cauchy, x0, gamma};
  }
  static DistributionModel uniform(double a, double b) {
    require(std::isfinite(a) && std::isfinite(b) && a < b, "uniform requires a < b");
    return {Family::uniform, a, b};
  }
  static DistributionModel exponential(double lambda) {
    require(lambda > 0.0 && std::isfinite(lambda), "exponential requires lambda > 0");
    return {Family::exponential, lambda, 0.0};
  }
  // (1 - eps_c) N(0, 1) + eps_c N(0, sigma_c^2)
  static DistributionModel contaminated_normal(double eps_c, double sigma_c) {
    require(eps_c >= 0.0 && eps_c < 1.0, "contaminated_normal requires 0 <= eps_c < 1");
    require(sigma_c > 0.0 && std::isfinite(sigma_c), "contaminated_normal requires sigma_c > 0");
    return {Family::contaminated_normal, eps_c, sigma_c};
  }

  Family family() const noexcept { return family_; }
  std::string_view name() const noexcept { return family_name(family_); }

  // Named parameters in a fixed order, e.g. {{"mu", 0}, {"sigma", 1}}.
  std::vector<std::pair<std::string, double>> parameters() const {
    switch (family_) {
      case Family::normal: return {{"mu", p1_}, {"sigma", p2_}};
      case Family::laplace: return {{"mu", p1_}, {"b", p2_}};
      case Family::cauchy: return {{"x0", p1_}, {"gamma", p2_}};
      case Family::uniform: return {{"a", p1_}, {"b", p2_}};
      case Family::exponential: return {{"lambda", p1_}};
      case Family::contaminated_normal: return {{"eps_c", p1_}, {"sigma_c", p2_}};
    }
    return {};
  }

  bool symmetric() const noexcept { return family_ != Family::exponential; }
  bool heavy_tailed() const noexcept { return family_ == Family::cauchy; }

  std::optional<double> mean() const {
    switch (family_) {
      case Family::normal:
      case Family::laplace: return p1_;
      case Family::cauchy: return std::nullopt;
      case Family::uniform: return 0.5 * (p1_ + p2_);
      case Family::exponential: return 1.0 / p1_;
      case Family::contaminated_normal: return 0.0;
    }
    return std::nullopt;
  }

  double cdf(double x) const {
    switch (family_) {
      case Family::normal: return detail::std_normal_cdf((x - p1_) / p2_);
      case Family::laplace: {
        const double z = (x - p1_) / p2_;
        return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
      }
      case Family::cauchy: {
        const double z = (x - p1_) / p2_;
        if (z < 0.0) return std::atan(-1.0 / z) / std::numbers::pi;
        return 0.5 + std::atan(z) / std::numbers::pi;
      }
      case Family::uniform:
        if (x <= p1_) return 0.0;
        if (x >= p2_) return 1.0;
        return (x - p1_) / (p2_ - p1_);
      case Family::exponential: return x <= 0.0 ? 0.0 : -std::expm1(-p1_ * x);
      case Family::contaminated_normal:
        return (1.0 - p1_) * detail::std_normal_cdf(x) + p1_ * detail::std_normal_cdf(x / p2_);
    }
    return 0.0;
  }

  // 1 - F(x), accurate in the upper tail.
  double sf(double x) const {
    switch (family_) {
      case Family::normal: return detail::std_normal_cdf(-(x - p1_) / p2_);
      case Family::laplace: {
        const double z = (x - p1_) / p2_;
        return z > 0.0 ? 0.5 * std::exp(-z) : 1.0 - 0.5 * std::exp(z);
      }
      case Family::cauchy: {
        const double z = (x - p1_) / p2_;
        if (z > 0.0) return std::atan(1.0 / z) / std::numbers::pi;
        return 0.5 - std::atan(z) / std::numbers::pi;
      }
      case Family::uniform: return 1.0 - cdf(x);
      case Family::exponential: return x <= 0.0 ? 1.0 : std::exp(-p1_ * x);
      case Family::contaminated_normal:
        return (1.0 - p1_) * detail::std_normal_cdf(-x) + p1_ * detail::std_normal_cdf(-x / p2_);
    }
    return 0.0;
  }

  double pdf(double x) const {
    switch (family_) {
      case Family::normal: return detail::std_normal_pdf((x - p1_) / p2_) / p2_;
      case Family::laplace: return 0.5 * std::exp(-std::abs(x - p1_) / p2_) / p2_;
      case Family::cauchy: {
        const double z = (x - p1_) / p2_;
        return 1.0 / (std::numbers::pi * p2_ * (1.0 + z * z));
      }
      case Family::uniform: return (x < p1_ || x > p2_) ? 0.0 : 1.0 / (p2_ - p1_);
      case Family::exponential: return x < 0.0 ? 0.0 : p1_ * std::exp(-p1_ * x);
      case Family::contaminated_normal:
        return (1.0 - p1_) * detail::std_normal_pdf(x) + p1_ * detail::std_normal_pdf(x / p2_) / p2_;
    }
    return 0.0;
  }

  // inf{x : F(x) >= p}, p in (0, 1).
  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile requires 0 < p < 1");
    switch (family_) {
      case Family::normal: return p1_ + p2_ * detail::std_normal_quantile(p);
      case Family::laplace:
        return p < 0.5 ? p1_ + p2_ * std::log(2.0 * p) : p1_ - p2_ * std::log(2.0 - 2.0 * p);
      case Family::cauchy:
        if (p == 0.5) return p1_;
        return p < 0.5 ? p1_ - p2_ / std::tan(std::numbers::pi * p)
                       : p1_ + p2_ / std::tan(std::numbers::pi * (1.0 - p));
      case Family::uniform: return p1_ + p * (p2_ - p1_);
      case Family::exponential: return -std::log1p(-p) / p1_;
      case Family::contaminated_normal: return mixture_quantile(p);
    }
    return 0.0;
  }

  // Upper-tail quantile: inf{x : 1 - F(x) <= q}, q in (0, 1). Equal to
  // quantile(1 - q) but does not lose precision as q -> 0.
  double quantile_upper(double q) const {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("quantile_upper requires 0 < q < 1");
    switch (family_) {
      case Family::normal: return p1_ - p2_ * detail::std_normal_quantile(q);
      case Family::laplace:
        return q < 0.5 ? p1_ - p2_ * std::log(2.0 * q) : p1_ + p2_ * std::log(2.0 - 2.0 * q);
      case Family::cauchy:
        if (q == 0.5) return p1_;
        return q < 0.5 ? p1_ + p2_ / std::tan(std::numbers::pi * q)
                       : p1_ - p2_ / std::tan(std::numbers::pi * (1.0 - q));
      case Family::uniform: return p2_ - q * (p2_ - p1_);
      case Family::exponential: return -std::log(q) / p1_;
      case Family::contaminated_normal: return -mixture_quantile(q);
    }
    return 0.0;
  }

 private:
  DistributionModel(Family f, double p1, double p2) : family_(f), p1_(p1), p2_(p2) {}

  static void require(bool ok, const char* what) {
    if (!ok) throw DomainError(what);
  }

  // The mixture quantile lies between the component quantiles.
  double mixture_quantile(double p) const {
    const double z = detail::std_normal_quantile(p);
    double lo = std::min(z, z * p2_);
    double hi = std::max(z, z * p2_);
    if (lo == hi) return lo;
    auto f = [&](double x) { return std::make_pair(cdf(x) - p, pdf(x)); };
    std::uintmax_t iters = 200;
    return boost::math::tools::newton_raphson_iterate(f, 0.5 * (lo + hi), lo, hi, 52, iters);
  }

  Family family_;
  double p1_;
  double p2_;
};

// Population constants entering the Bahadur linear terms and the limiting
// covariance of (Med*, MAD*).
struct RobustParams {
  double v = 0.0;        // median
  double xi = 0.0;       // MAD, the median of G(y) = F(v + y) - F(v - y -)
  double fv = 0.0;       // F'(v)
  double f_lo = 0.0;     // F'(v - xi)
  double f_hi = 0.0;     // F'(v + xi)
  double g_prime = 0.0;  // G'(xi) = f_lo + f_hi
  double alpha = 0.0;    // F(v - xi) + F(v + xi)
  double beta = 0.0;     // f_lo - f_hi
  double gamma = 0.0;    // beta^2 + 4 (1 - alpha) beta fv
  double cdf_lo = 0.0;   // F(v - xi)
};

// MAD of the population by bisection of t -> F(v + t) - F(v - t) - 1/2 on
// (0, quantile(0.9999) - v]. F is continuous at v +/- xi, so F(v - t -) is
// replaced by F(v - t).
inline RobustParams robust_params(const DistributionModel& model) {
  RobustParams rp;
  rp.v = model.quantile(0.5);
  const double v = rp.v;
  auto mass = [&](double t) { return model.cdf(v + t) - model.cdf(v - t); };

  double lo = 0.0;
  double hi = model.quantile(0.9999) - v;
  if (!(hi > 0.0) || !(mass(hi) > 0.5)) {
    throw ModelUnsupported("cannot bracket the MAD root for " + std::string(model.name()));
  }
  // Run to full double resolution; this is well below the 1e-12 width the
  // Sigma formulas need.
  for (int iter = 0; iter < 2000; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (mass(mid) < 0.5) lo = mid;
    else hi = mid;
  }
  rp.xi = 0.5 * (lo + hi);

  rp.fv = model.pdf(v);
  rp.f_lo = model.pdf(v - rp.xi);
  // symmetric families: the two densities agree mathematically, keep them bit-equal
  rp.f_hi = model.symmetric() ? rp.f_lo : model.pdf(v + rp.xi);
  rp.g_prime = rp.f_lo + rp.f_hi;
  rp.cdf_lo = model.cdf(v - rp.xi);
  rp.alpha = rp.cdf_lo + model.cdf(v + rp.xi);
  rp.beta = rp.f_lo - rp.f_hi;
  rp.gamma = rp.beta * rp.beta + 4.0 * (1.0 - rp.alpha) * rp.beta * rp.fv;

  if (!(rp.fv > 0.0) || !(rp.g_prime > 0.0)) {
    throw DegenerateDensity("density vanishes at v or v +/- xi for " + std::string(model.name()));
  }
  return rp;
}

// n i.i.d. draws by quantile transform of the counter stream keyed by `seed`.
inline std::vector<double> draw_sample(const DistributionModel& model, std::size_t n,
                                       std::uint64_t seed) {
  if (n == 0) throw DomainError("draw_sample requires n >= 1");
  CounterRng rng(seed);
  std::vector<double> out(n);
  for (auto& x : out) x = model.quantile(rng.uniform01());
  return out;
}

}  // namespace madstrap
