#pragma once

// Gauss-Legendre integration of functions against a population dF.
//
// Integrals over the real line are taken in probability coordinates: the left
// half uses u = F(x) on (0, 1/2], the right half uses q = 1 - F(x) on
// (0, 1/2], so both tails are resolved without cancellation. Panels break at
// the images of v - xi, v and v + xi, where the depth-weighted integrands have
// kinks or jumps (plus any caller-supplied points), and each tail is further split into geometrically graded
// panels so the open endpoint contributes below double precision for bounded
// integrands.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "madstrap/distributions.hpp"

namespace madstrap {

class GaussLegendre {
 public:
  explicit GaussLegendre(std::size_t order) : nodes_(order), weights_(order) {
    const std::size_t n = order;
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
      double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                          (static_cast<double>(n) + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = 0.0;
        for (std::size_t j = 1; j <= n; ++j) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / static_cast<double>(j);
        }
        dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
        const double dz = p0 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      nodes_[i] = -z;
      nodes_[n - 1 - i] = z;
      weights_[i] = weights_[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }

  std::size_t order() const noexcept { return nodes_.size(); }
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  template <class F>
  double integrate(F&& f, double a, double b) const {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) acc += weights_[i] * f(mid + half * nodes_[i]);
    return acc * half;
  }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

inline constexpr std::size_t kDefaultQuadratureOrder = 256;

inline const GaussLegendre& default_rule() {
  static const GaussLegendre rule(kDefaultQuadratureOrder);
  return rule;
}

// Integrates g(x) dF(x) over the real line. `breaks` adds panel edges where
// g has further kinks.
template <class G>
double integrate_dF(const DistributionModel& model, const RobustParams& params, G&& g,
                    const GaussLegendre& rule = default_rule(), std::span<const double> breaks = {}) {
  // Panel edges in probability coordinates, ascending from the tail to 1/2.
  std::vector<double> lo_edges{model.cdf(params.v - params.xi)};
  std::vector<double> hi_edges{model.sf(params.v + params.xi)};
  for (double x : breaks) {
    if (x < params.v) lo_edges.push_back(model.cdf(x));
    if (x > params.v) hi_edges.push_back(model.sf(x));
  }
  for (auto* e : {&lo_edges, &hi_edges}) {
    std::sort(e->begin(), e->end());
    e->erase(std::unique(e->begin(), e->end()), e->end());
    e->push_back(0.5);
  }

  auto lower = [&](double u) { return g(model.quantile(u)); };
  auto upper = [&](double q) { return g(model.quantile_upper(q)); };

  auto half_line = [&](auto& integrand, const std::vector<double>& edges) {
    double acc = 0.0;
    double b = edges.front();
    if (b > 0.0) {
      for (int k = 0; k < 8; ++k) {
        const double a = b * 1e-2;
        acc += rule.integrate(integrand, a, b);
        b = a;
      }
      acc += rule.integrate(integrand, 0.0, b);
    }
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      if (edges[i + 1] > edges[i]) acc += rule.integrate(integrand, edges[i], edges[i + 1]);
    }
    return acc;
  };

  return half_line(lower, lo_edges) + half_line(upper, hi_edges);
}

}  // namespace madstrap
