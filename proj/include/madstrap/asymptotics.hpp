#pragma once

// Limiting covariance of sqrt(n) (Med* - v, MAD* - xi) and an empirical check
// of draws against it.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "madstrap/distributions.hpp"
#include "madstrap/errors.hpp"

namespace madstrap {

struct SigmaMatrix {
  double s11 = 0.0;
  double s12 = 0.0;
  double s22 = 0.0;
  RobustParams params_used;

  double determinant() const noexcept { return s11 * s22 - s12 * s12; }

  SigmaMatrix scaled(double factor) const {
    SigmaMatrix out = *this;
    out.s11 *= factor;
    out.s12 *= factor;
    out.s22 *= factor;
    return out;
  }
};

//   s11 = 1 / (2 F'(v)^2)
//   s12 = (1 - 4 F(v - xi) + beta / F'(v)) / (2 F'(v) G'(xi))
//   s22 = (1 + gamma / F'(v)^2) / (2 G'(xi)^2)
// This is twice the covariance of the plain sample (Med_n, MAD_n): the
// bootstrap adds an independent copy of the sampling fluctuation.
inline SigmaMatrix sigma_matrix(const RobustParams& params) {
  const double fv = params.fv;
  const double gp = params.g_prime;
  if (!(fv > 0.0) || !(gp > 0.0)) throw DegenerateDensity("Sigma requires F'(v) > 0 and G'(xi) > 0");

  SigmaMatrix sm;
  sm.params_used = params;
  sm.s11 = 1.0 / (2.0 * fv * fv);
  sm.s12 = (1.0 - 4.0 * params.cdf_lo + params.beta / fv) / (2.0 * fv * gp);
  sm.s22 = (1.0 + params.gamma / (fv * fv)) / (2.0 * gp * gp);
  if (!(sm.s22 > 0.0) || !(sm.determinant() > 0.0)) {
    throw ModelUnsupported("Sigma is not positive definite");
  }
  return sm;
}

struct NormalityThresholds {
  double diag_rel = 0.05;   // max |emp_ii / s_ii - 1|
  double offdiag_abs = 0.05;
  double ks_coeff = 1.63;   // asymptotic Kolmogorov 1% point; critical value ks_coeff / sqrt(reps)
};

struct NormalityReport {
  std::size_t n = 0;
  std::size_t reps = 0;
  std::array<std::array<double, 2>, 2> emp_cov{};
  std::array<double, 2> emp_mean{};
  double max_rel_diag_err = 0.0;
  double abs_offdiag_err = 0.0;
  double ks_stat_1 = 0.0;
  double ks_stat_2 = 0.0;
  double ks_critical = 0.0;
  bool diag_ok = false;
  bool offdiag_ok = false;
  bool ks_ok = false;
  bool pass = false;
  NormalityThresholds thresholds;
};

using Pair = std::array<double, 2>;

// Sample covariance (divisor reps - 1) and mean of paired draws.
inline std::array<std::array<double, 2>, 2> empirical_covariance(std::span<const Pair> draws,
                                                                 Pair* mean_out = nullptr) {
  const double N = static_cast<double>(draws.size());
  Pair mean{0.0, 0.0};
  for (const auto& d : draws) {
    mean[0] += d[0];
    mean[1] += d[1];
  }
  mean[0] /= N;
  mean[1] /= N;
  double c11 = 0.0, c12 = 0.0, c22 = 0.0;
  for (const auto& d : draws) {
    const double a = d[0] - mean[0];
    const double b = d[1] - mean[1];
    c11 += a * a;
    c12 += a * b;
    c22 += b * b;
  }
  const double den = N - 1.0;
  if (mean_out) *mean_out = mean;
  return {{{c11 / den, c12 / den}, {c12 / den, c22 / den}}};
}

// Kolmogorov distance between the empirical law of `z` and N(0, 1).
inline double ks_statistic_normal(std::vector<double> z) {
  std::sort(z.begin(), z.end());
  const double N = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double F = detail::std_normal_cdf(z[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / N - F, F - static_cast<double>(i) / N});
  }
  return d;
}

// `draws` are scaled pairs, e.g. sqrt(n) (Med* - v, MAD* - xi). Marginals are
// centred at their empirical mean and scaled by the target Sigma before the KS
// test; the O(1/sqrt(n)) finite-sample bias of the MAD would otherwise
// dominate the statistic at large rep counts. The mean is reported.
inline NormalityReport joint_normality_check(std::span<const Pair> draws, const SigmaMatrix& sigma,
                                             const NormalityThresholds& th = {},
                                             std::size_t n = 0) {
  if (draws.size() < 100) throw InsufficientData("joint normality check needs at least 100 draws");

  NormalityReport r;
  r.n = n;
  r.reps = draws.size();
  r.thresholds = th;
  r.emp_cov = empirical_covariance(draws, &r.emp_mean);
  r.max_rel_diag_err = std::max(std::abs(r.emp_cov[0][0] / sigma.s11 - 1.0),
                                std::abs(r.emp_cov[1][1] / sigma.s22 - 1.0));
  r.abs_offdiag_err = std::abs(r.emp_cov[0][1] - sigma.s12);

  std::vector<double> z1(draws.size()), z2(draws.size());
  const double sd1 = std::sqrt(sigma.s11);
  const double sd2 = std::sqrt(sigma.s22);
  for (std::size_t i = 0; i < draws.size(); ++i) {
    z1[i] = (draws[i][0] - r.emp_mean[0]) / sd1;
    z2[i] = (draws[i][1] - r.emp_mean[1]) / sd2;
  }
  r.ks_stat_1 = ks_statistic_normal(std::move(z1));
  r.ks_stat_2 = ks_statistic_normal(std::move(z2));
  r.ks_critical = th.ks_coeff / std::sqrt(static_cast<double>(draws.size()));

  r.diag_ok = r.max_rel_diag_err <= th.diag_rel;
  r.offdiag_ok = r.abs_offdiag_err <= th.offdiag_abs;
  r.ks_ok = r.ks_stat_1 < r.ks_critical && r.ks_stat_2 < r.ks_critical;
  r.pass = r.diag_ok && r.offdiag_ok && r.ks_ok;
  return r;
}

}  // namespace madstrap
