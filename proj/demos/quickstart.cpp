// Median/MAD of a sample, one bootstrap replicate with its Bahadur
// decomposition, and the depth weighted mean with its limiting variance.

#include <cstdio>

#include "madstrap/asymptotics.hpp"
#include "madstrap/bahadur.hpp"
#include "madstrap/bootstrap.hpp"
#include "madstrap/depth.hpp"

int main() {
  using namespace madstrap;

  const auto model = DistributionModel::normal(0.0, 1.0);
  const auto params = robust_params(model);
  std::printf("v = %.6f  xi = %.6f\n", params.v, params.xi);

  const auto sigma = sigma_matrix(params);
  std::printf("Sigma = [[%.6f, %.6f], [%.6f, %.6f]]\n", sigma.s11, sigma.s12, sigma.s12, sigma.s22);

  const SortedSample sample(draw_sample(model, 1000, 42));
  std::printf("Med_n = %.6f  MAD_n = %.6f\n", sample_median(sample), sample_mad(sample));

  const auto boot = resample(sample, {42, 0});
  const auto d = decompose(boot, params, EstimatorKind::mad());
  std::printf("MAD* = %.6f  linear = %.6f  remainder = %.3g\n", d.estimate, d.linear_term, d.remainder);

  const auto w = WeightFunction::power(2.0);
  const InfluenceKernel kernel(model, w, params);
  std::printf("PWM_n = %.6f  PWM(F) = %.6f  2 var K = %.6f\n", pwm_sample(sample, w).value, kernel.pwm0(),
              kernel.asym_variance());
  return 0;
}
