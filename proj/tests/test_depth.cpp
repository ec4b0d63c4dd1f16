#include <catch_amalgamated.hpp>

#include <cmath>
#include <optional>
#include <random>
#include <tuple>
#include <vector>

#include "madstrap/depth.hpp"
#include "oracle_fixtures.hpp"

using namespace madstrap;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const GaussLegendre& fine_rule() {
  static const GaussLegendre rule(512);
  return rule;
}

struct Case {
  const char* tag;
  DistributionModel model;
  WeightFunction w;
  double pwm, den, asymvar;
};

std::vector<Case> oracle_cases() {
  return {
      {"normal p2", DistributionModel::normal(0, 1), WeightFunction::power(2), oracle::pwm_normal_p2,
       oracle::pwm_den_normal_p2, oracle::asymvar_normal_p2},
      {"laplace p2", DistributionModel::laplace(0, 1), WeightFunction::power(2), oracle::pwm_laplace_p2,
       oracle::pwm_den_laplace_p2, oracle::asymvar_laplace_p2},
      {"exponential p2", DistributionModel::exponential(1), WeightFunction::power(2), oracle::pwm_exponential_p2,
       oracle::pwm_den_exponential_p2, oracle::asymvar_exponential_p2},
      {"exponential p1", DistributionModel::exponential(1), WeightFunction::power(1), oracle::pwm_exponential_p1,
       oracle::pwm_den_exponential_p1, oracle::asymvar_exponential_p1},
      {"exponential zuo", DistributionModel::exponential(1), WeightFunction::zuo_exponential(3, 0.8),
       oracle::pwm_exponential_zuo, oracle::pwm_den_exponential_zuo, oracle::asymvar_exponential_zuo},
      {"cauchy p3", DistributionModel::cauchy(0, 1), WeightFunction::power(3), oracle::pwm_cauchy_p3,
       oracle::pwm_den_cauchy_p3, oracle::asymvar_cauchy_p3},
      {"contaminated p2", DistributionModel::contaminated_normal(0.1, 3), WeightFunction::power(2),
       oracle::pwm_contaminated_p2, oracle::pwm_den_contaminated_p2, oracle::asymvar_contaminated_p2},
  };
}

std::optional<double> pwm_or_skip(const SortedSample& s) {
  if (!(sample_mad(s) > 0.0)) return std::nullopt;
  return pwm_sample(s, WeightFunction::power(2)).value;
}

}  // namespace

TEST_CASE("weight functions", "[depth]") {
  for (const auto& w : {WeightFunction::power(1), WeightFunction::power(2), WeightFunction::power(2.5),
                        WeightFunction::power(3), WeightFunction::zuo_exponential(3, 0.8),
                        WeightFunction::zuo_exponential(0.5, 1.0)}) {
    INFO(w.name() << " p=" << w.p() << " k=" << w.k());
    REQUIRE(w(0.0) == 0.0);
    double prev = 0.0;
    for (int i = 1; i <= 1000; ++i) {
      const double r = i / 1000.0;
      REQUIRE(w(r) >= prev);
      prev = w(r);
    }
    for (int i = 1; i < 100; ++i) {
      const double r = i / 100.0;
      const double h = 1e-6;
      const double fd = (w(r + h) - w(r - h)) / (2 * h);
      // w'' may jump at r = c, which costs the central difference O(h)
      REQUIRE(std::abs(fd - w.derivative(r)) <= 1e-5);
    }
  }
  CHECK(WeightFunction::zuo_exponential(3, 0.8)(0.9) == 1.0);
  CHECK(WeightFunction::zuo_exponential(3, 0.8).derivative(0.8) == 0.0);
  CHECK(WeightFunction::default_weight().p() == 2.0);
  CHECK_THROWS_AS(WeightFunction::power(0.5), DomainError);
  CHECK_THROWS_AS(WeightFunction::zuo_exponential(0, 1), DomainError);
  CHECK_THROWS_AS(WeightFunction::zuo_exponential(3, 1.5), DomainError);
  CHECK_THROWS_AS(WeightFunction::zuo_exponential(3, 0), DomainError);
}

TEST_CASE("projection depth", "[depth]") {
  const DepthParams dp(2.0, 0.5);
  CHECK(projection_depth(2.0, dp) == 1.0);
  CHECK(projection_depth(2.5, dp) == 0.5);
  CHECK(projection_depth(1.5, dp) == 0.5);
  CHECK(projection_depth(3.5, dp) == 0.25);
  CHECK_THROWS_AS(DepthParams(0, 0), DegenerateScale);
  CHECK_THROWS_AS(DepthParams(0, -1), DegenerateScale);
}

TEST_CASE("projection depth is affine invariant", "[depth][property]") {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> ua(0.1, 10), ub(-10, 10), ux(-20, 20);
  for (int i = 0; i < 200; ++i) {
    const double a = (i % 2 ? 1 : -1) * ua(gen), b = ub(gen);
    const double c = ub(gen), s = ua(gen), x = ux(gen);
    const double lhs = projection_depth(a * x + b, DepthParams(a * c + b, std::abs(a) * s));
    REQUIRE_THAT(lhs, WithinAbs(projection_depth(x, DepthParams(c, s)), 1e-10));
  }
}

TEST_CASE("sample depth weighted mean", "[depth]") {
  const double a = 1.7;
  CHECK(pwm_sample(SortedSample({-a, -a, a, a}), WeightFunction::power(2)).value == 0.0);
  const auto r = pwm_sample(SortedSample({1, 2, 3, 4, 5}), WeightFunction::power(1));
  CHECK_THAT(r.value, WithinAbs(3.0, 1e-15));
  CHECK_THAT(r.denominator, WithinAbs(8.0 / 3.0, 1e-15));
  CHECK(r.value == r.numerator / r.denominator);
  CHECK(r.weights_used.count == 5);
  CHECK(r.weights_used.max == 1.0);
  CHECK_THAT(r.weights_used.min, WithinAbs(1.0 / 3.0, 1e-15));
  CHECK(r.depth.center == 3.0);
  CHECK(r.depth.scale == 1.0);

  CHECK_THAT(pwm_sample(SortedSample({0.5, 1.0, 2.0, 4.0, 7.0}), WeightFunction::power(2)).value,
             WithinAbs(oracle::pwm_sample_p2, 1e-14));
  CHECK_THROWS_AS(pwm_sample(SortedSample({3.0}), WeightFunction::power(2)), DegenerateScale);
  CHECK_THROWS_AS(pwm_sample(SortedSample({1, 1, 1, 2}), WeightFunction::power(2)), DegenerateScale);
}

TEST_CASE("weights never decrease toward the median", "[depth][property]") {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> z;
  std::vector<double> xs(101);
  for (auto& x : xs) x = z(gen);
  const SortedSample s(xs);
  const DepthParams dp(sample_median(s), sample_mad(s));
  for (const auto& w : {WeightFunction::power(2), WeightFunction::zuo_exponential(3, 0.7)}) {
    for (double xi : xs) {
      for (double xj : xs) {
        if (std::abs(xi - dp.center) < std::abs(xj - dp.center)) {
          REQUIRE(w(projection_depth(xi, dp)) >= w(projection_depth(xj, dp)));
        }
      }
    }
  }
}

TEST_CASE("depth weighted mean is affine equivariant", "[depth][property]") {
  std::mt19937_64 gen(22);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> ua(0.1, 10), ub(-10, 10);
  const auto w = WeightFunction::power(2);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> xs(5 + i % 30), ys;
    for (auto& x : xs) x = z(gen);
    const double a = (i % 2 ? 1 : -1) * ua(gen), b = ub(gen);
    for (double x : xs) ys.push_back(a * x + b);
    const double px = pwm_sample(SortedSample(xs), w).value;
    const double py = pwm_sample(SortedSample(ys), w).value;
    REQUIRE_THAT(py, WithinAbs(a * px + b, 1e-10));
  }
}

TEST_CASE("bootstrap depth weighted mean", "[depth][bootstrap]") {
  const auto w = WeightFunction::power(2);
  for (std::uint64_t r = 0; r < 20; ++r) CHECK_FALSE(pwm_bootstrap(SortedSample({5, 5, 5, 5}), {1, r}, w));

  const SortedSample s({0.3, 1.1, 2.9, 4.0, 5.5, -2.0});
  const auto a = pwm_bootstrap(s, {8, 2}, w);
  const auto b = pwm_bootstrap(s, {8, 2}, w);
  REQUIRE(a);
  REQUIRE(b);
  CHECK(a->value == b->value);

  SECTION("exact laws") {
    const auto p123 = enumerate_resamples(SortedSample({1, 2, 3}), pwm_or_skip);
    CHECK(p123.total == 27);
    CHECK(p123.excluded == static_cast<std::uint64_t>(oracle::law_p123_pwm_excluded));
    CHECK(p123.included() == 6);
    CHECK_THAT(p123.mean(), WithinAbs(oracle::law_p123_pwm_mean, 1e-15));

    const auto p010 = enumerate_resamples(SortedSample({0, 10}), pwm_or_skip);
    CHECK(p010.excluded == static_cast<std::uint64_t>(oracle::law_p0_10_pwm_excluded));
    CHECK_THAT(p010.mean(), WithinAbs(oracle::law_p0_10_pwm_mean, 1e-15));

    const auto p4 = enumerate_resamples(SortedSample({0.3, 1.1, 2.9, 4.0}), pwm_or_skip);
    CHECK(p4.excluded == static_cast<std::uint64_t>(oracle::law_p4_pwm_excluded));
    CHECK_THAT(p4.mean(), WithinAbs(oracle::law_p4_pwm_mean, 1e-14));
    CHECK_THAT(p4.variance(), WithinAbs(oracle::law_p4_pwm_var, 1e-14));
  }
}

TEST_CASE("modified-MAD depth weighted mean", "[depth]") {
  const auto w1 = WeightFunction::power(1);
  const SortedSample s({0.3, 1.1, 2.9, 4.0, 5.5, -2.0});
  CHECK(modified_mad_pwm(s, 1, w1).value == pwm_sample(s, w1).value);
  CHECK_THAT(modified_mad_pwm(SortedSample({-2, -1, 1, 2}), 2, w1).value, WithinAbs(0.0, 1e-15));
  CHECK_THAT(modified_mad_pwm(SortedSample({1, 2, 3, 4, 5}), 3, w1).value, WithinAbs(3.0, 1e-15));
  CHECK(modified_mad_pwm(SortedSample({1, 2, 3, 4, 5}), 3, w1).depth.scale == 2.0);
  CHECK_THAT(modified_mad_pwm(SortedSample({0, 1, 2, 3, 10}), 2, w1).value,
             WithinAbs(oracle::modified_pwm_k2_p1, 1e-14));
  CHECK_THROWS_AS(modified_mad_pwm(SortedSample({0, 0, 0, 0, 0}), 2, w1), DegenerateScale);
}

TEST_CASE("population depth weighted mean", "[depth]") {
  for (const auto& c : oracle_cases()) {
    INFO(c.tag);
    const auto p = robust_params(c.model);
    const auto r = pwm_population(c.model, c.w, p);
    CHECK_THAT(r.value, WithinAbs(c.pwm, 1e-9));
    CHECK_THAT(r.denominator, WithinRel(c.den, 1e-9));
    CHECK(r.denominator > 0.0);
    if (c.model.symmetric()) CHECK_THAT(r.value, WithinAbs(p.v, 1e-14));
  }
  const auto moved = DistributionModel::normal(1.5, 2.0);
  CHECK_THAT(pwm_population(moved, WeightFunction::power(2), robust_params(moved)).value, WithinAbs(1.5, 1e-12));

  const auto e = pwm_population(DistributionModel::exponential(1), WeightFunction::power(2),
                                robust_params(DistributionModel::exponential(1)));
  CHECK(e.value > 0.0);
  CHECK(e.value < 1.0);
}

TEST_CASE("heavy tails need a fast-vanishing weight", "[depth]") {
  const auto c = DistributionModel::cauchy(0, 1);
  const auto p = robust_params(c);
  CHECK_THROWS_AS(pwm_population(c, WeightFunction::power(2), p), IntegrabilityError);
  CHECK_THROWS_AS(pwm_population(c, WeightFunction::zuo_exponential(3, 1), p), IntegrabilityError);
  CHECK_THROWS_AS(InfluenceKernel(c, WeightFunction::power(2.9), p), IntegrabilityError);
  CHECK_NOTHROW(pwm_population(c, WeightFunction::power(3), p));
}

TEST_CASE("influence f", "[depth]") {
  const auto np = robust_params(DistributionModel::normal(0, 1));
  const auto ep = robust_params(DistributionModel::exponential(1));
  for (double y : {-3.0, -0.5, 0.0, 0.2, np.xi, 4.0}) CHECK(influence_f(np.v, y, np) == 0.0);
  CHECK_THAT(influence_f(np.v + np.xi, -2.0, np), WithinAbs(oracle::f_normal_hi_below, 1e-14));
  CHECK_THAT(influence_f(np.v + np.xi, -2.0, np), WithinAbs(-0.1729447583, 1e-9));
  CHECK_THAT(influence_f(np.v + np.xi, 2.0, np), WithinAbs(oracle::f_normal_hi_above, 1e-14));
  CHECK_THAT(influence_f(0.3, 0.1, np), WithinAbs(oracle::f_normal_mid, 1e-14));
  CHECK_THAT(influence_f(1.5, 0.2, ep), WithinAbs(oracle::f_exp_a, 1e-14));
  CHECK_THAT(influence_f(0.1, 1.0, ep), WithinAbs(oracle::f_exp_b, 1e-14));

  RobustParams bad = np;
  bad.g_prime = 0;
  CHECK_THROWS_AS(influence_f(0, 0, bad), DegenerateDensity);

  SECTION("symmetry for symmetric models") {
    const auto lp = robust_params(DistributionModel::laplace(2, 1.5));
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> u(-6, 10);
    for (int i = 0; i < 1000; ++i) {
      const double x = u(gen), y = u(gen);
      REQUIRE_THAT(influence_f(2 * lp.v - x, 2 * lp.v - y, lp), WithinAbs(influence_f(x, y, lp), 1e-12));
    }
    // including the indicator boundaries
    for (double y : {lp.v, lp.v - lp.xi, lp.v + lp.xi}) {
      REQUIRE_THAT(influence_f(2 * lp.v - 3.1, 2 * lp.v - y, lp), WithinAbs(influence_f(3.1, y, lp), 1e-12));
    }
  }
}

TEST_CASE("influence kernel K", "[depth]") {
  for (const auto& c : oracle_cases()) {
    INFO(c.tag);
    const auto p = robust_params(c.model);
    const InfluenceKernel K(c.model, c.w, p);
    CHECK(std::abs(K.mean()) <= 1e-6);
    CHECK_THAT(K.asym_variance(), WithinRel(c.asymvar, 1e-8));
    CHECK(K.asym_variance() >= 0.0);
    CHECK(K.denominator() == K.population().denominator);
    if (c.model.symmetric()) {
      CHECK(std::abs(K(p.v)) <= 1e-8);
      CHECK_THAT(K.asym_variance(), WithinRel(2.0 * K.second_moment(), 1e-12));
    }
  }

  const auto nm = DistributionModel::normal(0, 1);
  const auto np = robust_params(nm);
  const InfluenceKernel Kn(nm, WeightFunction::power(2), np);
  CHECK_THAT(Kn(0.3), WithinAbs(oracle::K_normal_p2_at_0_3, 1e-10));
  CHECK_THAT(Kn(1.5), WithinAbs(oracle::K_normal_p2_at_1_5, 1e-10));
  CHECK_THAT(Kn(-0.3), WithinAbs(-oracle::K_normal_p2_at_0_3, 1e-10));
  const auto em = DistributionModel::exponential(1);
  const InfluenceKernel Ke(em, WeightFunction::power(2), robust_params(em));
  CHECK_THAT(Ke(0.3), WithinAbs(oracle::K_exponential_p2_at_0_3, 1e-10));
  CHECK_THAT(Ke(2.0), WithinAbs(oracle::K_exponential_p2_at_2, 1e-10));
  CHECK_THAT(pwm_asym_variance(em, WeightFunction::power(2), robust_params(em)),
             WithinRel(oracle::asymvar_exponential_p2, 1e-8));
}

TEST_CASE("inner integral of K at two resolutions", "[depth]") {
  for (const auto& c : oracle_cases()) {
    INFO(c.tag);
    const auto p = robust_params(c.model);
    const InfluenceKernel K(c.model, c.w, p);
    const DepthParams dp(p.v, p.xi);
    for (double t : {-2.5, -1.0, -0.4, 0.1, 0.7, 1.3, 3.0}) {
      const double x = p.v + t * p.xi;
      if (c.model.family() == Family::exponential && x < 0) continue;
      const double direct = influence_K(x, c.model, c.w, p, K.pwm0());
      const double direct_fine = influence_K(x, c.model, c.w, p, K.pwm0(), fine_rule());
      REQUIRE_THAT(direct, WithinAbs(direct_fine, 1e-8));
      REQUIRE_THAT(K(x), WithinAbs(direct, 1e-10));
      const double inner = K(x) - (x - K.pwm0()) * c.w(projection_depth(x, dp)) / K.denominator();
      REQUIRE_THAT(inner, WithinAbs(K.inner_term(x) / K.denominator(), 1e-12));
    }
  }
}

TEST_CASE("quadrature converges", "[depth]") {
  for (const auto& c : oracle_cases()) {
    INFO(c.tag);
    const auto p = robust_params(c.model);
    const auto coarse = pwm_population(c.model, c.w, p);
    const auto fine = pwm_population(c.model, c.w, p, fine_rule());
    CHECK(std::abs(coarse.value - fine.value) < 1e-8);
    CHECK(std::abs(pwm_asym_variance(c.model, c.w, p) - pwm_asym_variance(c.model, c.w, p, fine_rule())) < 1e-8);
  }
}

TEST_CASE("K slope in the tail", "[depth]") {
  // The inner term is constant away from v and v +/- xi, so the slope of K is
  // the derivative of (x - pwm0) w(PD(x)) / D.
  const auto m = DistributionModel::laplace(0, 1);
  const auto p = robust_params(m);
  const auto w = WeightFunction::power(1);
  const InfluenceKernel K(m, w, p);
  const DepthParams dp(p.v, p.xi);
  for (double x : {3.0, 6.0, -4.0, 10.0}) {
    const double d = 1e-5;
    const double fd = (K(x + d) - K(x - d)) / (2 * d);
    const double pd = projection_depth(x, dp);
    const double dpd = -detail::sign(x - p.v) / p.xi * pd * pd;
    const double exact = (w(pd) + (x - K.pwm0()) * w.derivative(pd) * dpd) / K.denominator();
    REQUIRE_THAT(fd, WithinRel(exact, 1e-4));
  }
}
