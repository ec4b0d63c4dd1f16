#pragma once

// Order-statistic estimators: sample median and MAD, the single-order-statistic
// variants indexed by (l, m), the modified MAD, and empirical CDFs with left
// limits. All index arithmetic is in exact integers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "madstrap/errors.hpp"

namespace madstrap {

// Data plus its ascending order statistics. `order()[r]` is the position in
// `values()` of the r-th smallest value.
class SortedSample {
 public:
  explicit SortedSample(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw DomainError("sample must be nonempty");
    for (double x : values_) {
      if (std::isnan(x)) throw DomainError("sample contains NaN");
    }
    order_.resize(values_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return values_[a] < values_[b]; });
    sorted_.resize(values_.size());
    for (std::size_t r = 0; r < order_.size(); ++r) sorted_[r] = values_[order_[r]];
  }

  // Trusted assembly from already consistent parts (used by the resampler).
  static SortedSample from_parts(std::vector<double> values, std::vector<double> sorted,
                                 std::vector<std::size_t> order) {
    return SortedSample(std::move(values), std::move(sorted), std::move(order));
  }

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> sorted() const noexcept { return sorted_; }
  std::span<const std::size_t> order() const noexcept { return order_; }

 private:
  SortedSample(std::vector<double> values, std::vector<double> sorted,
               std::vector<std::size_t> order)
      : values_(std::move(values)), sorted_(std::move(sorted)), order_(std::move(order)) {}

  std::vector<double> values_;
  std::vector<double> sorted_;
  std::vector<std::size_t> order_;
};

// W_i = |X_i - center| in original order, and sorted.
struct AbsDeviations {
  double center = 0.0;
  std::vector<double> devs;
  std::vector<double> sorted_devs;
};

struct EcdfEval {
  double at = 0.0;
  double value = 0.0;  // #{X_i <= at} / n
  double left = 0.0;   // #{X_i <  at} / n
};

// k-th smallest value, 1-based.
inline double order_stat(const SortedSample& s, std::size_t k) {
  if (k < 1 || k > s.size()) {
    throw IndexError("order statistic " + std::to_string(k) + " outside [1, " +
                     std::to_string(s.size()) + "]");
  }
  return s.sorted()[k - 1];
}

inline double sample_median(const SortedSample& s) {
  const std::size_t n = s.size();
  return 0.5 * (order_stat(s, (n + 1) / 2) + order_stat(s, (n + 2) / 2));
}

// Sorted data has |x - c| decreasing then increasing, so the sorted deviations
// are a merge of two monotone runs.
inline AbsDeviations absolute_deviations(const SortedSample& s, double center) {
  AbsDeviations out;
  out.center = center;
  const auto vals = s.values();
  out.devs.resize(vals.size());
  std::transform(vals.begin(), vals.end(), out.devs.begin(),
                 [center](double x) { return std::abs(x - center); });

  const auto srt = s.sorted();
  const auto split = static_cast<std::size_t>(
      std::lower_bound(srt.begin(), srt.end(), center) - srt.begin());
  std::vector<double> left(split);
  for (std::size_t i = 0; i < split; ++i) left[i] = center - srt[split - 1 - i];
  std::vector<double> right(srt.size() - split);
  for (std::size_t i = split; i < srt.size(); ++i) right[i - split] = srt[i] - center;
  out.sorted_devs.resize(srt.size());
  std::merge(left.begin(), left.end(), right.begin(), right.end(), out.sorted_devs.begin());
  return out;
}

inline double sample_mad(const SortedSample& s) {
  const std::size_t n = s.size();
  const auto w = absolute_deviations(s, sample_median(s));
  return 0.5 * (w.sorted_devs[(n + 1) / 2 - 1] + w.sorted_devs[(n + 2) / 2 - 1]);
}

namespace detail {

inline void check_index_param(const char* name, std::size_t value, std::size_t n) {
  if (value < 1 || value > n / 2) {
    throw DomainError(std::string(name) + " = " + std::to_string(value) +
                      " outside [1, floor(n/2)] for n = " + std::to_string(n));
  }
}

}  // namespace detail

// X_{floor((n+l)/2):n}, 1 <= l <= floor(n/2).
inline double generalized_median(const SortedSample& s, std::size_t l) {
  detail::check_index_param("l", l, s.size());
  return order_stat(s, (s.size() + l) / 2);
}

// floor((n+m)/2)-th order statistic of |X_i - generalized_median(s, l)|.
inline double generalized_mad(const SortedSample& s, std::size_t m, std::size_t l) {
  detail::check_index_param("m", m, s.size());
  const auto w = absolute_deviations(s, generalized_median(s, l));
  return w.sorted_devs[(s.size() + m) / 2 - 1];
}

// (W_{floor((n+k)/2):n} + W_{floor((n+k+1)/2):n}) / 2 about the sample median,
// 1 <= k <= n - 1. k = 1 is the ordinary MAD.
inline double modified_mad(const SortedSample& s, std::size_t k) {
  const std::size_t n = s.size();
  if (k < 1 || k + 1 > n) {
    throw DomainError("k = " + std::to_string(k) + " outside [1, n-1] for n = " + std::to_string(n));
  }
  const auto w = absolute_deviations(s, sample_median(s));
  return 0.5 * (w.sorted_devs[(n + k) / 2 - 1] + w.sorted_devs[(n + k + 1) / 2 - 1]);
}

inline EcdfEval ecdf(const SortedSample& s, double x) {
  const auto srt = s.sorted();
  const double n = static_cast<double>(srt.size());
  const auto le = std::upper_bound(srt.begin(), srt.end(), x) - srt.begin();
  const auto lt = std::lower_bound(srt.begin(), srt.end(), x) - srt.begin();
  return {x, static_cast<double>(le) / n, static_cast<double>(lt) / n};
}

// G_n(y) = #{|X_i - center| <= y} / n, exact with respect to the floating
// point deviations: fl(x - c) is monotone in x, so each side of the center is
// a single partition.
inline EcdfEval absdev_ecdf(const SortedSample& s, double center, double y) {
  const auto srt = s.sorted();
  const double n = static_cast<double>(srt.size());
  if (y < 0.0) return {y, 0.0, 0.0};
  const auto mid = std::lower_bound(srt.begin(), srt.end(), center);

  auto count = [&](auto within) {
    // left side: c - x shrinks as x grows, so "within" is a suffix
    const auto lfirst = std::partition_point(srt.begin(), mid, [&](double x) { return !within(center - x); });
    // right side: x - c grows, so "within" is a prefix
    const auto rlast = std::partition_point(mid, srt.end(), [&](double x) { return within(x - center); });
    return static_cast<double>((mid - lfirst) + (rlast - mid));
  };
  const double le = count([y](double d) { return d <= y; });
  const double lt = count([y](double d) { return d < y; });
  return {y, le / n, lt / n};
}

inline EcdfEval absdev_ecdf(const AbsDeviations& w, double y) {
  const auto& d = w.sorted_devs;
  const double n = static_cast<double>(d.size());
  const auto le = std::upper_bound(d.begin(), d.end(), y) - d.begin();
  const auto lt = std::lower_bound(d.begin(), d.end(), y) - d.begin();
  return {y, static_cast<double>(le) / n, static_cast<double>(lt) / n};
}

}  // namespace madstrap
