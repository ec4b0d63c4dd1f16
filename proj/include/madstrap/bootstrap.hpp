#pragma once

// Nonparametric bootstrap: n draws with replacement from the empirical
// distribution of a sample, keyed by a (master seed, replicate index) pair so
// that any replicate can be regenerated in isolation.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "madstrap/errors.hpp"
#include "madstrap/estimators.hpp"
#include "madstrap/rng.hpp"

namespace madstrap {

struct ResamplePlan {
  std::uint64_t master_seed = 0;
  std::uint64_t replicate_index = 0;

  std::uint64_t stream_key() const noexcept { return hash64({master_seed, replicate_index}); }
};

struct BootstrapSample {
  const SortedSample* parent = nullptr;
  std::vector<std::size_t> indices;  // 0-based positions into parent->values()
  SortedSample resampled;
};

namespace detail {

// Builds the resampled SortedSample in O(n) from the parent's rank order,
// without re-sorting.
inline SortedSample assemble_resample(const SortedSample& parent,
                                      const std::vector<std::size_t>& indices) {
  const std::size_t n = parent.size();
  const auto pvals = parent.values();
  const auto psorted = parent.sorted();
  const auto porder = parent.order();

  std::vector<std::size_t> start(n + 1, 0);
  for (std::size_t idx : indices) ++start[idx + 1];
  for (std::size_t i = 0; i < n; ++i) start[i + 1] += start[i];
  std::vector<std::size_t> positions(indices.size());
  {
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    for (std::size_t j = 0; j < indices.size(); ++j) positions[fill[indices[j]]++] = j;
  }

  std::vector<double> values(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) values[j] = pvals[indices[j]];

  std::vector<double> sorted;
  std::vector<std::size_t> order;
  sorted.reserve(indices.size());
  order.reserve(indices.size());
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t idx = porder[r];
    for (std::size_t p = start[idx]; p < start[idx + 1]; ++p) {
      sorted.push_back(psorted[r]);
      order.push_back(positions[p]);
    }
  }
  return SortedSample::from_parts(std::move(values), std::move(sorted), std::move(order));
}

}  // namespace detail

inline BootstrapSample resample(const SortedSample& s, const ResamplePlan& plan) {
  const std::size_t n = s.size();
  CounterRng rng(plan.stream_key());
  std::vector<std::size_t> indices(n);
  for (auto& i : indices) i = static_cast<std::size_t>(rng.bounded(n));
  SortedSample res = detail::assemble_resample(s, indices);
  return {&s, std::move(indices), std::move(res)};
}

// (Med*, MAD*) of one bootstrap replicate.
inline std::pair<double, double> bootstrap_med_mad(const SortedSample& s, const ResamplePlan& plan) {
  const auto bs = resample(s, plan);
  return {sample_median(bs.resampled), sample_mad(bs.resampled)};
}

// Exact law of a bootstrap statistic: every one of the n^n equiprobable index
// vectors is evaluated. Probabilities are count / total with integer counts.
// Outcomes where the statistic is undefined (it returned nullopt) are counted
// in `excluded` and left out of the atoms.
struct ExactDistribution {
  struct Atom {
    double value;
    std::uint64_t count;
  };
  std::vector<Atom> atoms;  // ascending by value, distinct values
  std::uint64_t total = 0;  // n^n
  std::uint64_t excluded = 0;

  std::uint64_t included() const noexcept { return total - excluded; }

  // Moments of the law conditional on the statistic being defined.
  double mean() const {
    long double acc = 0.0L;
    for (const auto& a : atoms) acc += static_cast<long double>(a.value) * a.count;
    return static_cast<double>(acc / included());
  }
  double central_moment(int order) const {
    const long double mu = mean();
    long double acc = 0.0L;
    for (const auto& a : atoms) {
      long double d = a.value - mu;
      long double p = 1.0L;
      for (int i = 0; i < order; ++i) p *= d;
      acc += p * a.count;
    }
    return static_cast<double>(acc / included());
  }
  double variance() const { return central_moment(2); }
};

inline constexpr std::size_t kMaxEnumerationSize = 8;

template <class Statistic>
ExactDistribution enumerate_resamples(const SortedSample& s, Statistic&& statistic) {
  const std::size_t n = s.size();
  if (n > kMaxEnumerationSize) {
    throw SizeLimitError("enumeration limited to n <= 8 (n^n resamples)");
  }
  const auto vals = s.values();
  std::map<double, std::uint64_t> counts;
  ExactDistribution out;

  std::vector<std::size_t> idx(n, 0);
  std::vector<double> buf(n);
  for (;;) {
    for (std::size_t i = 0; i < n; ++i) buf[i] = vals[idx[i]];
    const SortedSample rs(buf);
    const std::optional<double> value = statistic(rs);
    ++out.total;
    if (value) ++counts[*value];
    else ++out.excluded;

    std::size_t pos = 0;
    while (pos < n && ++idx[pos] == n) idx[pos++] = 0;
    if (pos == n) break;
  }
  out.atoms.reserve(counts.size());
  for (const auto& [value, count] : counts) out.atoms.push_back({value, count});
  return out;
}

}  // namespace madstrap
