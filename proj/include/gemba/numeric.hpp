#pragma once

#include <cstddef>
#include <span>

namespace gemba {

namespace detail {

template <typename F>
double pairwise_accumulate(size_t lo, size_t hi, const F& term) {
  // Recursive halving keeps rounding error at O(log n) for long vectors.
  constexpr size_t kLeafSize = 128;
  if (hi - lo <= kLeafSize) {
    double acc = 0.0;
    for (size_t i = lo; i < hi; ++i) acc += term(i);
    return acc;
  }
  const size_t mid = lo + (hi - lo) / 2;
  return pairwise_accumulate(lo, mid, term) + pairwise_accumulate(mid, hi, term);
}

}  // namespace detail

// Sum of f(i) for i in [0, n) using pairwise summation.
template <typename F>
double pairwise_sum_terms(size_t n, const F& term) {
  if (n == 0) return 0.0;
  return detail::pairwise_accumulate(0, n, term);
}

inline double pairwise_sum(std::span<const double> values) {
  return pairwise_sum_terms(values.size(), [&](size_t i) { return values[i]; });
}

inline double mean(std::span<const double> values) {
  return values.empty() ? 0.0
                        : pairwise_sum(values) / static_cast<double>(values.size());
}

}  // namespace gemba
