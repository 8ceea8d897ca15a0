#pragma once

// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace genfrontier {

/// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) noexcept {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      carry += (sum - t) + x;
    } else {
      carry += (x - t) + sum;
    }
    sum = t;
  }

  void merge(const CompensatedSum& other) noexcept {
    add(other.sum);
    add(other.carry);
  }

  double value() const noexcept { return sum + carry; }
};

/// Order-independent sum: sorts a copy first so any permutation of the input
/// yields the same bits.
inline double order_invariant_sum(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  CompensatedSum acc;
  for (double v : sorted) acc.add(v);
  return acc.value();
}

inline double order_invariant_mean(std::span<const double> values) {
  return order_invariant_sum(values) / static_cast<double>(values.size());
}

/// Entropy (nats) of a count vector with the given total; zero counts skipped.
template <typename Counts>
double entropy_from_counts(const Counts& counts, double total) {
  CompensatedSum acc;
  for (const auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    acc.add(-p * std::log(p));
  }
  return std::max(0.0, acc.value());
}

}  // namespace genfrontier
