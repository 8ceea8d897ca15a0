// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "genfrontier/error.hpp"
#include "genfrontier/kernels.hpp"
#include "genfrontier/numeric.hpp"

namespace genfrontier::kernels {

namespace {

double window_entropy(std::span<const TokenId> window, std::vector<TokenId>& scratch) {
  scratch.assign(window.begin(), window.end());
  std::sort(scratch.begin(), scratch.end());
  CompensatedSum acc;
  const double n = static_cast<double>(scratch.size());
  for (std::size_t i = 0; i < scratch.size();) {
    std::size_t j = i;
    while (j < scratch.size() && scratch[j] == scratch[i]) ++j;
    const double p = static_cast<double>(j - i) / n;
    acc.add(-p * std::log(p));
    i = j;
  }
  return std::max(0.0, acc.value());
}

void check_window(std::size_t window_len) {
  if (window_len == 0) throw DataError("window_len must be positive");
}

}  // namespace

std::vector<double> window_entropies_serial(std::span<const TokenId> tokens, std::size_t window_len) {
  check_window(window_len);
  const std::size_t n_windows = tokens.size() / window_len;
  std::vector<double> out(n_windows);
  std::vector<TokenId> scratch;
  for (std::size_t w = 0; w < n_windows; ++w) {
    out[w] = window_entropy(tokens.subspan(w * window_len, window_len), scratch);
  }
  return out;
}

std::vector<double> window_entropies_parallel(std::span<const TokenId> tokens, std::size_t window_len) {
  check_window(window_len);
  const auto n_windows = static_cast<long long>(tokens.size() / window_len);
  std::vector<double> out(static_cast<std::size_t>(n_windows));
#pragma omp parallel
  {
    std::vector<TokenId> scratch;
#pragma omp for schedule(static)
    for (long long w = 0; w < n_windows; ++w) {
      const auto idx = static_cast<std::size_t>(w);
      out[idx] = window_entropy(tokens.subspan(idx * window_len, window_len), scratch);
    }
  }
  return out;
}

}  // namespace genfrontier::kernels
