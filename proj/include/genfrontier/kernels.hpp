#pragma once

// SPDX-License-Identifier: Apache-2.0

// Data-parallel kernels. Each has a serial reference kept for tests and
// benchmarks; the parallel versions split work into fixed chunks and reduce
// them in chunk order, so results do not depend on the thread count.

#include <cstddef>
#include <span>
#include <vector>

#include "genfrontier/core_metrics.hpp"

namespace genfrontier::kernels {

/// Unigram entropy of each complete, non-overlapping window of `tokens`.
/// A trailing partial window is ignored.
std::vector<double> window_entropies_serial(std::span<const TokenId> tokens, std::size_t window_len);
std::vector<double> window_entropies_parallel(std::span<const TokenId> tokens, std::size_t window_len);

inline std::vector<double> window_entropies(std::span<const TokenId> tokens, std::size_t window_len,
                                            Execution execution) {
  return execution == Execution::Serial ? window_entropies_serial(tokens, window_len)
                                        : window_entropies_parallel(tokens, window_len);
}

}  // namespace genfrontier::kernels

#include "genfrontier/numeric.hpp"
#include "genfrontier/oracle.hpp"

namespace genfrontier::kernels {

/// Probability-weighted sums over every sequence of an ExactModel.
struct EnumerationSums {
  CompensatedSum mass;
  CompensatedSum self_nll;      // q * -ln q
  CompensatedSum ref_nll;       // q * -ln p
  CompensatedSum log_ratio;     // q * (ln q - ln p)
  CompensatedSum ref_nll_sq;    // q * (-ln p / L)^2
  CompensatedSum self_nll_sq;   // q * (-ln q / L)^2
  CompensatedSum unigram;       // q * H~(x)
  CompensatedSum unigram_sq;    // q * H~(x)^2
  /// Lowest index of a sequence with q > 0 and p = 0, or -1.
  long long support_violation = -1;

  void merge(const EnumerationSums& other);
};

/// Sequence index k enumerates positions most-significant first.
std::vector<TokenId> decode_sequence(std::uint64_t index, int vocab_size, int seq_len);

EnumerationSums enumerate_serial(const oracle::ExactModel& q, const oracle::ExactModel& p);
EnumerationSums enumerate_parallel(const oracle::ExactModel& q, const oracle::ExactModel& p);

}  // namespace genfrontier::kernels
