// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <cmath>

#include "genfrontier/kernels.hpp"

namespace genfrontier::kernels {

namespace {

constexpr std::uint64_t kChunk = 4096;

double small_unigram_entropy(std::span<const TokenId> seq) {
  std::array<int, oracle::kMaxVocab> counts{};
  for (TokenId t : seq) ++counts[t];
  return entropy_from_counts(counts, static_cast<double>(seq.size()));
}

void accumulate_range(const oracle::ExactModel& q, const oracle::ExactModel& p, std::uint64_t begin,
                      std::uint64_t end, EnumerationSums& sums) {
  const int vocab = q.vocab_size();
  const int len = q.seq_len();
  const double inv_len = 1.0 / static_cast<double>(len);
  auto seq = decode_sequence(begin, vocab, len);
  for (std::uint64_t k = begin; k < end; ++k) {
    double lq = 0.0;
    double lp = 0.0;
    TokenId prev = 0;
    for (int i = 0; i < len; ++i) {
      lq += q.conditional_log_prob(i, prev, seq[static_cast<std::size_t>(i)]);
      lp += p.conditional_log_prob(i, prev, seq[static_cast<std::size_t>(i)]);
      prev = seq[static_cast<std::size_t>(i)];
    }
    const double w = std::exp(lq);
    if (w > 0.0) {
      if (std::isinf(lp)) {
        if (sums.support_violation < 0) sums.support_violation = static_cast<long long>(k);
      } else {
        const double h = small_unigram_entropy(seq);
        sums.mass.add(w);
        sums.self_nll.add(w * -lq);
        sums.ref_nll.add(w * -lp);
        sums.log_ratio.add(w * (lq - lp));
        sums.ref_nll_sq.add(w * (lp * inv_len) * (lp * inv_len));
        sums.self_nll_sq.add(w * (lq * inv_len) * (lq * inv_len));
        sums.unigram.add(w * h);
        sums.unigram_sq.add(w * h * h);
      }
    }
    // odometer increment, last position fastest
    for (int i = len - 1; i >= 0; --i) {
      auto& digit = seq[static_cast<std::size_t>(i)];
      if (++digit < static_cast<TokenId>(vocab)) break;
      digit = 0;
    }
  }
}

}  // namespace

void EnumerationSums::merge(const EnumerationSums& o) {
  mass.merge(o.mass);
  self_nll.merge(o.self_nll);
  ref_nll.merge(o.ref_nll);
  log_ratio.merge(o.log_ratio);
  ref_nll_sq.merge(o.ref_nll_sq);
  self_nll_sq.merge(o.self_nll_sq);
  unigram.merge(o.unigram);
  unigram_sq.merge(o.unigram_sq);
  if (support_violation < 0) support_violation = o.support_violation;
}

std::vector<TokenId> decode_sequence(std::uint64_t index, int vocab_size, int seq_len) {
  std::vector<TokenId> seq(static_cast<std::size_t>(seq_len));
  for (int i = seq_len - 1; i >= 0; --i) {
    seq[static_cast<std::size_t>(i)] = static_cast<TokenId>(index % static_cast<std::uint64_t>(vocab_size));
    index /= static_cast<std::uint64_t>(vocab_size);
  }
  return seq;
}

EnumerationSums enumerate_serial(const oracle::ExactModel& q, const oracle::ExactModel& p) {
  EnumerationSums sums;
  accumulate_range(q, p, 0, q.num_sequences(), sums);
  return sums;
}

EnumerationSums enumerate_parallel(const oracle::ExactModel& q, const oracle::ExactModel& p) {
  const std::uint64_t total = q.num_sequences();
  const auto n_chunks = static_cast<long long>((total + kChunk - 1) / kChunk);
  std::vector<EnumerationSums> partial(static_cast<std::size_t>(n_chunks));
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < n_chunks; ++c) {
    const auto begin = static_cast<std::uint64_t>(c) * kChunk;
    const std::uint64_t end = std::min(total, begin + kChunk);
    accumulate_range(q, p, begin, end, partial[static_cast<std::size_t>(c)]);
  }
  // Fixed chunk boundaries and in-order merge keep the result independent
  // of the thread count.
  EnumerationSums sums;
  for (const auto& part : partial) sums.merge(part);
  return sums;
}

}  // namespace genfrontier::kernels
