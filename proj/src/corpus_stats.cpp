// SPDX-License-Identifier: Apache-2.0

#include "genfrontier/corpus_stats.hpp"

#include <algorithm>
#include <cmath>

#include "genfrontier/error.hpp"
#include "genfrontier/kernels.hpp"
#include "genfrontier/numeric.hpp"

namespace genfrontier {

namespace {

constexpr std::size_t kFlushTokens = std::size_t{1} << 20;

}  // namespace

EntropyBands openwebtext_reference_bands() {
  return {5.432, 5.471, {5.37, 5.55}, {5.21, 5.66}, "OpenWebText validation (published)"};
}

EntropyBands EntropyStats::bands() const {
  return {mean, median, iqr_band(), sigma_band(),
          "corpus (" + std::to_string(n_windows) + " windows of " + std::to_string(window_len) + " tokens)"};
}

double sorted_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

EntropyStats summarize_window_entropies(std::vector<double> entropies, std::size_t window_len,
                                        std::size_t bins) {
  if (entropies.empty()) throw DataError("no windows to summarise");
  if (bins == 0) throw DataError("histogram needs at least one bin");
  std::sort(entropies.begin(), entropies.end());

  EntropyStats s;
  s.n_windows = entropies.size();
  s.window_len = window_len;
  s.min = entropies.front();
  s.max = entropies.back();
  s.median = sorted_quantile(entropies, 0.5);
  s.q1 = sorted_quantile(entropies, 0.25);
  s.q3 = sorted_quantile(entropies, 0.75);

  CompensatedSum total;
  for (double v : entropies) total.add(v);
  s.mean = total.value() / static_cast<double>(entropies.size());
  std::vector<double> sq;
  sq.reserve(entropies.size());
  for (double v : entropies) sq.push_back((v - s.mean) * (v - s.mean));
  s.sigma = std::sqrt(order_invariant_mean(sq));

  if (s.max == s.min) {
    s.histogram.push_back({s.min, s.max, entropies.size()});
  } else {
    const double width = (s.max - s.min) / static_cast<double>(bins);
    s.histogram.resize(bins);
    for (std::size_t b = 0; b < bins; ++b) {
      s.histogram[b].lo = s.min + width * static_cast<double>(b);
      s.histogram[b].hi = b + 1 == bins ? s.max : s.min + width * static_cast<double>(b + 1);
    }
    for (double v : entropies) {
      auto b = static_cast<std::size_t>((v - s.min) / (s.max - s.min) * static_cast<double>(bins));
      ++s.histogram[std::min(b, bins - 1)].count;
    }
  }
  return s;
}

CorpusEntropyAccumulator::CorpusEntropyAccumulator(std::size_t window_len, Execution execution)
    : window_len_(window_len), execution_(execution) {
  if (window_len_ == 0) throw DataError("window_len must be positive");
}

void CorpusEntropyAccumulator::add_document(std::span<const TokenId> tokens) {
  ++n_documents_;
  const std::size_t whole = tokens.size() / window_len_ * window_len_;
  if (whole == 0) {
    ++n_skipped_;
    return;
  }
  pending_.insert(pending_.end(), tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(whole));
  if (pending_.size() >= kFlushTokens) flush();
}

void CorpusEntropyAccumulator::flush() {
  const auto batch = kernels::window_entropies(pending_, window_len_, execution_);
  entropies_.insert(entropies_.end(), batch.begin(), batch.end());
  pending_.clear();
}

EntropyStats CorpusEntropyAccumulator::finish(std::size_t bins) {
  flush();
  if (entropies_.empty()) {
    throw DataError("no usable windows: " + std::to_string(n_skipped_) + " of " +
                    std::to_string(n_documents_) + " documents shorter than window_len " +
                    std::to_string(window_len_));
  }
  auto stats = summarize_window_entropies(std::move(entropies_), window_len_, bins);
  stats.n_documents = n_documents_;
  stats.n_skipped_documents = n_skipped_;
  entropies_.clear();
  return stats;
}

EntropyStats corpus_entropy_stats(std::span<const std::vector<TokenId>> corpus, std::size_t window_len,
                                  std::size_t bins) {
  if (corpus.empty()) throw DataError("empty corpus");
  CorpusEntropyAccumulator acc(window_len);
  for (const auto& doc : corpus) acc.add_document(doc);
  return acc.finish(bins);
}

Band band_check(double h, const EntropyBands& bands) {
  if (h >= bands.iqr_band.first && h <= bands.iqr_band.second) return Band::InIqr;
  if (h >= bands.sigma_band.first && h <= bands.sigma_band.second) return Band::InSigma;
  return Band::Outside;
}

const char* to_string(Band band) {
  switch (band) {
    case Band::InIqr: return "in_iqr";
    case Band::InSigma: return "in_sigma";
    case Band::Outside: return "outside";
  }
  return "?";
}

}  // namespace genfrontier
