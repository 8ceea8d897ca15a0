#pragma once

// SPDX-License-Identifier: Apache-2.0

/**
 * @file corpus_stats.hpp
 * @brief Distribution of per-window unigram entropy over a tokenized corpus.
 *
 * Documents are cut into non-overlapping windows of `window_len` tokens
 * (a trailing partial window is dropped; documents shorter than one window
 * are skipped and counted). The quartiles and the +-1 sigma band of the
 * resulting entropies define which operating points are "reasonable" to
 * compare at.
 *
 * Quantiles interpolate linearly between order statistics at position
 * p * (n - 1). Sigma is the population standard deviation.
 */

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "genfrontier/core_metrics.hpp"

namespace genfrontier {

inline constexpr std::size_t kDefaultWindowLen = 1024;
inline constexpr std::size_t kDefaultHistogramBins = 50;

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

/// The subset of corpus statistics used to classify operating points.
struct EntropyBands {
  double mean = 0.0;
  double median = 0.0;
  std::pair<double, double> iqr_band;
  std::pair<double, double> sigma_band;
  std::string source;
};

/// Published OpenWebText validation figures (GPT-2 tokenization): mean 5.432,
/// median 5.471, IQR [5.37, 5.55], +-1 sigma [5.21, 5.66].
EntropyBands openwebtext_reference_bands();

struct EntropyStats {
  std::size_t n_windows = 0;
  std::size_t window_len = 0;
  std::size_t n_documents = 0;
  std::size_t n_skipped_documents = 0;
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double sigma = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<HistogramBin> histogram;

  std::pair<double, double> iqr_band() const { return {q1, q3}; }
  std::pair<double, double> sigma_band() const { return {mean - sigma, mean + sigma}; }
  EntropyBands bands() const;
};

/// Linear-interpolation quantile of already sorted values.
double sorted_quantile(std::span<const double> sorted, double p);

/// Summarises a set of window entropies (any order).
EntropyStats summarize_window_entropies(std::vector<double> entropies, std::size_t window_len,
                                        std::size_t bins = kDefaultHistogramBins);

/// Streaming front end: feed documents one at a time, then call finish().
class CorpusEntropyAccumulator {
 public:
  explicit CorpusEntropyAccumulator(std::size_t window_len = kDefaultWindowLen,
                                    Execution execution = Execution::Parallel);

  void add_document(std::span<const TokenId> tokens);

  /// Throws DataError if no document yielded a complete window.
  EntropyStats finish(std::size_t bins = kDefaultHistogramBins);

 private:
  void flush();

  std::size_t window_len_;
  Execution execution_;
  std::vector<TokenId> pending_;  // whole windows only
  std::vector<double> entropies_;
  std::size_t n_documents_ = 0;
  std::size_t n_skipped_ = 0;
};

EntropyStats corpus_entropy_stats(std::span<const std::vector<TokenId>> corpus,
                                  std::size_t window_len = kDefaultWindowLen,
                                  std::size_t bins = kDefaultHistogramBins);

enum class Band { InIqr, InSigma, Outside };

Band band_check(double h, const EntropyBands& bands);
inline Band band_check(double h, const EntropyStats& stats) { return band_check(h, stats.bands()); }

const char* to_string(Band band);

}  // namespace genfrontier
