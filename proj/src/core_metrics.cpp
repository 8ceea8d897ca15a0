// SPDX-License-Identifier: Apache-2.0

#include "genfrontier/core_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "genfrontier/error.hpp"
#include "genfrontier/numeric.hpp"
#include "parallel.hpp"

namespace genfrontier {

namespace {

std::vector<std::size_t> sorted_run_lengths(std::vector<TokenId> tokens) {
  std::sort(tokens.begin(), tokens.end());
  std::vector<std::size_t> runs;
  for (std::size_t i = 0; i < tokens.size();) {
    std::size_t j = i;
    while (j < tokens.size() && tokens[j] == tokens[i]) ++j;
    runs.push_back(j - i);
    i = j;
  }
  return runs;
}

std::string describe(const CellKey& key) {
  return key.method_id + "/T=" + std::to_string(key.temperature) + "/nfe=" + std::to_string(key.nfe);
}

}  // namespace

void validate(const ScoredSample& sample, std::optional<std::uint32_t> vocab_size) {
  if (sample.tokens.empty()) throw DataError("empty sequence");
  if (sample.tokens.size() != sample.ref_nll.size()) {
    throw DataError("length mismatch: " + std::to_string(sample.tokens.size()) + " tokens but " +
                    std::to_string(sample.ref_nll.size()) + " ref_nll entries");
  }
  if (!(sample.temperature > 0.0) || !std::isfinite(sample.temperature)) {
    throw DataError("temperature must be positive and finite");
  }
  if (sample.nfe < 1) throw DataError("nfe must be >= 1");
  for (std::size_t i = 0; i < sample.ref_nll.size(); ++i) {
    const double v = sample.ref_nll[i];
    if (!std::isfinite(v) || v < 0.0) {
      throw DataError("ref_nll[" + std::to_string(i) + "] is not a finite non-negative value");
    }
  }
  if (vocab_size) {
    for (std::size_t i = 0; i < sample.tokens.size(); ++i) {
      if (sample.tokens[i] >= *vocab_size) {
        throw DataError("tokens[" + std::to_string(i) + "] = " + std::to_string(sample.tokens[i]) +
                        " outside vocab_size " + std::to_string(*vocab_size));
      }
    }
  }
}

CellKey cell_key(const ScoredSample& sample) {
  return {sample.method_id, sample.temperature, sample.nfe};
}

OperatingPoint make_operating_point(CellKey key, int n_samples, double unigram_entropy,
                                    double cross_entropy) {
  OperatingPoint p;
  p.method_id = std::move(key.method_id);
  p.temperature = key.temperature;
  p.nfe = key.nfe;
  p.n_samples = n_samples;
  p.unigram_entropy = unigram_entropy;
  p.cross_entropy = cross_entropy;
  p.gen_ppl = std::exp(cross_entropy);
  p.kl_hat = cross_entropy - unigram_entropy;
  return p;
}

double unigram_entropy(std::span<const TokenId> tokens) {
  if (tokens.empty()) throw DataError("empty sequence");
  const auto runs = sorted_run_lengths({tokens.begin(), tokens.end()});
  return entropy_from_counts(runs, static_cast<double>(tokens.size()));
}

double sample_cross_entropy(std::span<const double> ref_nll) {
  if (ref_nll.empty()) throw DataError("empty sequence");
  CompensatedSum acc;
  for (std::size_t i = 0; i < ref_nll.size(); ++i) {
    const double v = ref_nll[i];
    if (std::isnan(v)) throw DataError("ref_nll[" + std::to_string(i) + "] is NaN");
    if (!std::isfinite(v)) throw DataError("ref_nll[" + std::to_string(i) + "] is infinite");
    if (v < 0.0) throw DataError("ref_nll[" + std::to_string(i) + "] is negative");
    acc.add(v);
  }
  return acc.value() / static_cast<double>(ref_nll.size());
}

OperatingPoint aggregate_cell(std::span<const ScoredSample> samples,
                              const AggregateOptions& options) {
  if (samples.empty()) throw DataError("cannot aggregate an empty cell");
  const CellKey key = cell_key(samples.front());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (cell_key(samples[i]) != key) {
      throw DataError("mixed cell keys: sample " + std::to_string(i) + " is " +
                      describe(cell_key(samples[i])) + ", expected " + describe(key));
    }
    try {
      validate(samples[i], options.vocab_size);
    } catch (const DataError& e) {
      throw DataError("sample " + std::to_string(i) + ": " + e.what());
    }
  }

  // Per-sample terms are summed in sorted order, so the result does not
  // depend on how samples were ordered on input.
  std::vector<double> ce_terms;
  std::vector<double> h_terms;
  ce_terms.reserve(samples.size());
  h_terms.reserve(samples.size());
  std::size_t total_tokens = 0;
  for (const auto& s : samples) {
    const double n = static_cast<double>(s.tokens.size());
    const double ce = sample_cross_entropy(s.ref_nll);
    const double h = options.entropy_scope == EntropyScope::PerSequence ? unigram_entropy(s.tokens) : 0.0;
    if (options.weighting == Weighting::Macro) {
      ce_terms.push_back(ce);
      h_terms.push_back(h);
    } else {
      ce_terms.push_back(ce * n);
      h_terms.push_back(h * n);
    }
    total_tokens += s.tokens.size();
  }

  const double denom = options.weighting == Weighting::Macro ? static_cast<double>(samples.size())
                                                              : static_cast<double>(total_tokens);
  const double cross_entropy = order_invariant_sum(ce_terms) / denom;

  double entropy = 0.0;
  if (options.entropy_scope == EntropyScope::PerSequence) {
    entropy = order_invariant_sum(h_terms) / denom;
  } else {
    std::vector<TokenId> pooled;
    pooled.reserve(total_tokens);
    for (const auto& s : samples) pooled.insert(pooled.end(), s.tokens.begin(), s.tokens.end());
    entropy = unigram_entropy(pooled);
  }

  return make_operating_point(key, static_cast<int>(samples.size()), entropy, cross_entropy);
}

bool point_order(const OperatingPoint& a, const OperatingPoint& b) {
  if (a.method_id != b.method_id) return a.method_id < b.method_id;
  if (a.nfe != b.nfe) return a.nfe < b.nfe;
  return a.temperature < b.temperature;
}

std::vector<OperatingPoint> aggregate_cells(std::span<const ScoredSample> samples,
                                            const AggregateOptions& options,
                                            Execution execution) {
  std::map<CellKey, std::vector<ScoredSample>> cells;
  for (const auto& s : samples) cells[cell_key(s)].push_back(s);

  std::vector<const std::vector<ScoredSample>*> groups;
  groups.reserve(cells.size());
  for (const auto& [key, group] : cells) groups.push_back(&group);

  std::vector<OperatingPoint> points(groups.size());
  detail::for_each_index(groups.size(), execution, [&](std::size_t i) {
    points[i] = aggregate_cell(*groups[i], options);
  });
  std::sort(points.begin(), points.end(), point_order);
  return points;
}

}  // namespace genfrontier
