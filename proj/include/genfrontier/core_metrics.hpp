#pragma once

// SPDX-License-Identifier: Apache-2.0

/**
 * @file core_metrics.hpp
 * @brief Per-cell generation metrics from reference-scored samples.
 *
 * A cell is one (method, temperature, NFE) setting of a generation sweep.
 * Each sample carries its token IDs and the per-token negative log-likelihood
 * (nats) a reference model assigned to it. From those we derive:
 *
 *   cross_entropy    mean per-token reference NLL (macro-averaged over samples)
 *   unigram_entropy  entropy of each sample's empirical token distribution
 *   gen_ppl          exp(cross_entropy)
 *   kl_hat           cross_entropy - unigram_entropy
 *
 * kl_hat is a plug-in estimate of per-token KL(q_gen || p_ref). Unigram
 * entropy only approximates the generator's entropy, so kl_hat can come out
 * negative; it is reported as-is and flagged.
 */

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace genfrontier {

using TokenId = std::uint32_t;

struct ScoredSample {
  std::string method_id;
  double temperature = 1.0;
  int nfe = 1;
  std::int64_t seed = 0;
  std::vector<TokenId> tokens;
  std::vector<double> ref_nll;  ///< nats; ref_nll[0] is conditioned on BOS
};

/// Throws DataError if the sample breaks a structural invariant. When
/// vocab_size is given every token must be below it.
void validate(const ScoredSample& sample, std::optional<std::uint32_t> vocab_size = std::nullopt);

struct CellKey {
  std::string method_id;
  double temperature = 1.0;
  int nfe = 1;

  auto operator<=>(const CellKey&) const = default;
};

CellKey cell_key(const ScoredSample& sample);

struct OperatingPoint {
  std::string method_id;
  double temperature = 1.0;
  int nfe = 1;
  int n_samples = 0;
  double unigram_entropy = 0.0;  ///< nats/token
  double cross_entropy = 0.0;    ///< nats/token
  double gen_ppl = 1.0;
  double kl_hat = 0.0;  ///< nats/token, unclamped

  bool negative_kl_hat() const noexcept { return kl_hat < 0.0; }
  CellKey key() const { return {method_id, temperature, nfe}; }
};

/// Builds an OperatingPoint from its two measured components; derived fields
/// are always computed here so the definitional identities hold.
OperatingPoint make_operating_point(CellKey key, int n_samples, double unigram_entropy,
                                    double cross_entropy);

double unigram_entropy(std::span<const TokenId> tokens);

double sample_cross_entropy(std::span<const double> ref_nll);

enum class Weighting { Macro, Token };
enum class EntropyScope { PerSequence, Pooled };

struct AggregateOptions {
  Weighting weighting = Weighting::Macro;
  EntropyScope entropy_scope = EntropyScope::PerSequence;
  std::optional<std::uint32_t> vocab_size;
};

OperatingPoint aggregate_cell(std::span<const ScoredSample> samples,
                              const AggregateOptions& options = {});

enum class Execution { Serial, Parallel };

/// Groups samples by cell and aggregates each one. Output is sorted by
/// (method, nfe, temperature) and identical under either execution policy.
std::vector<OperatingPoint> aggregate_cells(std::span<const ScoredSample> samples,
                                            const AggregateOptions& options = {},
                                            Execution execution = Execution::Parallel);

/// Sort order used by every emitted table: (method, nfe, temperature).
bool point_order(const OperatingPoint& a, const OperatingPoint& b);

}  // namespace genfrontier
