#pragma once

// SPDX-License-Identifier: Apache-2.0

/**
 * @file oracle.hpp
 * @brief Small sequence distributions whose metrics can be computed exactly.
 *
 * An ExactModel is either a product of per-position categoricals or a
 * first-order Markov chain over a vocabulary of at most 12 tokens and
 * sequences of at most 6 positions. Every sequence can be enumerated
 * (vocab_size^seq_len <= 3e6), so joint entropy, cross entropy, KL, the
 * per-position marginals and the expected unigram entropy are all exact
 * sums. Temperature divides the logits before the softmax.
 *
 * These models stand in for both the generator and the reference model when
 * checking the entropy / perplexity / KL identities and when producing
 * ground truth for the frontier queries.
 */

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "genfrontier/core_metrics.hpp"

namespace genfrontier::oracle {

inline constexpr int kMaxVocab = 12;
inline constexpr int kMaxSeqLen = 6;
inline constexpr std::uint64_t kEnumerationBudget = 3'000'000;

enum class ModelKind { ProductCategorical, Markov1 };

using LogitRow = std::vector<double>;
using LogitTable = std::vector<LogitRow>;

class ExactModel {
 public:
  /// One logit row per position; seq_len = position_logits.size().
  static ExactModel product(LogitTable position_logits, double temperature = 1.0);

  /// transition_logits[prev][next]; square, vocab_size rows.
  static ExactModel markov(LogitRow initial_logits, LogitTable transition_logits, int seq_len,
                           double temperature = 1.0);

  ModelKind kind() const noexcept { return kind_; }
  int vocab_size() const noexcept { return vocab_size_; }
  int seq_len() const noexcept { return seq_len_; }
  double temperature() const noexcept { return temperature_; }
  std::uint64_t num_sequences() const noexcept;

  /// Same logits, different temperature (absolute, not compounded).
  ExactModel with_temperature(double temperature) const;

  /// ln q(token | previous token) at a position; `prev` is ignored for
  /// position 0 and for product models.
  double conditional_log_prob(int position, TokenId prev, TokenId token) const noexcept {
    if (kind_ == ModelKind::ProductCategorical) return rows_[static_cast<std::size_t>(position)][token];
    return position == 0 ? rows_[0][token] : rows_[1 + prev][token];
  }

  double log_prob(std::span<const TokenId> sequence) const;

  /// Exact per-position marginal distributions (forward propagation).
  std::vector<std::vector<double>> marginals() const;

  /// Row-stochastic transition matrix (Markov models only).
  std::vector<std::vector<double>> transition_matrix() const;

  const LogitTable& logits() const noexcept { return logits_; }

 private:
  ExactModel(ModelKind kind, int vocab_size, int seq_len, double temperature, LogitTable logits);
  void rebuild();

  ModelKind kind_;
  int vocab_size_;
  int seq_len_;
  double temperature_;
  // Product: one row per position. Markov: initial row then one row per
  // previous token.
  LogitTable logits_;
  LogitTable rows_;  // log-softmax(logits / temperature)
};

struct ExactMetrics {
  double joint_entropy = 0.0;        ///< nats/sequence
  double per_token_entropy = 0.0;    ///< nats/token
  double cross_entropy = 0.0;        ///< nats/token
  double kl = 0.0;                   ///< nats/token, summed directly as q ln(q/p)
  double gen_ppl = 1.0;              ///< exp(cross_entropy)
  double sum_marginal_entropy = 0.0; ///< nats/sequence
  double unigram_entropy_expectation = 0.0;  ///< nats/token

  // Per-sequence spread, for Monte Carlo tolerances.
  double cross_entropy_sd = 0.0;     ///< sd of a sample's mean reference NLL
  double self_entropy_sd = 0.0;      ///< sd of -ln q(x) / seq_len
  double unigram_entropy_sd = 0.0;   ///< sd of a sample's unigram entropy
  double total_probability = 0.0;
};

ExactMetrics exact_metrics(const ExactModel& q, const ExactModel& p_ref,
                           Execution execution = Execution::Parallel);

using SweepPoint = std::pair<double, ExactMetrics>;

std::vector<SweepPoint> sweep(const ExactModel& q_base, const ExactModel& p_ref,
                              std::span<const double> temperatures);

/// n sequences drawn from q and scored under p_ref. Deterministic in `seed`.
std::vector<ScoredSample> sample(const ExactModel& q, const ExactModel& p_ref, int n,
                                 std::uint64_t seed, const std::string& method_id = "oracle",
                                 int nfe = 1);

/// Gaussian logits with the given scale.
ExactModel random_model(ModelKind kind, int vocab_size, int seq_len, std::mt19937_64& rng,
                        double logit_scale = 1.0);

/// Largest total-variation distance between a transition row and the
/// chain's stationary distribution (Markov models only).
double max_transition_tv_from_stationary(const ExactModel& markov);

// --- Constructions -------------------------------------------------------

struct MatchedKlPair {
  ExactModel reference;
  ExactModel lower_entropy;   ///< base at temperature < 1
  ExactModel higher_entropy;  ///< base at temperature > 1
};

/// Two temperatures of one product model, on either side of T = 1, whose
/// KL to the T = 1 model is equal and whose per-token entropies differ by
/// delta. Throws DataError if delta is not reachable within T in [0.02, 50].
MatchedKlPair matched_kl_pair(const ExactModel& base, double delta);

/// Mixes each position of product model q toward a point mass until its
/// per-token cross entropy against p_ref equals target. Throws DataError if
/// target is not strictly between the attainable extremes.
ExactModel match_cross_entropy(const ExactModel& q, const ExactModel& p_ref, double target);

/// Per-token cross entropy of a product model, from the marginals alone.
double product_cross_entropy(const ExactModel& q, const ExactModel& p_ref);

// --- Self check ----------------------------------------------------------

struct CheckResult {
  std::string name;
  bool passed = false;
  bool informational = false;
  std::string detail;
};

struct SelfcheckOptions {
  int trials = 200;
  std::uint64_t seed = 20240601;
};

std::vector<CheckResult> run_selfcheck(const SelfcheckOptions& options = {});

}  // namespace genfrontier::oracle
