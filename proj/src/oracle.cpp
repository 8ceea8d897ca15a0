// SPDX-License-Identifier: Apache-2.0

#include "genfrontier/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "genfrontier/error.hpp"
#include "genfrontier/kernels.hpp"
#include "genfrontier/numeric.hpp"

namespace genfrontier::oracle {

namespace {

constexpr double kRowSumTolerance = 1e-12;

void check_row(const LogitRow& row, int vocab_size, const char* what) {
  if (static_cast<int>(row.size()) != vocab_size) {
    throw DataError(std::string(what) + ": logit row has " + std::to_string(row.size()) +
                    " entries, expected vocab_size " + std::to_string(vocab_size));
  }
  bool any_finite = false;
  for (double l : row) {
    if (std::isnan(l) || l == std::numeric_limits<double>::infinity()) {
      throw DataError(std::string(what) + ": logits must be finite or -inf");
    }
    any_finite = any_finite || std::isfinite(l);
  }
  if (!any_finite) throw DataError(std::string(what) + ": logit row has no finite entry");
}

LogitRow log_softmax(const LogitRow& logits, double temperature) {
  double m = -std::numeric_limits<double>::infinity();
  for (double l : logits) m = std::max(m, l / temperature);
  CompensatedSum z;
  for (double l : logits) z.add(std::exp(l / temperature - m));
  const double lse = m + std::log(z.value());
  LogitRow out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] / temperature - lse;
  return out;
}

double entropy_of(const std::vector<double>& probs) {
  CompensatedSum acc;
  for (double p : probs) {
    if (p > 0.0) acc.add(-p * std::log(p));
  }
  return acc.value();
}

std::string format_sequence(const std::vector<TokenId>& seq) {
  std::string s = "[";
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(seq[i]);
  }
  return s + "]";
}

double standard_deviation(double second_moment, double mean) {
  return std::sqrt(std::max(0.0, second_moment - mean * mean));
}

std::size_t draw(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it != cdf.end()) return static_cast<std::size_t>(it - cdf.begin());
  // u landed past the rounded total; take the last token with mass
  for (std::size_t i = cdf.size(); i-- > 0;) {
    if (i == 0 || cdf[i] > cdf[i - 1]) return i;
  }
  return 0;
}

std::vector<double> cumulative(const LogitRow& log_probs) {
  std::vector<double> cdf(log_probs.size());
  double run = 0.0;
  for (std::size_t i = 0; i < log_probs.size(); ++i) {
    run += std::exp(log_probs[i]);
    cdf[i] = run;
  }
  return cdf;
}

}  // namespace

ExactModel::ExactModel(ModelKind kind, int vocab_size, int seq_len, double temperature, LogitTable logits)
    : kind_(kind), vocab_size_(vocab_size), seq_len_(seq_len), temperature_(temperature), logits_(std::move(logits)) {
  if (vocab_size_ < 1 || vocab_size_ > kMaxVocab) {
    throw DataError("vocab_size must be in [1, " + std::to_string(kMaxVocab) + "]");
  }
  if (seq_len_ < 1 || seq_len_ > kMaxSeqLen) {
    throw DataError("seq_len must be in [1, " + std::to_string(kMaxSeqLen) + "]");
  }
  if (num_sequences() > kEnumerationBudget) {
    throw DataError("vocab_size^seq_len exceeds the enumeration budget of " + std::to_string(kEnumerationBudget));
  }
  if (!(temperature_ > 0.0) || !std::isfinite(temperature_)) {
    throw DataError("temperature must be positive and finite");
  }
  rebuild();
}

void ExactModel::rebuild() {
  rows_.clear();
  rows_.reserve(logits_.size());
  for (const auto& row : logits_) {
    rows_.push_back(log_softmax(row, temperature_));
    double total = 0.0;
    for (double lp : rows_.back()) total += std::exp(lp);
    if (std::abs(total - 1.0) > kRowSumTolerance) {
      throw std::logic_error("probability row does not sum to 1");
    }
  }
}

ExactModel ExactModel::product(LogitTable position_logits, double temperature) {
  if (position_logits.empty()) throw DataError("product model needs at least one position");
  const int vocab = static_cast<int>(position_logits.front().size());
  for (const auto& row : position_logits) check_row(row, vocab, "product model");
  const int len = static_cast<int>(position_logits.size());
  return ExactModel(ModelKind::ProductCategorical, vocab, len, temperature, std::move(position_logits));
}

ExactModel ExactModel::markov(LogitRow initial_logits, LogitTable transition_logits, int seq_len,
                              double temperature) {
  const int vocab = static_cast<int>(initial_logits.size());
  check_row(initial_logits, vocab, "markov initial");
  if (static_cast<int>(transition_logits.size()) != vocab) {
    throw DataError("markov transition table must have vocab_size rows");
  }
  for (const auto& row : transition_logits) check_row(row, vocab, "markov transition");
  LogitTable all;
  all.reserve(transition_logits.size() + 1);
  all.push_back(std::move(initial_logits));
  for (auto& row : transition_logits) all.push_back(std::move(row));
  return ExactModel(ModelKind::Markov1, vocab, seq_len, temperature, std::move(all));
}

std::uint64_t ExactModel::num_sequences() const noexcept {
  std::uint64_t n = 1;
  for (int i = 0; i < seq_len_; ++i) {
    n *= static_cast<std::uint64_t>(vocab_size_);
    if (n > kEnumerationBudget) return n;
  }
  return n;
}

ExactModel ExactModel::with_temperature(double temperature) const {
  return ExactModel(kind_, vocab_size_, seq_len_, temperature, logits_);
}

double ExactModel::log_prob(std::span<const TokenId> sequence) const {
  if (static_cast<int>(sequence.size()) != seq_len_) throw DataError("sequence length does not match model");
  double lp = 0.0;
  TokenId prev = 0;
  for (int i = 0; i < seq_len_; ++i) {
    const TokenId t = sequence[static_cast<std::size_t>(i)];
    if (t >= static_cast<TokenId>(vocab_size_)) throw DataError("token outside model vocabulary");
    lp += conditional_log_prob(i, prev, t);
    prev = t;
  }
  return lp;
}

std::vector<std::vector<double>> ExactModel::marginals() const {
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(seq_len_));
  auto to_probs = [](const LogitRow& row) {
    std::vector<double> p(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) p[i] = std::exp(row[i]);
    return p;
  };
  if (kind_ == ModelKind::ProductCategorical) {
    for (const auto& row : rows_) out.push_back(to_probs(row));
    return out;
  }
  const auto trans = transition_matrix();
  out.push_back(to_probs(rows_[0]));
  for (int i = 1; i < seq_len_; ++i) {
    const auto& prev = out.back();
    std::vector<double> next(static_cast<std::size_t>(vocab_size_));
    for (int b = 0; b < vocab_size_; ++b) {
      CompensatedSum acc;
      for (int a = 0; a < vocab_size_; ++a) acc.add(prev[static_cast<std::size_t>(a)] * trans[a][b]);
      next[static_cast<std::size_t>(b)] = acc.value();
    }
    out.push_back(std::move(next));
  }
  return out;
}

std::vector<std::vector<double>> ExactModel::transition_matrix() const {
  if (kind_ != ModelKind::Markov1) throw DataError("transition_matrix requires a Markov model");
  std::vector<std::vector<double>> m;
  for (int a = 0; a < vocab_size_; ++a) {
    std::vector<double> row(static_cast<std::size_t>(vocab_size_));
    for (int b = 0; b < vocab_size_; ++b) row[static_cast<std::size_t>(b)] = std::exp(rows_[1 + a][b]);
    m.push_back(std::move(row));
  }
  return m;
}

ExactMetrics exact_metrics(const ExactModel& q, const ExactModel& p_ref, Execution execution) {
  if (q.vocab_size() != p_ref.vocab_size() || q.seq_len() != p_ref.seq_len()) {
    throw DataError("q and p_ref must share vocab_size and seq_len");
  }
  const auto sums = execution == Execution::Serial ? kernels::enumerate_serial(q, p_ref)
                                                   : kernels::enumerate_parallel(q, p_ref);
  if (sums.support_violation >= 0) {
    const auto seq = kernels::decode_sequence(static_cast<std::uint64_t>(sums.support_violation),
                                              q.vocab_size(), q.seq_len());
    throw DataError("support violation: q assigns mass to " + format_sequence(seq) +
                    " where p_ref has probability zero");
  }

  const double len = static_cast<double>(q.seq_len());
  ExactMetrics m;
  m.total_probability = sums.mass.value();
  m.joint_entropy = sums.self_nll.value();
  m.per_token_entropy = m.joint_entropy / len;
  m.cross_entropy = sums.ref_nll.value() / len;
  m.kl = sums.log_ratio.value() / len;
  m.gen_ppl = std::exp(m.cross_entropy);
  m.unigram_entropy_expectation = sums.unigram.value();
  m.cross_entropy_sd = standard_deviation(sums.ref_nll_sq.value(), m.cross_entropy);
  m.self_entropy_sd = standard_deviation(sums.self_nll_sq.value(), m.per_token_entropy);
  m.unigram_entropy_sd = standard_deviation(sums.unigram_sq.value(), m.unigram_entropy_expectation);

  CompensatedSum marg;
  for (const auto& row : q.marginals()) marg.add(entropy_of(row));
  m.sum_marginal_entropy = marg.value();
  return m;
}

std::vector<SweepPoint> sweep(const ExactModel& q_base, const ExactModel& p_ref,
                              std::span<const double> temperatures) {
  if (temperatures.empty()) throw DataError("sweep needs at least one temperature");
  std::vector<SweepPoint> out;
  out.reserve(temperatures.size());
  for (double t : temperatures) {
    if (!(t > 0.0)) throw DataError("sweep temperatures must be positive");
    out.emplace_back(t, exact_metrics(q_base.with_temperature(t), p_ref));
  }
  return out;
}

std::vector<ScoredSample> sample(const ExactModel& q, const ExactModel& p_ref, int n, std::uint64_t seed,
                                 const std::string& method_id, int nfe) {
  if (n < 1) throw DataError("sample count must be >= 1");
  if (q.vocab_size() != p_ref.vocab_size() || q.seq_len() != p_ref.seq_len()) {
    throw DataError("q and p_ref must share vocab_size and seq_len");
  }
  // CDF tables in the same row layout as the model.
  const std::size_t n_rows = q.kind() == ModelKind::ProductCategorical ? static_cast<std::size_t>(q.seq_len())
                                                                       : static_cast<std::size_t>(q.vocab_size()) + 1;
  std::vector<std::vector<double>> cdfs;
  for (std::size_t r = 0; r < n_rows; ++r) {
    LogitRow row(static_cast<std::size_t>(q.vocab_size()));
    for (int t = 0; t < q.vocab_size(); ++t) {
      const int pos = q.kind() == ModelKind::ProductCategorical ? static_cast<int>(r) : (r == 0 ? 0 : 1);
      const TokenId prev = r == 0 ? 0 : static_cast<TokenId>(r - 1);
      row[static_cast<std::size_t>(t)] = q.conditional_log_prob(pos, prev, static_cast<TokenId>(t));
    }
    cdfs.push_back(cumulative(row));
  }

  std::mt19937_64 rng(seed);
  std::vector<ScoredSample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    ScoredSample sample;
    sample.method_id = method_id;
    sample.temperature = q.temperature();
    sample.nfe = nfe;
    sample.seed = static_cast<std::int64_t>(seed);
    TokenId prev = 0;
    for (int i = 0; i < q.seq_len(); ++i) {
      const std::size_t r = q.kind() == ModelKind::ProductCategorical ? static_cast<std::size_t>(i)
                                                                      : (i == 0 ? 0 : static_cast<std::size_t>(prev) + 1);
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      const auto tok = static_cast<TokenId>(draw(cdfs[r], u));
      const double lp = p_ref.conditional_log_prob(i, prev, tok);
      if (std::isinf(lp)) throw DataError("support violation while sampling: p_ref gives a drawn token zero mass");
      sample.tokens.push_back(tok);
      sample.ref_nll.push_back(std::max(0.0, -lp) + 0.0);
      prev = tok;
    }
    out.push_back(std::move(sample));
  }
  return out;
}

ExactModel random_model(ModelKind kind, int vocab_size, int seq_len, std::mt19937_64& rng, double logit_scale) {
  std::normal_distribution<double> normal(0.0, logit_scale);
  auto row = [&] {
    LogitRow r(static_cast<std::size_t>(vocab_size));
    for (auto& l : r) l = normal(rng);
    return r;
  };
  if (kind == ModelKind::ProductCategorical) {
    LogitTable rows;
    for (int i = 0; i < seq_len; ++i) rows.push_back(row());
    return ExactModel::product(std::move(rows));
  }
  LogitRow init = row();
  LogitTable trans;
  for (int i = 0; i < vocab_size; ++i) trans.push_back(row());
  return ExactModel::markov(std::move(init), std::move(trans), seq_len);
}

double max_transition_tv_from_stationary(const ExactModel& markov) {
  const auto trans = markov.transition_matrix();
  const std::size_t v = trans.size();
  std::vector<double> pi(v, 1.0 / static_cast<double>(v));
  // Lazy power iteration: same fixed point, converges for periodic chains.
  for (int iter = 0; iter < 100000; ++iter) {
    std::vector<double> next(v, 0.0);
    for (std::size_t a = 0; a < v; ++a) {
      for (std::size_t b = 0; b < v; ++b) next[b] += pi[a] * trans[a][b];
    }
    double change = 0.0;
    for (std::size_t b = 0; b < v; ++b) {
      next[b] = 0.5 * (next[b] + pi[b]);
      change = std::max(change, std::abs(next[b] - pi[b]));
    }
    pi = std::move(next);
    if (change < 1e-16) break;
  }
  double worst = 0.0;
  for (const auto& row : trans) {
    double tv = 0.0;
    for (std::size_t b = 0; b < v; ++b) tv += std::abs(row[b] - pi[b]);
    worst = std::max(worst, 0.5 * tv);
  }
  return worst;
}

double product_cross_entropy(const ExactModel& q, const ExactModel& p_ref) {
  if (q.kind() != ModelKind::ProductCategorical || p_ref.kind() != ModelKind::ProductCategorical) {
    throw DataError("product_cross_entropy requires product models");
  }
  if (q.vocab_size() != p_ref.vocab_size() || q.seq_len() != p_ref.seq_len()) {
    throw DataError("q and p_ref must share vocab_size and seq_len");
  }
  CompensatedSum acc;
  for (int i = 0; i < q.seq_len(); ++i) {
    for (int t = 0; t < q.vocab_size(); ++t) {
      const double lq = q.conditional_log_prob(i, 0, static_cast<TokenId>(t));
      if (std::isinf(lq)) continue;
      acc.add(std::exp(lq) * -p_ref.conditional_log_prob(i, 0, static_cast<TokenId>(t)));
    }
  }
  return acc.value() / static_cast<double>(q.seq_len());
}

ExactModel match_cross_entropy(const ExactModel& q, const ExactModel& p_ref, double target) {
  const double current = product_cross_entropy(q, p_ref);
  if (current == target) return q;
  const bool lower = target < current;
  // Cross entropy is linear in each position's distribution, so mixing every
  // position with weight t toward its extreme-surprisal token moves it
  // linearly to the mean extreme.
  const int vocab = q.vocab_size();
  std::vector<int> pick(static_cast<std::size_t>(q.seq_len()));
  CompensatedSum extreme;
  for (int i = 0; i < q.seq_len(); ++i) {
    int best = 0;
    for (int t = 1; t < vocab; ++t) {
      const double s = -p_ref.conditional_log_prob(i, 0, static_cast<TokenId>(t));
      const double sb = -p_ref.conditional_log_prob(i, 0, static_cast<TokenId>(best));
      if (lower ? s < sb : s > sb) best = t;
    }
    pick[static_cast<std::size_t>(i)] = best;
    extreme.add(-p_ref.conditional_log_prob(i, 0, static_cast<TokenId>(best)));
  }
  const double extreme_ce = extreme.value() / static_cast<double>(q.seq_len());
  if (!std::isfinite(extreme_ce) || (lower ? !(extreme_ce < target) : !(extreme_ce > target))) {
    throw DataError("target cross entropy is not attainable by mixing");
  }
  const double t = (current - target) / (current - extreme_ce);

  LogitTable rows;
  for (int i = 0; i < q.seq_len(); ++i) {
    LogitRow row(static_cast<std::size_t>(vocab));
    for (int v = 0; v < vocab; ++v) {
      const double pv = std::exp(q.conditional_log_prob(i, 0, static_cast<TokenId>(v)));
      const double mixed = (1.0 - t) * pv + (v == pick[static_cast<std::size_t>(i)] ? t : 0.0);
      row[static_cast<std::size_t>(v)] = mixed > 0.0 ? std::log(mixed) : -std::numeric_limits<double>::infinity();
    }
    rows.push_back(std::move(row));
  }
  return ExactModel::product(std::move(rows));
}

MatchedKlPair matched_kl_pair(const ExactModel& base, double delta) {
  if (base.kind() != ModelKind::ProductCategorical) {
    throw DataError("matched_kl_pair requires a product model");
  }
  if (!(delta > 0.0)) throw DataError("entropy gap must be positive");
  const ExactModel reference = base.with_temperature(1.0);
  constexpr double kTLow = 0.02;
  constexpr double kTHigh = 50.0;

  auto metrics_at = [&](double t) { return exact_metrics(base.with_temperature(t), reference, Execution::Serial); };

  // KL to the T = 1 model grows monotonically as T moves away from 1 on
  // either side, so each level has one solution per side.
  auto solve_temperature = [&](double kl_target, double lo, double hi, bool kl_increasing) {
    for (int iter = 0; iter < 400; ++iter) {
      const double mid = std::sqrt(lo * hi);
      if (mid <= lo || mid >= hi) break;
      const bool above = metrics_at(mid).kl > kl_target;
      if (above == kl_increasing) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return std::sqrt(lo * hi);
  };
  auto gap_at = [&](double kl_level, double& t1, double& t2) {
    t1 = solve_temperature(kl_level, kTLow, 1.0, false);
    t2 = solve_temperature(kl_level, 1.0, kTHigh, true);
    return metrics_at(t2).per_token_entropy - metrics_at(t1).per_token_entropy;
  };

  const double kl_max = std::min(metrics_at(kTLow).kl, metrics_at(kTHigh).kl);
  double t1 = 1.0;
  double t2 = 1.0;
  if (gap_at(kl_max, t1, t2) < delta) {
    throw DataError("entropy gap " + std::to_string(delta) + " not reachable for this base model");
  }
  double lo = 0.0;
  double hi = kl_max;
  for (int iter = 0; iter < 400; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (gap_at(mid, t1, t2) < delta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  gap_at(0.5 * (lo + hi), t1, t2);
  return {reference, base.with_temperature(t1), base.with_temperature(t2)};
}

}  // namespace genfrontier::oracle
