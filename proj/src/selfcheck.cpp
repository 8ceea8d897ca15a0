// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdio>

#include "genfrontier/error.hpp"
#include "genfrontier/oracle.hpp"

namespace genfrontier::oracle {

namespace {

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

struct Draws {
  std::mt19937_64 rng;

  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

  ExactModel model(ModelKind kind, int vocab, int len) {
    return random_model(kind, vocab, len, rng, uniform(0.3, 3.0));
  }
};

CheckResult kl_identity(Draws& d, int trials) {
  CheckResult r{"kl identity ln(gen_ppl) = kl + entropy", true, false, {}};
  double worst = 0.0;
  double min_kl = INFINITY;
  for (int i = 0; i < trials; ++i) {
    const int vocab = d.uniform_int(2, 8);
    const int len = d.uniform_int(1, 5);
    const auto qk = i % 2 ? ModelKind::Markov1 : ModelKind::ProductCategorical;
    const auto pk = (i / 2) % 2 ? ModelKind::Markov1 : ModelKind::ProductCategorical;
    const auto q = d.model(qk, vocab, len);
    const auto p = d.model(pk, vocab, len);
    const auto m = exact_metrics(q, p);
    worst = std::max(worst, std::abs(std::log(m.gen_ppl) - (m.kl + m.per_token_entropy)));
    min_kl = std::min(min_kl, m.kl);
  }
  r.passed = worst <= 1e-12 && min_kl >= -1e-15;
  r.detail = fmt("max residual %.3g, min kl %.3g", worst, min_kl);
  return r;
}

CheckResult chain_rule(Draws& d, int trials) {
  CheckResult r{"chain-rule bound joint <= sum of marginals", true, false, {}};
  int strict_expected = 0;
  int strict_failed = 0;
  double worst_excess = -INFINITY;
  for (int i = 0; i < trials; ++i) {
    const auto q = d.model(ModelKind::Markov1, d.uniform_int(2, 8), d.uniform_int(2, 5));
    const auto m = exact_metrics(q, q);
    const double gap = m.sum_marginal_entropy - m.joint_entropy;
    worst_excess = std::max(worst_excess, -gap);
    if (max_transition_tv_from_stationary(q) > 0.05) {
      ++strict_expected;
      if (!(gap > 1e-12)) ++strict_failed;
    }
  }
  r.passed = worst_excess <= 1e-12 && strict_failed == 0;
  r.detail = fmt("max excess %.3g; ", worst_excess) + std::to_string(strict_failed) + " of " +
             std::to_string(strict_expected) + " dependent chains not strict";
  return r;
}

CheckResult e_delta() {
  CheckResult r{"matched-KL perplexity ratio equals e^delta", true, false, {}};
  const auto base = ExactModel::product({{2.0, 0.5, -0.3, -1.0, 1.2, 0.1}, {1.5, -0.7, 0.4, 0.9, -1.4, 0.2}});
  double worst = 0.0;
  for (double delta : {0.1, 0.3, 1.0}) {
    const auto pair = matched_kl_pair(base, delta);
    const auto lo = exact_metrics(pair.lower_entropy, pair.reference);
    const auto hi = exact_metrics(pair.higher_entropy, pair.reference);
    const double ratio = hi.gen_ppl / lo.gen_ppl;
    worst = std::max(worst, std::abs(ratio / std::exp(delta) - 1.0));
  }
  r.passed = worst <= 1e-9;
  r.detail = fmt("max relative error %.3g", worst);
  return r;
}

CheckResult matched_ppl(Draws& d, int pairs) {
  CheckResult r{"matched-perplexity ranking sign(dKL) = -sign(dH)", true, false, {}};
  int violations = 0;
  int built = 0;
  while (built < pairs) {
    const int vocab = d.uniform_int(3, 8);
    const int len = d.uniform_int(1, 3);
    const auto p = d.model(ModelKind::ProductCategorical, vocab, len);
    const auto q1 = d.model(ModelKind::ProductCategorical, vocab, len);
    const auto raw = d.model(ModelKind::ProductCategorical, vocab, len);
    try {
      const auto q2 = match_cross_entropy(raw, p, product_cross_entropy(q1, p));
      const auto m1 = exact_metrics(q1, p);
      const auto m2 = exact_metrics(q2, p);
      if (std::abs(m1.per_token_entropy - m2.per_token_entropy) < 1e-9) continue;
      ++built;
      const double dk = m1.kl - m2.kl;
      const double dh = m1.per_token_entropy - m2.per_token_entropy;
      if ((dk > 0) == (dh > 0)) ++violations;
    } catch (const DataError&) {
      continue;
    }
  }
  r.passed = violations == 0;
  r.detail = std::to_string(violations) + " sign violations in " + std::to_string(pairs) + " pairs";
  return r;
}

CheckResult temperature_monotone(Draws& d, int trials) {
  CheckResult r{"entropy increases with temperature", true, false, {}};
  int failures = 0;
  for (int i = 0; i < trials; ++i) {
    const auto q = d.model(ModelKind::ProductCategorical, d.uniform_int(2, 8), d.uniform_int(1, 4));
    const double temps[] = {0.5, 1.0, 2.0};
    const auto pts = sweep(q, q.with_temperature(1.0), temps);
    if (!(pts[0].second.per_token_entropy < pts[1].second.per_token_entropy &&
          pts[1].second.per_token_entropy < pts[2].second.per_token_entropy)) {
      ++failures;
    }
  }
  r.passed = failures == 0;
  r.detail = std::to_string(failures) + " non-monotone sweeps";
  return r;
}

CheckResult serial_parallel(Draws& d) {
  CheckResult r{"serial and parallel enumeration agree", true, false, {}};
  double worst = 0.0;
  for (int i = 0; i < 8; ++i) {
    const auto q = d.model(i % 2 ? ModelKind::Markov1 : ModelKind::ProductCategorical, 8, 5);
    const auto p = d.model(ModelKind::Markov1, 8, 5);
    const auto a = exact_metrics(q, p, Execution::Serial);
    const auto b = exact_metrics(q, p, Execution::Parallel);
    for (auto [x, y] : {std::pair{a.cross_entropy, b.cross_entropy}, std::pair{a.kl, b.kl},
                        std::pair{a.joint_entropy, b.joint_entropy},
                        std::pair{a.unigram_entropy_expectation, b.unigram_entropy_expectation}}) {
      worst = std::max(worst, std::abs(x - y) / std::max(1.0, std::abs(x)));
    }
  }
  r.passed = worst <= 1e-12;
  r.detail = fmt("max relative difference %.3g", worst);
  return r;
}

CheckResult unigram_ranking_agreement(Draws& d, int pairs) {
  CheckResult r{"unigram vs joint entropy ranking agreement (Markov)", true, true, {}};
  int agree = 0;
  for (int i = 0; i < pairs; ++i) {
    const int vocab = d.uniform_int(3, 6);
    const int len = d.uniform_int(3, 5);
    const auto a = d.model(ModelKind::Markov1, vocab, len);
    const auto b = d.model(ModelKind::Markov1, vocab, len);
    const auto ma = exact_metrics(a, a);
    const auto mb = exact_metrics(b, b);
    const bool joint = ma.per_token_entropy > mb.per_token_entropy;
    const bool unigram = ma.unigram_entropy_expectation > mb.unigram_entropy_expectation;
    if (joint == unigram) ++agree;
  }
  r.detail = fmt("%.1f%% of pairs agree", 100.0 * agree / std::max(1, pairs));
  return r;
}

}  // namespace

std::vector<CheckResult> run_selfcheck(const SelfcheckOptions& options) {
  if (options.trials < 1) throw UsageError("selfcheck needs at least one trial");
  Draws d{std::mt19937_64(options.seed)};
  std::vector<CheckResult> out;
  out.push_back(kl_identity(d, options.trials));
  out.push_back(chain_rule(d, options.trials));
  out.push_back(e_delta());
  out.push_back(matched_ppl(d, std::max(1, options.trials / 5)));
  out.push_back(temperature_monotone(d, std::max(1, options.trials / 5)));
  out.push_back(serial_parallel(d));
  out.push_back(unigram_ranking_agreement(d, std::max(1, options.trials / 5)));
  return out;
}

}  // namespace genfrontier::oracle
