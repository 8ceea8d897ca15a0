// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "genfrontier/corpus_stats.hpp"
#include "genfrontier/error.hpp"

using namespace genfrontier;

namespace {

std::vector<TokenId> random_doc(std::mt19937_64& rng, std::size_t len, int vocab) {
  std::uniform_int_distribution<int> tok(0, vocab - 1);
  std::vector<TokenId> d(len);
  for (auto& t : d) t = static_cast<TokenId>(tok(rng));
  return d;
}

std::vector<std::vector<TokenId>> random_corpus(std::mt19937_64& rng, int docs, std::size_t window) {
  std::uniform_int_distribution<std::size_t> len(window / 2, window * 5);
  std::uniform_int_distribution<int> vocab(2, 400);
  std::vector<std::vector<TokenId>> c;
  for (int i = 0; i < docs; ++i) c.push_back(random_doc(rng, len(rng), vocab(rng)));
  return c;
}

void check_same(const EntropyStats& a, const EntropyStats& b) {
  CHECK(a.n_windows == b.n_windows);
  CHECK(a.mean == b.mean);
  CHECK(a.median == b.median);
  CHECK(a.q1 == b.q1);
  CHECK(a.q3 == b.q3);
  CHECK(a.sigma == b.sigma);
  CHECK(a.min == b.min);
  CHECK(a.max == b.max);
}

}  // namespace

TEST_CASE("degenerate corpus of identical tokens") {
  const std::vector<std::vector<TokenId>> corpus{std::vector<TokenId>(2048, 42)};
  const auto s = corpus_entropy_stats(corpus, 1024);
  CHECK(s.n_windows == 2);
  CHECK(s.mean == 0.0);
  CHECK(s.median == 0.0);
  CHECK(s.sigma == 0.0);
  REQUIRE(s.histogram.size() == 1);
  CHECK(s.histogram[0].count == 2);
}

TEST_CASE("every window a permutation of 1024 distinct tokens") {
  std::mt19937_64 rng(31);
  std::vector<std::vector<TokenId>> corpus;
  for (int d = 0; d < 3; ++d) {
    std::vector<TokenId> doc;
    for (int w = 0; w < 2 + d; ++w) {
      std::vector<TokenId> window(1024);
      std::iota(window.begin(), window.end(), TokenId{0});
      std::shuffle(window.begin(), window.end(), rng);
      doc.insert(doc.end(), window.begin(), window.end());
    }
    corpus.push_back(doc);
  }
  const auto s = corpus_entropy_stats(corpus, 1024);
  CHECK(s.n_windows == 9);
  CHECK(s.mean == doctest::Approx(std::log(1024.0)).epsilon(1e-15));
  CHECK(s.median == doctest::Approx(std::log(1024.0)).epsilon(1e-15));
  CHECK(s.sigma == doctest::Approx(0.0));
}

TEST_CASE("quantiles interpolate between order statistics") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  CHECK(sorted_quantile(v, 0.5) == 2.5);
  CHECK(sorted_quantile(v, 0.25) == 1.75);
  CHECK(sorted_quantile(v, 0.75) == 3.25);
  CHECK(sorted_quantile(v, 0.0) == 1.0);
  CHECK(sorted_quantile(v, 1.0) == 4.0);
  const auto s = summarize_window_entropies({4.0, 1.0, 3.0, 2.0}, 8, 3);
  CHECK(s.mean == 2.5);
  CHECK(s.sigma == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
  CHECK(s.iqr_band() == std::pair{1.75, 3.25});
  REQUIRE(s.histogram.size() == 3);
  CHECK(s.histogram[0].count + s.histogram[1].count + s.histogram[2].count == 4);
  CHECK(s.histogram[2].hi == 4.0);
}

TEST_CASE("short documents are skipped and counted") {
  const std::vector<std::vector<TokenId>> corpus{std::vector<TokenId>(10, 1), std::vector<TokenId>(25, 1),
                                                 std::vector<TokenId>(3, 1)};
  const auto s = corpus_entropy_stats(corpus, 10);
  CHECK(s.n_documents == 3);
  CHECK(s.n_skipped_documents == 1);
  CHECK(s.n_windows == 3);
  const std::vector<std::vector<TokenId>> tiny{std::vector<TokenId>(3, 1), std::vector<TokenId>(5, 2)};
  CHECK_THROWS_WITH_AS(corpus_entropy_stats(tiny, 10), doctest::Contains("2 of 2 documents"), DataError);
  CHECK_THROWS_AS(corpus_entropy_stats(std::vector<std::vector<TokenId>>{}, 10), DataError);
  CHECK_THROWS_AS(CorpusEntropyAccumulator(0), DataError);
}

TEST_CASE("band_check") {
  const auto published = openwebtext_reference_bands();
  CHECK(published.mean == 5.432);
  CHECK(published.median == 5.471);
  CHECK(published.iqr_band == std::pair{5.37, 5.55});
  CHECK(published.sigma_band == std::pair{5.21, 5.66});
  CHECK(band_check(5.60, published) == Band::InSigma);
  CHECK(band_check(published.median, published) == Band::InIqr);
  CHECK(band_check(5.0, published) == Band::Outside);
  CHECK(std::string(to_string(Band::InSigma)) == "in_sigma");

  std::mt19937_64 rng(32);
  const auto s = corpus_entropy_stats(random_corpus(rng, 20, 64), 64);
  CHECK(band_check(s.median, s) == Band::InIqr);
  CHECK(band_check(s.mean + 2.0 * s.sigma, s) == Band::Outside);
}

TEST_CASE("property: invariants on random corpora") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t window = 16 + 16 * static_cast<std::size_t>(trial % 4);
    auto corpus = random_corpus(rng, 30, window);
    const auto s = corpus_entropy_stats(corpus, window);
    CHECK(s.q1 <= s.median);
    CHECK(s.median <= s.q3);
    CHECK(s.sigma >= 0.0);
    std::size_t total = 0;
    for (const auto& b : s.histogram) total += b.count;
    CHECK(total == s.n_windows);

    std::shuffle(corpus.begin(), corpus.end(), rng);
    check_same(s, corpus_entropy_stats(corpus, window));
  }
}

TEST_CASE("property: a duplicated window moves the median at most one interpolation step") {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t window = 32;
    auto corpus = random_corpus(rng, 12, window);
    const auto before = corpus_entropy_stats(corpus, window);
    const auto& src = corpus[static_cast<std::size_t>(trial) % corpus.size()];
    if (src.size() < window) continue;
    corpus.emplace_back(src.begin(), src.begin() + window);
    const auto after = corpus_entropy_stats(corpus, window);
    CHECK(after.min == before.min);
    CHECK(after.max == before.max);

    // with n sorted values, a duplicate can shift the median by at most the
    // gap between the order statistics adjacent to it
    std::vector<double> ents;
    for (const auto& doc : corpus) {
      for (std::size_t i = 0; i + window <= doc.size(); i += window) {
        ents.push_back(unigram_entropy(std::span<const TokenId>(doc.data() + i, window)));
      }
    }
    std::sort(ents.begin(), ents.end());
    const std::size_t mid = ents.size() / 2;
    const double step = ents[std::min(mid + 1, ents.size() - 1)] - ents[mid > 0 ? mid - 1 : 0];
    CHECK(std::abs(after.median - before.median) <= step + 1e-15);
  }
}

TEST_CASE("property: window_len 1 gives zero entropy everywhere") {
  std::mt19937_64 rng(35);
  const auto s = corpus_entropy_stats(random_corpus(rng, 5, 8), 1);
  CHECK(s.max == 0.0);
  CHECK(s.mean == 0.0);
  CHECK(s.sigma == 0.0);
}

TEST_CASE("serial and parallel accumulation agree, including across flushes") {
  std::mt19937_64 rng(36);
  std::vector<std::vector<TokenId>> corpus;
  for (int i = 0; i < 6; ++i) corpus.push_back(random_doc(rng, 300'000 + 7 * i, 5000));
  CorpusEntropyAccumulator ser(1024, Execution::Serial);
  CorpusEntropyAccumulator par(1024, Execution::Parallel);
  for (const auto& d : corpus) {
    ser.add_document(d);
    par.add_document(d);
  }
  const auto a = ser.finish();
  const auto b = par.finish();
  check_same(a, b);
  std::size_t expected = 0;
  for (const auto& d : corpus) expected += d.size() / 1024;
  CHECK(a.n_windows == expected);
}
