// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "genfrontier/error.hpp"
#include "genfrontier/frontier.hpp"
#include "genfrontier/oracle.hpp"
#include "test_helpers.hpp"

using namespace genfrontier;
namespace orc = genfrontier::oracle;

namespace {

Frontier line(std::vector<std::pair<double, double>> pts, FrontierMode mode = FrontierMode::Raw,
              const std::string& method = "m") {
  std::vector<FrontierPoint> fp;
  double t = 0.5;
  for (auto [h, l] : pts) fp.push_back({h, l, t += 0.1, 100});
  return Frontier::from_points(method, 8, fp, mode);
}

OperatingPoint op(const std::string& m, int nfe, double t, double h, double ce) {
  return make_operating_point({m, t, nfe}, 10, h, ce);
}

Frontier random_monotone(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> step(0.01, 0.3);
  std::vector<std::pair<double, double>> pts;
  double h = 4.0 + step(rng);
  double l = 2.0 + step(rng);
  for (int i = 0; i < n; ++i) {
    pts.emplace_back(h, l);
    h += step(rng);
    l += step(rng);
  }
  return line(pts);
}

}  // namespace

TEST_CASE("build: points are sorted by entropy") {
  const std::vector<OperatingPoint> pts{op("m", 8, 1.0, 5.3, 3.0), op("m", 8, 1.1, 5.5, 3.2),
                                        op("m", 8, 1.05, 5.4, 3.1)};
  const auto f = Frontier::build(pts);
  REQUIRE(f.points().size() == 3);
  CHECK(f.points()[0].entropy == 5.3);
  CHECK(f.points()[1].entropy == 5.4);
  CHECK(f.points()[2].entropy == 5.5);
  CHECK(f.points()[1].temperature == 1.05);
}

TEST_CASE("build: pareto prunes a point dominated on both axes") {
  const auto raw = line({{5.4, 3.0}, {5.5, 2.9}});
  CHECK(raw.points().size() == 2);
  const auto pareto = line({{5.4, 3.0}, {5.5, 2.9}}, FrontierMode::Pareto);
  REQUIRE(pareto.points().size() == 1);
  CHECK(pareto.points()[0].entropy == 5.5);
  CHECK(pareto.points()[0].log_ppl == 2.9);
}

TEST_CASE("build: entropy ties collapse to the lower log_ppl") {
  const auto f = line({{5.400000, 3.1}, {5.4000005, 3.0}});
  REQUIRE(f.points().size() == 1);
  CHECK(f.points()[0].entropy == 5.4);
  CHECK(f.points()[0].log_ppl == 3.0);
}

TEST_CASE("build: errors") {
  const std::vector<OperatingPoint> mixed{op("a", 8, 1.0, 5.3, 3.0), op("b", 8, 1.0, 5.4, 3.1)};
  CHECK_THROWS_AS(Frontier::build(mixed), DataError);
  const std::vector<OperatingPoint> mixed_nfe{op("a", 8, 1.0, 5.3, 3.0), op("a", 16, 1.0, 5.4, 3.1)};
  CHECK_THROWS_AS(Frontier::build(mixed_nfe), DataError);
  CHECK_THROWS_AS(Frontier::build(std::vector<OperatingPoint>{}), DataError);
  CHECK_THROWS_AS(parse_frontier_mode("convex"), UsageError);
  CHECK(parse_frontier_mode("pareto") == FrontierMode::Pareto);
}

TEST_CASE("single-point frontier stores but does not answer queries") {
  const auto f = line({{5.0, 3.0}});
  CHECK(f.points().size() == 1);
  CHECK_THROWS_AS(f.ppl_at_entropy(5.0), DataError);
  CHECK_THROWS_AS(f.entropy_at_ppl(20.0), DataError);
}

TEST_CASE("ppl_at_entropy: log-space midpoint and knots") {
  const auto f = line({{5.0, std::log(16.0)}, {6.0, std::log(32.0)}});
  CHECK(f.ppl_at_entropy(5.5) == doctest::Approx(22.627416997969522).epsilon(1e-14));
  CHECK(f.ppl_at_entropy(5.0) == doctest::Approx(16.0).epsilon(1e-15));
  CHECK(f.log_ppl_at_entropy(6.0) == std::log(32.0));
}

TEST_CASE("ppl_at_entropy: out of range carries the nearest endpoint") {
  const auto f = line({{5.0, std::log(16.0)}, {6.0, std::log(32.0)}});
  try {
    (void)f.ppl_at_entropy(6.5);
    FAIL("expected OutOfRangeError");
  } catch (const OutOfRangeError& e) {
    CHECK(e.nearest_entropy() == 6.0);
    CHECK(e.nearest_ppl() == doctest::Approx(32.0));
    CHECK(e.query() == 6.5);
  }
  try {
    (void)f.ppl_at_entropy(4.0);
    FAIL("expected OutOfRangeError");
  } catch (const OutOfRangeError& e) {
    CHECK(e.nearest_entropy() == 5.0);
    CHECK(e.nearest_ppl() == doctest::Approx(16.0));
  }
}

TEST_CASE("entropy_at_ppl: inverse, empty, and every crossing") {
  const auto f = line({{5.0, std::log(16.0)}, {6.0, std::log(32.0)}});
  const auto hits = f.entropy_at_ppl(22.627416997969522);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0] == doctest::Approx(5.5).epsilon(1e-14));
  CHECK(f.entropy_at_ppl(10.0).empty());
  CHECK_FALSE(f.max_entropy_at_ppl(10.0).has_value());

  const auto bumpy = line({{5.0, std::log(20.0)}, {5.5, std::log(15.0)}, {6.0, std::log(25.0)}});
  const auto two = bumpy.entropy_at_ppl(17.0);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == doctest::Approx(5.282462734143809).epsilon(1e-14));
  CHECK(two[1] == doctest::Approx(5.622510634873069).epsilon(1e-14));
  CHECK(*bumpy.max_entropy_at_ppl(17.0) == two[1]);
}

TEST_CASE("entropy_at_ppl: a knot hit is reported once") {
  const auto f = line({{5.0, 1.0}, {5.5, 2.0}, {6.0, 3.0}});
  const auto hits = f.entropy_at_ppl(std::exp(2.0));
  REQUIRE(hits.size() == 1);
  CHECK(hits[0] == 5.5);
}

TEST_CASE("property: entropy_at_ppl inverts ppl_at_entropy on monotone frontiers") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto f = random_monotone(rng, 2 + trial % 8);
    const double h = f.min_entropy() + u(rng) * (f.max_entropy() - f.min_entropy());
    const auto hits = f.entropy_at_ppl(f.ppl_at_entropy(h));
    REQUIRE(hits.size() == 1);
    CHECK(std::abs(hits[0] - h) <= 1e-9);
  }
}

TEST_CASE("compare: uniform shift") {
  const auto a = line({{5.0, 3.0}, {5.5, 3.2}, {6.0, 3.5}}, FrontierMode::Raw, "a");
  const auto b = line({{5.0, 3.1}, {5.5, 3.3}, {6.0, 3.6}}, FrontierMode::Raw, "b");
  const auto v = compare(a, b);
  CHECK(v.verdict == DominanceVerdict::Kind::ADominates);
  CHECK(v.min_margin == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(v.crossings.empty());
  CHECK(v.entropy_lo == 5.0);
  CHECK(v.entropy_hi == 6.0);
  REQUIRE(v.regions.size() == 1);
  CHECK(v.regions[0].winner == Winner::A);
  CHECK(std::string(to_string(v.verdict)) == "A_dominates");
}

TEST_CASE("compare: single crossing solved exactly") {
  // difference goes from -0.1 at 5.3 to +0.1 at 5.6
  const auto a = line({{5.3, 3.0}, {5.6, 3.3}}, FrontierMode::Raw, "a");
  const auto b = line({{5.3, 3.1}, {5.6, 3.2}}, FrontierMode::Raw, "b");
  const auto v = compare(a, b);
  CHECK(v.verdict == DominanceVerdict::Kind::Crossing);
  REQUIRE(v.crossings.size() == 1);
  CHECK(v.crossings[0] == doctest::Approx(5.45).epsilon(1e-12));
  REQUIRE(v.regions.size() == 2);
  CHECK(v.regions[0].winner == Winner::A);
  CHECK(v.regions[1].winner == Winner::B);
  CHECK(v.regions[0].entropy_hi == v.crossings[0]);
}

TEST_CASE("compare: overlap only, and disjoint ranges are an error") {
  const auto a = line({{5.0, 3.0}, {6.0, 4.0}}, FrontierMode::Raw, "a");
  const auto b = line({{5.5, 5.0}, {7.0, 6.0}}, FrontierMode::Raw, "b");
  const auto v = compare(a, b);
  CHECK(v.entropy_lo == 5.5);
  CHECK(v.entropy_hi == 6.0);
  CHECK(v.verdict == DominanceVerdict::Kind::ADominates);
  const auto c = line({{6.5, 3.0}, {7.0, 3.5}}, FrontierMode::Raw, "c");
  CHECK_THROWS_WITH_AS(compare(a, c), doctest::Contains("no comparable operating region"), DataError);
}

TEST_CASE("compare: a crossing between grid points is found through the knots") {
  // B dips below A only in a narrow notch no uniform grid point lands in
  const auto a = line({{0.0, 1.0}, {1.0, 1.0}}, FrontierMode::Raw, "a");
  const auto b = line({{0.0, 2.0}, {0.5031, 2.0}, {0.5035, 0.0}, {0.5039, 2.0}, {1.0, 2.0}}, FrontierMode::Raw, "b");
  const auto v = compare(a, b);
  CHECK(v.verdict == DominanceVerdict::Kind::Crossing);
  CHECK(v.crossings.size() == 2);
}

TEST_CASE("property: compare is antisymmetric and order invariant") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_monotone(rng, 2 + trial % 6);
    const auto b = random_monotone(rng, 2 + (trial / 6) % 6);
    if (std::max(a.min_entropy(), b.min_entropy()) >= std::min(a.max_entropy(), b.max_entropy())) continue;
    const auto ab = compare(a, b);
    const auto ba = compare(b, a);
    CHECK(ab.crossings.size() == ba.crossings.size());
    for (std::size_t i = 0; i < ab.crossings.size() && i < ba.crossings.size(); ++i) {
      CHECK(ab.crossings[i] == doctest::Approx(ba.crossings[i]).epsilon(1e-12));
    }
    if (ab.verdict == DominanceVerdict::Kind::ADominates) CHECK(ba.verdict == DominanceVerdict::Kind::BDominates);
    if (ab.verdict == DominanceVerdict::Kind::BDominates) CHECK(ba.verdict == DominanceVerdict::Kind::ADominates);
    if (ab.verdict == DominanceVerdict::Kind::Crossing) CHECK(ba.verdict == DominanceVerdict::Kind::Crossing);
    CHECK(ab.min_margin == ba.min_margin);
    CHECK((ab.verdict == DominanceVerdict::Kind::Crossing) == !ab.crossings.empty());

    auto pts = a.points();
    std::shuffle(pts.begin(), pts.end(), rng);
    const auto a2 = Frontier::from_points("m", 8, pts);
    const auto v2 = compare(a2, b);
    CHECK(v2.verdict == ab.verdict);
    CHECK(v2.crossings == ab.crossings);
  }
}

TEST_CASE("property: the pareto frontier never lies above the raw one") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 3 + trial % 7; ++i) pts.emplace_back(5.0 + u(rng), 2.5 + u(rng));
    const auto raw = line(pts);
    const auto par = line(pts, FrontierMode::Pareto);
    // pareto keeps the highest-entropy knot, so its range ends where raw does
    CHECK(par.max_entropy() == raw.max_entropy());
    for (std::size_t i = 0; i + 1 < par.points().size(); ++i) {
      CHECK(par.points()[i].entropy < par.points()[i + 1].entropy);
      CHECK(par.points()[i].log_ppl < par.points()[i + 1].log_ppl);
    }
    if (par.points().size() < 2) continue;
    for (int k = 0; k <= 20; ++k) {
      const double h = par.min_entropy() + (par.max_entropy() - par.min_entropy()) * k / 20.0;
      CHECK(par.log_ppl_at_entropy(h) <= raw.log_ppl_at_entropy(h) + 1e-12);
    }
  }
}

TEST_CASE("matched_ranking") {
  SUBCASE("higher entropy ranks closer") {
    const std::vector<OperatingPoint> pts{op("q1", 8, 1.0, 5.5, 3.0), op("q2", 8, 1.0, 5.3, 3.0)};
    const auto r = matched_ranking(pts);
    REQUIRE(r.size() == 2);
    CHECK(r[0].index == 0);
    CHECK(r[0].rank == 1);
    CHECK(r[1].index == 1);
    CHECK(r[1].rank == 2);
    CHECK(r[0].kl_hat < r[1].kl_hat);
  }
  SUBCASE("equal points tie") {
    const std::vector<OperatingPoint> pts{op("q1", 8, 1.0, 5.4, 3.0), op("q2", 8, 1.0, 5.4, 3.0)};
    const auto r = matched_ranking(pts);
    CHECK(r[0].rank == 1);
    CHECK(r[1].rank == 1);
  }
  SUBCASE("unmatched perplexities are rejected") {
    const std::vector<OperatingPoint> pts{op("q1", 8, 1.0, 5.4, 3.0), op("q2", 8, 1.0, 5.4, 3.01)};
    CHECK_THROWS_WITH_AS(matched_ranking(pts), doctest::Contains("interpolate"), DataError);
  }
}

TEST_CASE("property: at matched perplexity higher entropy means lower kl_hat") {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(0.0, 6.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double ce = 1.0 + u(rng);
    const auto a = op("a", 1, 1.0, u(rng), ce);
    const auto b = op("b", 1, 1.0, u(rng), ce);
    if (a.unigram_entropy == b.unigram_entropy) continue;
    const auto& hi = a.unigram_entropy > b.unigram_entropy ? a : b;
    const auto& lo = a.unigram_entropy > b.unigram_entropy ? b : a;
    CHECK(hi.kl_hat < lo.kl_hat);
  }
}

TEST_CASE("nfe_slice: labels, knot hits, and marked cells") {
  const std::vector<OperatingPoint> pts{
      op("mdlm", 8, 0.9, 5.30, 3.2), op("mdlm", 8, 1.0, 5.50, 3.5),
      op("mdlm", 16, 0.9, 5.35, 3.0), op("mdlm", 16, 1.0, 5.60, 3.3),
      op("solo", 8, 1.0, 5.40, 3.1)};
  const auto frontiers = build_frontiers(pts);
  REQUIRE(frontiers.size() == 3);

  CHECK(SliceTarget::median_entropy(5.471).label == "median entropy");
  CHECK(SliceTarget::ar_eval_ppl().label == "AR eval ppl");
  CHECK(SliceTarget::ar_eval_ppl().value == 17.0);

  const auto by_h = nfe_slice(frontiers, SliceTarget::entropy(5.50));
  CHECK(by_h.at({"mdlm", 8}).status == SliceCell::Status::Ok);
  CHECK(*by_h.at({"mdlm", 8}).value == doctest::Approx(std::exp(3.5)).epsilon(1e-15));
  CHECK(by_h.at({"mdlm", 16}).status == SliceCell::Status::Ok);
  CHECK(by_h.at({"solo", 8}).status == SliceCell::Status::Error);
  CHECK_FALSE(by_h.at({"solo", 8}).value.has_value());

  const auto far = nfe_slice(frontiers, SliceTarget::entropy(5.58));
  CHECK(far.at({"mdlm", 8}).status == SliceCell::Status::OutOfRange);
  CHECK_FALSE(far.at({"mdlm", 8}).value.has_value());

  const auto by_ppl = nfe_slice(frontiers, SliceTarget::perplexity(std::exp(3.1)));
  CHECK(by_ppl.at({"mdlm", 8}).status == SliceCell::Status::NoCrossing);
  CHECK(*by_ppl.at({"mdlm", 16}).value == doctest::Approx(5.35 + 0.25 / 3.0).epsilon(1e-12));
}

TEST_CASE("oracle: interpolated frontier stays within the measured curvature bound") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 10; ++trial) {
    const auto q = orc::random_model(orc::ModelKind::ProductCategorical, 6, 3, rng, 1.5);
    const auto p = orc::random_model(orc::ModelKind::ProductCategorical, 6, 3, rng, 1.5);
    const std::vector<double> temps{0.8, 1.0, 1.2};
    const auto sw = orc::sweep(q, p, temps);
    std::vector<FrontierPoint> knots;
    for (const auto& [t, m] : sw) knots.push_back({m.per_token_entropy, m.cross_entropy, t, 0});
    const auto f = Frontier::from_points("oracle", 1, knots);
    REQUIRE(f.points().size() == 3);

    const auto truth = orc::exact_metrics(q.with_temperature(0.9), p);

    // max |f''| of log_ppl as a function of entropy, over the bracketing segment
    std::vector<double> dense;
    for (int k = 0; k <= 200; ++k) dense.push_back(0.8 + 0.2 * k / 200.0);
    const auto curve = orc::sweep(q, p, dense);
    double max_curv = 0.0;
    for (std::size_t k = 1; k + 1 < curve.size(); ++k) {
      const double h0 = curve[k - 1].second.per_token_entropy, h1 = curve[k].second.per_token_entropy,
                   h2 = curve[k + 1].second.per_token_entropy;
      const double y0 = curve[k - 1].second.cross_entropy, y1 = curve[k].second.cross_entropy,
                   y2 = curve[k + 1].second.cross_entropy;
      const double d2 = 2.0 * ((y2 - y1) / (h2 - h1) - (y1 - y0) / (h1 - h0)) / (h2 - h0);
      max_curv = std::max(max_curv, std::abs(d2));
    }
    const double dh = f.points()[1].entropy - f.points()[0].entropy;
    const double bound = dh * dh / 8.0 * max_curv * 1.05 + 1e-12;
    const double err = std::abs(f.log_ppl_at_entropy(truth.per_token_entropy) - std::log(truth.gen_ppl));
    CHECK(err <= bound);
  }
}

TEST_CASE("oracle: pinned toy models produce a ranking reversal") {
  const auto ref = orc::ExactModel::product({{1.506, -0.927, 2.733, -1.981, -0.992, 1.403, 0.074, 3.004}});
  const auto a = orc::ExactModel::product({{1.638, -1.37, 2.469, -2.744, -1.887, 1.844, 0.48, 3.91}});
  const auto b = orc::ExactModel::product({{0.978, 0.256, 2.532, -0.879, -1.295, 0.888, 0.248, 3.726}});
  std::vector<double> temps;
  for (int k = 0; k <= 30; ++k) temps.push_back(0.5 + 1.5 * k / 30.0);
  auto to_frontier = [&](const orc::ExactModel& m, const char* name) {
    std::vector<FrontierPoint> knots;
    for (const auto& [t, x] : orc::sweep(m, ref, temps)) knots.push_back({x.per_token_entropy, x.cross_entropy, t, 0});
    return Frontier::from_points(name, 1, knots);
  };
  const auto fa = to_frontier(a, "a");
  const auto fb = to_frontier(b, "b");
  const auto v = compare(fa, fb);
  CHECK(v.verdict == DominanceVerdict::Kind::Crossing);
  CHECK(v.crossings.size() == 1);
  REQUIRE(v.regions.size() == 2);
  CHECK(v.regions.front().winner != v.regions.back().winner);
}
