// SPDX-License-Identifier: Apache-2.0

#include "genfrontier/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "genfrontier/error.hpp"

namespace genfrontier {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

bool point_less(const FrontierPoint& a, const FrontierPoint& b) {
  if (a.entropy != b.entropy) return a.entropy < b.entropy;
  if (a.log_ppl != b.log_ppl) return a.log_ppl < b.log_ppl;
  if (a.temperature != b.temperature) return a.temperature < b.temperature;
  return a.n_samples < b.n_samples;
}

double lerp_at(const FrontierPoint& p0, const FrontierPoint& p1, double h) {
  return p0.log_ppl + (h - p0.entropy) / (p1.entropy - p0.entropy) * (p1.log_ppl - p0.log_ppl);
}

}  // namespace

Frontier::Frontier(std::string method_id, int nfe, FrontierMode mode, std::vector<FrontierPoint> points)
    : method_id_(std::move(method_id)), nfe_(nfe), mode_(mode), points_(std::move(points)) {}

Frontier Frontier::build(std::span<const OperatingPoint> points, FrontierMode mode) {
  if (points.empty()) throw DataError("cannot build a frontier from zero operating points");
  const auto& first = points.front();
  std::vector<FrontierPoint> knots;
  knots.reserve(points.size());
  for (const auto& p : points) {
    if (p.method_id != first.method_id || p.nfe != first.nfe) {
      throw DataError("mixed frontier keys: " + p.method_id + "/nfe=" + std::to_string(p.nfe) +
                      " vs " + first.method_id + "/nfe=" + std::to_string(first.nfe));
    }
    knots.push_back({p.unigram_entropy, p.cross_entropy, p.temperature, p.n_samples});
  }
  return from_points(first.method_id, first.nfe, std::move(knots), mode);
}

Frontier Frontier::from_points(std::string method_id, int nfe, std::vector<FrontierPoint> points,
                               FrontierMode mode) {
  if (points.empty()) throw DataError("cannot build a frontier from zero points");
  for (const auto& p : points) {
    if (!std::isfinite(p.entropy) || !std::isfinite(p.log_ppl)) {
      throw DataError("frontier point with non-finite entropy or log_ppl");
    }
  }
  std::sort(points.begin(), points.end(), point_less);

  // Collapse entropy ties: a group keeps its leading entropy and the lowest
  // log_ppl found in it (with that point's temperature and sample count).
  std::vector<FrontierPoint> merged;
  for (const auto& p : points) {
    if (!merged.empty() && p.entropy - merged.back().entropy <= kEntropyTieTolerance) {
      auto& head = merged.back();
      if (p.log_ppl < head.log_ppl) {
        head.log_ppl = p.log_ppl;
        head.temperature = p.temperature;
        head.n_samples = p.n_samples;
      }
      continue;
    }
    merged.push_back(p);
  }

  if (mode == FrontierMode::Pareto) {
    // Entropies are strictly increasing now, so a point survives iff every
    // higher-entropy point has strictly higher log_ppl.
    std::vector<FrontierPoint> kept;
    double best_right = INFINITY;
    for (auto it = merged.rbegin(); it != merged.rend(); ++it) {
      if (it->log_ppl < best_right) {
        kept.push_back(*it);
        best_right = it->log_ppl;
      }
    }
    std::reverse(kept.begin(), kept.end());
    merged = std::move(kept);
  }

  return Frontier(std::move(method_id), nfe, mode, std::move(merged));
}

void Frontier::require_queryable() const {
  if (points_.size() < 2) {
    throw DataError("frontier " + method_id_ + "/nfe=" + std::to_string(nfe_) +
                    " has fewer than two points; interpolation queries need at least two");
  }
}

double Frontier::log_ppl_at_entropy(double h) const {
  require_queryable();
  if (std::isnan(h)) throw DataError("entropy query is NaN");
  if (h < min_entropy()) {
    const auto& p = points_.front();
    throw OutOfRangeError("entropy " + fmt_double(h) + " below swept range; nearest knot " +
                              fmt_double(p.entropy) + " (ppl " + fmt_double(std::exp(p.log_ppl)) + ")",
                          h, p.entropy, std::exp(p.log_ppl));
  }
  if (h > max_entropy()) {
    const auto& p = points_.back();
    throw OutOfRangeError("entropy " + fmt_double(h) + " above swept range; nearest knot " +
                              fmt_double(p.entropy) + " (ppl " + fmt_double(std::exp(p.log_ppl)) + ")",
                          h, p.entropy, std::exp(p.log_ppl));
  }
  auto hi = std::lower_bound(points_.begin(), points_.end(), h,
                             [](const FrontierPoint& p, double v) { return p.entropy < v; });
  if (hi->entropy == h) return hi->log_ppl;
  return lerp_at(*(hi - 1), *hi, h);
}

double Frontier::ppl_at_entropy(double h) const { return std::exp(log_ppl_at_entropy(h)); }

std::vector<double> Frontier::entropy_at_ppl(double ppl) const {
  require_queryable();
  if (!(ppl > 0.0) || !std::isfinite(ppl)) throw DataError("perplexity query must be positive and finite");
  const double target = std::log(ppl);
  std::vector<double> hits;
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    const auto& p0 = points_[i];
    const auto& p1 = points_[i + 1];
    const double d0 = p0.log_ppl - target;
    const double d1 = p1.log_ppl - target;
    if (d0 == 0.0) {
      hits.push_back(p0.entropy);
    } else if ((d0 < 0.0 && d1 > 0.0) || (d0 > 0.0 && d1 < 0.0)) {
      hits.push_back(p0.entropy + (target - p0.log_ppl) * (p1.entropy - p0.entropy) / (p1.log_ppl - p0.log_ppl));
    }
  }
  if (points_.back().log_ppl == target) hits.push_back(points_.back().entropy);
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
  return hits;
}

std::optional<double> Frontier::max_entropy_at_ppl(double ppl) const {
  const auto hits = entropy_at_ppl(ppl);
  if (hits.empty()) return std::nullopt;
  return hits.back();
}

DominanceVerdict compare(const Frontier& a, const Frontier& b, int grid_size) {
  if (a.points().size() < 2 || b.points().size() < 2) {
    throw DataError("compare needs frontiers with at least two points each");
  }
  if (grid_size < 2) throw DataError("comparison grid needs at least two points");
  const double lo = std::max(a.min_entropy(), b.min_entropy());
  const double hi = std::min(a.max_entropy(), b.max_entropy());
  if (!(hi > lo)) throw DataError("no comparable operating region");

  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(grid_size) + a.points().size() + b.points().size());
  for (int k = 0; k < grid_size; ++k) {
    xs.push_back(k == grid_size - 1 ? hi : lo + (hi - lo) * k / (grid_size - 1));
  }
  for (const auto* f : {&a, &b}) {
    for (const auto& p : f->points()) {
      if (p.entropy > lo && p.entropy < hi) xs.push_back(p.entropy);
    }
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  // Every knot of either polyline is in xs, so the difference is linear
  // between neighbours and the linear solve below is exact.
  std::vector<double> diff(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    diff[k] = a.log_ppl_at_entropy(xs[k]) - b.log_ppl_at_entropy(xs[k]);
  }

  DominanceVerdict v;
  v.entropy_lo = lo;
  v.entropy_hi = hi;
  v.min_margin = INFINITY;
  bool all_a = true;
  bool all_b = true;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double d = diff[k];
    v.min_margin = std::min(v.min_margin, std::abs(d));
    all_a = all_a && d < 0.0;
    all_b = all_b && d > 0.0;
    if (d == 0.0) {
      v.crossings.push_back(xs[k]);
    } else if (k + 1 < xs.size()) {
      const double dn = diff[k + 1];
      if ((d < 0.0 && dn > 0.0) || (d > 0.0 && dn < 0.0)) {
        v.crossings.push_back(xs[k] + d * (xs[k + 1] - xs[k]) / (d - dn));
      }
    }
  }
  std::sort(v.crossings.begin(), v.crossings.end());
  v.crossings.erase(std::unique(v.crossings.begin(), v.crossings.end()), v.crossings.end());

  if (all_a) {
    v.verdict = DominanceVerdict::Kind::ADominates;
  } else if (all_b) {
    v.verdict = DominanceVerdict::Kind::BDominates;
  } else {
    v.verdict = DominanceVerdict::Kind::Crossing;
  }

  std::vector<double> cuts{lo};
  for (double c : v.crossings) {
    if (c > cuts.back() && c < hi) cuts.push_back(c);
  }
  cuts.push_back(hi);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    const double d = a.log_ppl_at_entropy(mid) - b.log_ppl_at_entropy(mid);
    const Winner w = d < 0.0 ? Winner::A : (d > 0.0 ? Winner::B : Winner::Tie);
    if (!v.regions.empty() && v.regions.back().winner == w) {
      v.regions.back().entropy_hi = cuts[i + 1];
    } else {
      v.regions.push_back({cuts[i], cuts[i + 1], w});
    }
  }
  return v;
}

const char* to_string(DominanceVerdict::Kind kind) {
  switch (kind) {
    case DominanceVerdict::Kind::ADominates: return "A_dominates";
    case DominanceVerdict::Kind::BDominates: return "B_dominates";
    case DominanceVerdict::Kind::Crossing: return "crossing";
  }
  return "?";
}

const char* to_string(FrontierMode mode) { return mode == FrontierMode::Raw ? "raw" : "pareto"; }

FrontierMode parse_frontier_mode(const std::string& text) {
  if (text == "raw") return FrontierMode::Raw;
  if (text == "pareto") return FrontierMode::Pareto;
  throw UsageError("unknown frontier mode '" + text + "' (expected raw or pareto)");
}

std::vector<RankedEntry> matched_ranking(std::span<const OperatingPoint> points) {
  if (points.empty()) throw DataError("matched_ranking needs at least one operating point");
  const double ref = points.front().gen_ppl;
  for (const auto& p : points) {
    if (std::abs(p.gen_ppl - ref) > kMatchedPplTolerance * std::max(p.gen_ppl, ref)) {
      throw DataError("generative perplexities are not matched (" + fmt_double(p.gen_ppl) + " vs " +
                      fmt_double(ref) +
                      "); interpolate each frontier to a common perplexity or entropy first");
    }
  }

  std::vector<RankedEntry> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    out.push_back({i, 0, points[i].kl_hat, points[i].unigram_entropy});
  }
  std::sort(out.begin(), out.end(), [](const RankedEntry& x, const RankedEntry& y) {
    if (x.kl_hat != y.kl_hat) return x.kl_hat < y.kl_hat;
    if (x.unigram_entropy != y.unigram_entropy) return x.unigram_entropy > y.unigram_entropy;
    return x.index < y.index;
  });

  const double tie = kMatchedPplTolerance;
  std::size_t group_start = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i > 0 && out[i].kl_hat - out[group_start].kl_hat > tie) {
      // At matched perplexity a strictly lower KL implies a higher entropy.
      if (out[group_start].unigram_entropy + 2.0 * tie < out[i].unigram_entropy) {
        throw std::logic_error("kl_hat and entropy orders disagree at matched perplexity");
      }
      group_start = i;
    }
    out[i].rank = static_cast<int>(group_start) + 1;
  }
  return out;
}

SliceTarget SliceTarget::entropy(double h, std::string label) {
  if (label.empty()) label = "entropy " + fmt_double(h);
  return {Kind::Entropy, h, std::move(label)};
}

SliceTarget SliceTarget::perplexity(double ppl, std::string label) {
  if (label.empty()) label = "ppl " + fmt_double(ppl);
  return {Kind::Perplexity, ppl, std::move(label)};
}

SliceTarget SliceTarget::median_entropy(double median) { return entropy(median, "median entropy"); }

SliceTarget SliceTarget::ar_eval_ppl(double ppl) { return perplexity(ppl, "AR eval ppl"); }

std::map<FrontierKey, SliceCell> nfe_slice(std::span<const Frontier> frontiers,
                                           const SliceTarget& target) {
  std::map<FrontierKey, SliceCell> table;
  for (const auto& f : frontiers) {
    FrontierKey key{f.method_id(), f.nfe()};
    if (table.count(key)) {
      throw DataError("duplicate frontier for " + f.method_id() + "/nfe=" + std::to_string(f.nfe()));
    }
    SliceCell cell;
    try {
      if (target.kind == SliceTarget::Kind::Entropy) {
        cell.value = f.ppl_at_entropy(target.value);
      } else {
        cell.value = f.max_entropy_at_ppl(target.value);
        if (!cell.value) {
          cell.status = SliceCell::Status::NoCrossing;
          cell.message = "frontier never reaches ppl " + fmt_double(target.value);
        }
      }
    } catch (const OutOfRangeError& e) {
      cell.status = SliceCell::Status::OutOfRange;
      cell.message = e.what();
    } catch (const DataError& e) {
      cell.status = SliceCell::Status::Error;
      cell.message = e.what();
    }
    table.emplace(std::move(key), std::move(cell));
  }
  return table;
}

std::vector<Frontier> build_frontiers(std::span<const OperatingPoint> points, FrontierMode mode) {
  std::map<FrontierKey, std::vector<OperatingPoint>> groups;
  for (const auto& p : points) groups[{p.method_id, p.nfe}].push_back(p);
  std::vector<Frontier> out;
  out.reserve(groups.size());
  for (const auto& [key, group] : groups) out.push_back(Frontier::build(group, mode));
  return out;
}

}  // namespace genfrontier
