#pragma once

// SPDX-License-Identifier: Apache-2.0

/**
 * @file frontier.hpp
 * @brief Entropy / log-perplexity frontiers and the queries run against them.
 *
 * A frontier is the polyline a method traces across a temperature sweep at a
 * fixed NFE, in (unigram entropy, ln GenPPL) space. Between knots it is
 * linear in log-perplexity: at fixed KL, ln GenPPL = KL + H, so log space
 * is where straight lines mean something. Queries never extrapolate past
 * the swept range.
 */

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "genfrontier/core_metrics.hpp"

namespace genfrontier {

enum class FrontierMode { Raw, Pareto };

/// Entropies closer than this are treated as the same operating point.
inline constexpr double kEntropyTieTolerance = 1e-6;

struct FrontierPoint {
  double entropy = 0.0;  ///< nats/token
  double log_ppl = 0.0;  ///< nats/token
  double temperature = 1.0;
  int n_samples = 0;  ///< 0 marks an exact (enumerated) point
};

class Frontier {
 public:
  /// All points must share (method_id, nfe).
  static Frontier build(std::span<const OperatingPoint> points, FrontierMode mode = FrontierMode::Raw);

  static Frontier from_points(std::string method_id, int nfe, std::vector<FrontierPoint> points,
                              FrontierMode mode = FrontierMode::Raw);

  const std::string& method_id() const noexcept { return method_id_; }
  int nfe() const noexcept { return nfe_; }
  FrontierMode mode() const noexcept { return mode_; }
  const std::vector<FrontierPoint>& points() const noexcept { return points_; }

  double min_entropy() const { return points_.front().entropy; }
  double max_entropy() const { return points_.back().entropy; }

  /// Interpolated ln(GenPPL) at entropy h. Throws OutOfRangeError outside
  /// [min_entropy, max_entropy] and DataError with fewer than two points.
  double log_ppl_at_entropy(double h) const;
  double ppl_at_entropy(double h) const;

  /// Every entropy where the polyline crosses ln(ppl), ascending. Empty when
  /// there is no crossing.
  std::vector<double> entropy_at_ppl(double ppl) const;

  /// The largest crossing: best diversity at the matched quality level.
  std::optional<double> max_entropy_at_ppl(double ppl) const;

 private:
  Frontier(std::string method_id, int nfe, FrontierMode mode, std::vector<FrontierPoint> points);
  void require_queryable() const;

  std::string method_id_;
  int nfe_ = 1;
  FrontierMode mode_ = FrontierMode::Raw;
  std::vector<FrontierPoint> points_;
};

enum class Winner { A, B, Tie };

struct DominanceRegion {
  double entropy_lo = 0.0;
  double entropy_hi = 0.0;
  Winner winner = Winner::Tie;
};

struct DominanceVerdict {
  enum class Kind { ADominates, BDominates, Crossing };

  double entropy_lo = 0.0;
  double entropy_hi = 0.0;
  Kind verdict = Kind::Crossing;
  std::vector<double> crossings;
  double min_margin = 0.0;  ///< nats; min |lnPPL_A - lnPPL_B| on the grid
  /// Sub-intervals of the overlap split at the crossings, each with the
  /// frontier that has lower perplexity there.
  std::vector<DominanceRegion> regions;
};

inline constexpr int kDefaultCompareGrid = 101;

/// Compares two frontiers over the overlap of their entropy ranges.
DominanceVerdict compare(const Frontier& a, const Frontier& b, int grid_size = kDefaultCompareGrid);

const char* to_string(DominanceVerdict::Kind kind);
const char* to_string(FrontierMode mode);
FrontierMode parse_frontier_mode(const std::string& text);

/// Relative tolerance for treating generative perplexities as matched.
inline constexpr double kMatchedPplTolerance = 1e-9;

struct RankedEntry {
  std::size_t index = 0;  ///< position in the input
  int rank = 0;           ///< 1 = closest to the reference; ties share a rank
  double kl_hat = 0.0;
  double unigram_entropy = 0.0;
};

/// Ranks operating points that share a generative perplexity by kl_hat
/// (equivalently, by descending entropy). Throws DataError if perplexities
/// differ by more than kMatchedPplTolerance relative.
std::vector<RankedEntry> matched_ranking(std::span<const OperatingPoint> points);

struct SliceTarget {
  enum class Kind { Entropy, Perplexity };
  Kind kind = Kind::Entropy;
  double value = 0.0;
  std::string label;

  static SliceTarget entropy(double h, std::string label = {});
  static SliceTarget perplexity(double ppl, std::string label = {});
  static SliceTarget median_entropy(double median);
  static SliceTarget ar_eval_ppl(double ppl = 17.0);
};

struct SliceCell {
  enum class Status { Ok, OutOfRange, NoCrossing, Error };
  Status status = Status::Ok;
  std::optional<double> value;  ///< perplexity for entropy targets, entropy for perplexity targets
  std::string message;
};

using FrontierKey = std::pair<std::string, int>;  // (method, nfe)

/// Evaluates every frontier at one target. Cells that cannot be answered
/// are marked, never filled in.
std::map<FrontierKey, SliceCell> nfe_slice(std::span<const Frontier> frontiers,
                                           const SliceTarget& target);

/// Groups operating points by (method, nfe) and builds one frontier each.
std::vector<Frontier> build_frontiers(std::span<const OperatingPoint> points,
                                      FrontierMode mode = FrontierMode::Raw);

}  // namespace genfrontier
