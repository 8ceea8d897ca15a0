#pragma once

// SPDX-License-Identifier: Apache-2.0

#include <optional>
#include <span>
#include <string>

#include "genfrontier/corpus_stats.hpp"
#include "genfrontier/frontier.hpp"

namespace genfrontier {

struct ReportConfig {
  /// Matched-perplexity target; the evaluation perplexity of an AR model
  /// on the same corpus is the natural choice.
  std::optional<double> ppl_target = 17.0;
  std::string ppl_label = "AR eval ppl";
  /// Matched-entropy target; defaults to the bands' median.
  std::optional<double> entropy_target;
  std::string entropy_label;
  int grid_size = kDefaultCompareGrid;
};

/// Plain-text comparison report. Byte-for-byte deterministic for identical
/// inputs.
std::string render_report(std::span<const Frontier> frontiers, const EntropyBands& bands,
                          const ReportConfig& config = {});

}  // namespace genfrontier
