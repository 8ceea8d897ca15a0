// SPDX-License-Identifier: Apache-2.0

#include "genfrontier/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>

#include "genfrontier/error.hpp"

namespace genfrontier {

namespace {

std::string printf_string(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

const char* winner_name(Winner w, const Frontier& a, const Frontier& b) {
  switch (w) {
    case Winner::A: return a.method_id().c_str();
    case Winner::B: return b.method_id().c_str();
    case Winner::Tie: return "(tie)";
  }
  return "?";
}

void dominance_section(std::string& out, std::span<const Frontier> frontiers, int grid_size) {
  out += "## dominance (lower perplexity at matched entropy)\n";
  std::map<int, std::vector<const Frontier*>> by_nfe;
  for (const auto& f : frontiers) by_nfe[f.nfe()].push_back(&f);
  bool any = false;
  for (auto& [nfe, group] : by_nfe) {
    std::sort(group.begin(), group.end(),
              [](const Frontier* x, const Frontier* y) { return x->method_id() < y->method_id(); });
    for (std::size_t i = 0; i < group.size(); ++i) {
      for (std::size_t j = i + 1; j < group.size(); ++j) {
        any = true;
        const Frontier& a = *group[i];
        const Frontier& b = *group[j];
        out += printf_string("nfe %d: %s vs %s\n", nfe, a.method_id().c_str(), b.method_id().c_str());
        try {
          const auto v = compare(a, b, grid_size);
          out += printf_string("  interval [%.6f, %.6f] nats\n", v.entropy_lo, v.entropy_hi);
          if (v.verdict == DominanceVerdict::Kind::Crossing) {
            out += "  verdict: crossing at";
            for (double c : v.crossings) out += printf_string(" %.6f", c);
            out += "\n";
            for (const auto& r : v.regions) {
              out += printf_string("    [%.6f, %.6f] %s lower\n", r.entropy_lo, r.entropy_hi, winner_name(r.winner, a, b));
            }
          } else {
            const auto& w = v.verdict == DominanceVerdict::Kind::ADominates ? a : b;
            out += printf_string("  verdict: %s dominates over the whole interval, min margin %.6f nats\n",
                                 w.method_id().c_str(), v.min_margin);
          }
        } catch (const DataError& e) {
          out += printf_string("  not comparable: %s\n", e.what());
        }
      }
    }
  }
  if (!any) out += "(no method pairs share an NFE)\n";
  out += "\n";
}

void slice_section(std::string& out, std::span<const Frontier> frontiers, const SliceTarget& target,
                   const EntropyBands& bands) {
  const auto table = nfe_slice(frontiers, target);
  if (target.kind == SliceTarget::Kind::Entropy) {
    out += printf_string("## matched entropy: %s (h = %.6g nats)\n", target.label.c_str(), target.value);
    out += printf_string("%-20s %6s  %s\n", "method", "nfe", "gen_ppl");
  } else {
    out += printf_string("## matched perplexity: %s (ppl = %.6g), max-entropy crossing\n", target.label.c_str(),
                         target.value);
    out += printf_string("%-20s %6s  %-14s %s\n", "method", "nfe", "entropy_nats", "band");
  }
  for (const auto& [key, cell] : table) {
    std::string value;
    switch (cell.status) {
      case SliceCell::Status::Ok:
        value = target.kind == SliceTarget::Kind::Entropy
                    ? printf_string("%.6f", *cell.value)
                    : printf_string("%-14.6f %s", *cell.value, to_string(band_check(*cell.value, bands)));
        break;
      case SliceCell::Status::OutOfRange: value = "out-of-range: " + cell.message; break;
      case SliceCell::Status::NoCrossing: value = "no-crossing: " + cell.message; break;
      case SliceCell::Status::Error: value = "unavailable: " + cell.message; break;
    }
    out += printf_string("%-20s %6d  ", key.first.c_str(), key.second) + value + "\n";
  }
  out += "\n";
}

}  // namespace

std::string render_report(std::span<const Frontier> frontiers, const EntropyBands& bands,
                          const ReportConfig& config) {
  std::string out = "# generative frontier report\n\n";
  out += "reference bands: " + bands.source + "\n";
  out += printf_string("  mean %.6f  median %.6f  IQR [%.6f, %.6f]  +-1 sigma [%.6f, %.6f] (nats)\n\n", bands.mean,
                       bands.median, bands.iqr_band.first, bands.iqr_band.second, bands.sigma_band.first,
                       bands.sigma_band.second);

  std::vector<Frontier> sorted(frontiers.begin(), frontiers.end());
  std::sort(sorted.begin(), sorted.end(), [](const Frontier& a, const Frontier& b) {
    return std::pair(a.method_id(), a.nfe()) < std::pair(b.method_id(), b.nfe());
  });

  dominance_section(out, sorted, config.grid_size);

  const SliceTarget entropy_target =
      config.entropy_target ? SliceTarget::entropy(*config.entropy_target, config.entropy_label)
                            : SliceTarget::median_entropy(bands.median);
  slice_section(out, sorted, entropy_target, bands);
  if (config.ppl_target) {
    slice_section(out, sorted, SliceTarget::perplexity(*config.ppl_target, config.ppl_label), bands);
  }

  out += "## operating points\n";
  out += printf_string("%-20s %6s %12s %14s %14s  %s\n", "method", "nfe", "temperature", "entropy_nats", "gen_ppl",
                       "band");
  for (const auto& f : sorted) {
    for (const auto& p : f.points()) {
      out += printf_string("%-20s %6d %12.6g %14.6f %14.6f  %s\n", f.method_id().c_str(), f.nfe(), p.temperature,
                           p.entropy, std::exp(p.log_ppl), to_string(band_check(p.entropy, bands)));
    }
  }
  return out;
}

}  // namespace genfrontier
