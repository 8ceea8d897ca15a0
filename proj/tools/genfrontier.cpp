// SPDX-License-Identifier: Apache-2.0

// genfrontier: command-line front end.
//
// Exit codes: 0 success, 1 usage error, 2 data error (including a failed
// selfcheck), 3 out-of-range query in --strict mode.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "genfrontier/core_metrics.hpp"
#include "genfrontier/corpus_stats.hpp"
#include "genfrontier/error.hpp"
#include "genfrontier/frontier.hpp"
#include "genfrontier/io.hpp"
#include "genfrontier/oracle.hpp"
#include "genfrontier/report.hpp"

namespace gf = genfrontier;
namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitOutOfRange = 3;

struct StrictOutOfRange : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    gf::io::write_atomic(out_path, text);
  }
}

gf::EntropyBands load_bands(const std::string& stats_path) {
  if (stats_path.empty()) return gf::openwebtext_reference_bands();
  auto bands = gf::io::read_stats(stats_path).bands();
  bands.source += " from " + stats_path;
  return bands;
}

// ---- metrics ----

struct MetricsArgs {
  std::vector<std::string> samples;
  std::string manifest;
  std::optional<std::uint32_t> vocab_size;
  bool lenient = false;
  bool token_weighted = false;
  bool pooled = false;
  bool serial = false;
  std::string out;
  std::string format;
};

int run_metrics(const MetricsArgs& a) {
  std::optional<gf::io::RunManifest> manifest;
  std::vector<std::string> files = a.samples;
  if (!a.manifest.empty()) {
    manifest = gf::io::read_manifest(a.manifest);
    if (files.empty()) {
      const auto base = fs::path(a.manifest).parent_path();
      for (const auto& f : manifest->sample_files) files.push_back(fs::path(f).is_absolute() ? f : (base / f).string());
    }
  }
  if (files.empty()) throw gf::UsageError("metrics needs --samples or a manifest listing sample_files");

  gf::io::ReadOptions read;
  read.strict = !a.lenient;
  read.vocab_size = a.vocab_size ? a.vocab_size : (manifest ? std::optional(manifest->vocab_size) : std::nullopt);

  std::vector<gf::ScoredSample> samples;
  for (const auto& f : files) {
    auto result = gf::io::read_samples(f, read);
    for (const auto& issue : result.issues) {
      std::fprintf(stderr, "warning: %s:%zu skipped: %s\n", f.c_str(), issue.line, issue.message.c_str());
    }
    if (!result.issues.empty()) std::fprintf(stderr, "warning: %s: %zu malformed lines skipped\n", f.c_str(), result.issues.size());
    for (auto& s : result.samples) {
      if (manifest) gf::io::check_against_manifest(s, *manifest);
      samples.push_back(std::move(s));
    }
  }

  gf::AggregateOptions opts;
  opts.weighting = a.token_weighted ? gf::Weighting::Token : gf::Weighting::Macro;
  opts.entropy_scope = a.pooled ? gf::EntropyScope::Pooled : gf::EntropyScope::PerSequence;
  opts.vocab_size = read.vocab_size;
  const auto points = gf::aggregate_cells(samples, opts, a.serial ? gf::Execution::Serial : gf::Execution::Parallel);
  for (const auto& p : points) {
    if (p.negative_kl_hat()) {
      std::fprintf(stderr, "warning: %s T=%g nfe=%d has negative kl_hat %.6g (unigram entropy exceeds cross entropy)\n",
                   p.method_id.c_str(), p.temperature, p.nfe, p.kl_hat);
    }
  }
  gf::io::PointFormat format = gf::io::point_format_for(a.out);
  if (a.format == "csv") format = gf::io::PointFormat::Csv;
  if (a.format == "json") format = gf::io::PointFormat::Json;
  gf::io::emit_points(a.out, points, format);
  std::fprintf(stderr, "%zu samples -> %zu operating points\n", samples.size(), points.size());
  return 0;
}

// ---- query ----

struct QueryArgs {
  std::string frontiers;
  std::optional<double> entropy;
  std::optional<double> ppl;
  bool median_entropy = false;
  bool ar_ppl = false;
  double ar_ppl_value = 17.0;
  std::string stats;
  std::string method;
  std::optional<int> nfe;
  bool strict = false;
  std::string out;
};

int run_query(const QueryArgs& a) {
  const int targets = (a.entropy ? 1 : 0) + (a.ppl ? 1 : 0) + (a.median_entropy ? 1 : 0) + (a.ar_ppl ? 1 : 0);
  if (targets != 1) throw gf::UsageError("query needs exactly one of --entropy, --ppl, --median-entropy, --ar-ppl");
  gf::SliceTarget target;
  if (a.entropy) target = gf::SliceTarget::entropy(*a.entropy);
  if (a.ppl) target = gf::SliceTarget::perplexity(*a.ppl);
  if (a.median_entropy) target = gf::SliceTarget::median_entropy(load_bands(a.stats).median);
  if (a.ar_ppl) target = gf::SliceTarget::ar_eval_ppl(a.ar_ppl_value);

  std::vector<gf::Frontier> selected;
  for (auto& f : gf::io::read_frontiers(a.frontiers)) {
    if (!a.method.empty() && f.method_id() != a.method) continue;
    if (a.nfe && f.nfe() != *a.nfe) continue;
    selected.push_back(std::move(f));
  }
  if (selected.empty()) throw gf::DataError("no frontier matches the --method/--nfe filter");

  const auto table = gf::nfe_slice(selected, target);
  const bool entropy_target = target.kind == gf::SliceTarget::Kind::Entropy;
  std::string text = "method,nfe," + std::string(entropy_target ? "gen_ppl" : "entropy_nats") + ",status\n";
  text = "# target: " + target.label + (entropy_target ? " (entropy nats)" : " (perplexity; max-entropy crossing)") + "\n" + text;
  bool missing = false;
  for (const auto& [key, cell] : table) {
    char value[64] = "";
    if (cell.value) std::snprintf(value, sizeof value, "%.9g", *cell.value);
    const char* status = "ok";
    if (cell.status == gf::SliceCell::Status::OutOfRange) status = "out-of-range";
    if (cell.status == gf::SliceCell::Status::NoCrossing) status = "no-crossing";
    if (cell.status == gf::SliceCell::Status::Error) status = "error";
    if (cell.status != gf::SliceCell::Status::Ok) {
      missing = true;
      std::fprintf(stderr, "%s/nfe=%d: %s\n", key.first.c_str(), key.second, cell.message.c_str());
    }
    text += key.first + "," + std::to_string(key.second) + "," + value + "," + status + "\n";
  }
  emit(text, a.out);
  if (missing && a.strict) throw StrictOutOfRange("one or more cells could not be answered");
  return 0;
}

// ---- compare ----

struct CompareArgs {
  std::string frontiers;
  std::string frontiers_b;
  std::string a;
  std::string b;
  std::optional<int> nfe;
  int grid = gf::kDefaultCompareGrid;
};

const gf::Frontier& pick(const std::vector<gf::Frontier>& all, const std::string& method, std::optional<int> nfe) {
  const gf::Frontier* found = nullptr;
  for (const auto& f : all) {
    if (f.method_id() != method || (nfe && f.nfe() != *nfe)) continue;
    if (found) throw gf::UsageError("several frontiers match '" + method + "'; pass --nfe");
    found = &f;
  }
  if (!found) throw gf::DataError("no frontier for method '" + method + "'");
  return *found;
}

int run_compare(const CompareArgs& args) {
  const auto all_a = gf::io::read_frontiers(args.frontiers);
  const auto all_b = args.frontiers_b.empty() ? all_a : gf::io::read_frontiers(args.frontiers_b);
  const auto& fa = pick(all_a, args.a, args.nfe);
  const auto& fb = pick(all_b, args.b, args.nfe);
  const auto v = gf::compare(fa, fb, args.grid);
  std::printf("A = %s (nfe %d), B = %s (nfe %d)\n", fa.method_id().c_str(), fa.nfe(), fb.method_id().c_str(), fb.nfe());
  std::printf("interval: [%.9g, %.9g] nats\n", v.entropy_lo, v.entropy_hi);
  std::printf("verdict: %s\n", gf::to_string(v.verdict));
  std::printf("min_margin: %.9g nats\n", v.min_margin);
  std::printf("crossings:");
  for (double c : v.crossings) std::printf(" %.9g", c);
  std::printf("\n");
  for (const auto& r : v.regions) {
    const char* w = r.winner == gf::Winner::A ? "A" : (r.winner == gf::Winner::B ? "B" : "tie");
    std::printf("region [%.9g, %.9g]: %s lower\n", r.entropy_lo, r.entropy_hi, w);
  }
  return 0;
}

// ---- oracle ----

int run_selfcheck(int trials, std::uint64_t seed) {
  const auto results = gf::oracle::run_selfcheck({trials, seed});
  bool ok = true;
  for (const auto& r : results) {
    const char* tag = r.informational ? "INFO" : (r.passed ? "PASS" : "FAIL");
    std::printf("[%s] %s: %s\n", tag, r.name.c_str(), r.detail.c_str());
    if (!r.informational && !r.passed) ok = false;
  }
  std::printf("%s\n", ok ? "selfcheck passed" : "selfcheck FAILED");
  return ok ? 0 : kExitData;
}

int run_demo(const std::string& out, int n, std::uint64_t seed) {
  // Two toy "methods" scored against one reference, swept over temperature.
  namespace orc = gf::oracle;
  // Six i.i.d. positions over eight tokens; the two methods' frontiers cross
  // near 0.59 nats of unigram entropy.
  auto iid = [](orc::LogitRow row) { return orc::ExactModel::product(orc::LogitTable(6, row)); };
  const auto reference = iid({1.506, -0.927, 2.733, -1.981, -0.992, 1.403, 0.074, 3.004});
  const auto method_a = iid({1.638, -1.37, 2.469, -2.744, -1.887, 1.844, 0.48, 3.91});
  const auto method_b = iid({0.978, 0.256, 2.532, -0.879, -1.295, 0.888, 0.248, 3.726});
  std::vector<gf::ScoredSample> samples;
  std::uint64_t s = seed;
  for (double t : {0.5, 0.7, 0.9, 1.1, 1.3, 1.6, 2.0}) {
    for (const auto& [name, model] : {std::pair{"toy-a", &method_a}, std::pair{"toy-b", &method_b}}) {
      auto batch = orc::sample(model->with_temperature(t), reference, n, s++, name, 1);
      samples.insert(samples.end(), batch.begin(), batch.end());
    }
  }
  gf::io::write_samples(out, samples);
  std::fprintf(stderr, "wrote %zu samples to %s\n", samples.size(), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"genfrontier: entropy / generative-perplexity frontiers for generated text"};
  app.set_config("--config", "", "key=value config file; command-line flags win");
  app.require_subcommand(1);

  MetricsArgs m;
  auto* metrics = app.add_subcommand("metrics", "aggregate scored samples into operating points");
  metrics->add_option("--samples", m.samples, "sample JSONL files");
  metrics->add_option("--manifest", m.manifest, "run manifest (JSON)");
  metrics->add_option("--vocab-size", m.vocab_size, "reject tokens >= this");
  metrics->add_flag("--lenient", m.lenient, "skip malformed lines instead of failing");
  metrics->add_flag("--token-weighted", m.token_weighted, "weight samples by token count instead of equally");
  metrics->add_flag("--pooled-entropy", m.pooled, "pool token counts over the cell before taking entropy");
  metrics->add_flag("--serial", m.serial, "disable parallel cell aggregation");
  metrics->add_option("--out", m.out, "output points file (.csv or .json)")->required();
  metrics->add_option("--format", m.format, "csv or json (default: from extension)")->check(CLI::IsMember({"csv", "json"}));

  std::string fr_points, fr_out, fr_mode = "raw";
  auto* frontier = app.add_subcommand("frontier", "build per-(method, nfe) frontiers from operating points");
  frontier->add_option("--points", fr_points, "points file (.csv or .json)")->required();
  frontier->add_option("--mode", fr_mode, "raw or pareto")->check(CLI::IsMember({"raw", "pareto"}));
  frontier->add_option("--out", fr_out, "output frontier JSON")->required();

  QueryArgs q;
  auto* query = app.add_subcommand("query", "matched-entropy / matched-perplexity lookups across frontiers");
  query->add_option("--frontiers", q.frontiers, "frontier JSON")->required();
  query->add_option("--entropy", q.entropy, "entropy target (nats)");
  query->add_option("--ppl", q.ppl, "perplexity target");
  query->add_flag("--median-entropy", q.median_entropy, "target the corpus median entropy");
  query->add_flag("--ar-ppl", q.ar_ppl, "target the AR evaluation perplexity");
  query->add_option("--ar-ppl-value", q.ar_ppl_value, "AR evaluation perplexity (default 17)");
  query->add_option("--stats", q.stats, "corpus stats JSON (default: published OpenWebText bands)");
  query->add_option("--method", q.method, "only this method");
  query->add_option("--nfe", q.nfe, "only this NFE");
  query->add_flag("--strict", q.strict, "exit 3 if any cell is out of range");
  query->add_option("--out", q.out, "write CSV here instead of stdout");

  CompareArgs c;
  auto* cmp = app.add_subcommand("compare", "dominance / crossing analysis of two frontiers");
  cmp->add_option("--frontiers", c.frontiers, "frontier JSON")->required();
  cmp->add_option("--frontiers-b", c.frontiers_b, "second frontier JSON for B (e.g. another checkpoint)");
  cmp->add_option("--a", c.a, "method A")->required();
  cmp->add_option("--b", c.b, "method B")->required();
  cmp->add_option("--nfe", c.nfe, "NFE to compare at");
  cmp->add_option("--grid", c.grid, "uniform grid size")->check(CLI::Range(2, 1000000));

  std::string ce_corpus, ce_out;
  std::size_t ce_window = gf::kDefaultWindowLen, ce_bins = gf::kDefaultHistogramBins;
  bool ce_lenient = false;
  std::optional<std::uint32_t> ce_vocab;
  auto* corpus = app.add_subcommand("corpus-entropy", "per-window unigram entropy distribution of a corpus");
  corpus->add_option("--corpus", ce_corpus, "corpus JSONL {doc_id, tokens}")->required();
  corpus->add_option("--window-len", ce_window, "tokens per window")->check(CLI::PositiveNumber);
  corpus->add_option("--bins", ce_bins, "histogram bins")->check(CLI::PositiveNumber);
  corpus->add_option("--vocab-size", ce_vocab, "reject tokens >= this");
  corpus->add_flag("--lenient", ce_lenient, "skip malformed lines");
  corpus->add_option("--out", ce_out, "stats JSON (default stdout)");

  auto* oracle = app.add_subcommand("oracle", "exact toy-model tools");
  oracle->require_subcommand(1);
  int sc_trials = 200;
  std::uint64_t sc_seed = 20240601;
  auto* selfcheck = oracle->add_subcommand("selfcheck", "verify the entropy / perplexity / KL identities exactly");
  selfcheck->add_option("--trials", sc_trials, "random models per check")->check(CLI::PositiveNumber);
  selfcheck->add_option("--seed", sc_seed, "RNG seed");
  std::string demo_out;
  int demo_n = 200;
  std::uint64_t demo_seed = 7;
  auto* demo = oracle->add_subcommand("demo", "write a scored-sample file from two toy models swept over temperature");
  demo->add_option("--out", demo_out, "sample JSONL")->required();
  demo->add_option("-n,--samples-per-cell", demo_n, "samples per cell")->check(CLI::PositiveNumber);
  demo->add_option("--seed", demo_seed, "RNG seed");

  std::string rp_frontiers, rp_stats, rp_out;
  gf::ReportConfig rp;
  double rp_ppl = 17.0;
  std::optional<double> rp_entropy;
  bool rp_no_ppl = false;
  auto* report = app.add_subcommand("report", "human-readable comparison report");
  report->add_option("--frontiers", rp_frontiers, "frontier JSON")->required();
  report->add_option("--stats", rp_stats, "corpus stats JSON (default: published OpenWebText bands)");
  report->add_option("--ppl-target", rp_ppl, "matched-perplexity target (default 17, AR eval ppl)");
  report->add_flag("--no-ppl-target", rp_no_ppl, "skip the matched-perplexity section");
  report->add_option("--entropy-target", rp_entropy, "matched-entropy target (default: median)");
  report->add_option("--grid", rp.grid_size, "compare grid size")->check(CLI::Range(2, 1000000));
  report->add_option("--out", rp_out, "report file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*metrics) return run_metrics(m);
    if (*frontier) {
      const auto points = gf::io::read_points(fr_points);
      const auto frontiers = gf::build_frontiers(points, gf::parse_frontier_mode(fr_mode));
      gf::io::write_frontiers(fr_out, frontiers);
      std::fprintf(stderr, "%zu points -> %zu frontiers\n", points.size(), frontiers.size());
      return 0;
    }
    if (*query) return run_query(q);
    if (*cmp) return run_compare(c);
    if (*corpus) {
      gf::io::ReadOptions read;
      read.strict = !ce_lenient;
      read.vocab_size = ce_vocab;
      const auto result = gf::io::corpus_entropy_from_file(ce_corpus, ce_window, ce_bins, read);
      for (const auto& issue : result.issues) {
        std::fprintf(stderr, "warning: %s:%zu skipped: %s\n", ce_corpus.c_str(), issue.line, issue.message.c_str());
      }
      const auto& s = result.stats;
      std::fprintf(stderr, "%zu windows from %zu documents (%zu skipped as shorter than %zu tokens)\n", s.n_windows,
                   s.n_documents, s.n_skipped_documents, s.window_len);
      emit(gf::io::format_stats(s), ce_out);
      return 0;
    }
    if (*selfcheck) return run_selfcheck(sc_trials, sc_seed);
    if (*demo) return run_demo(demo_out, demo_n, demo_seed);
    if (*report) {
      const auto frontiers = gf::io::read_frontiers(rp_frontiers);
      rp.ppl_target = rp_no_ppl ? std::nullopt : std::optional(rp_ppl);
      rp.entropy_target = rp_entropy;
      emit(gf::render_report(frontiers, load_bands(rp_stats), rp), rp_out);
      return 0;
    }
  } catch (const StrictOutOfRange& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitOutOfRange;
  } catch (const gf::UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const gf::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
