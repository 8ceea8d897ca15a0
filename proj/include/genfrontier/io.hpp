#pragma once

// SPDX-License-Identifier: Apache-2.0

/**
 * @file io.hpp
 * @brief On-disk formats shared with the scorer and the CLI.
 *
 * Samples  JSONL, one object per line:
 *          {"method": str, "temperature": num, "nfe": int, "seed": int,
 *           "tokens": [int...], "ref_nll": [num...]}
 * Corpus   JSONL, {"doc_id": str|int, "tokens": [int...]}
 * Points   CSV with header kPointsCsvHeader (9 significant digits), or a
 *          JSON array of objects with the same keys at full precision.
 * Frontier JSON {"frontiers": [{"method", "nfe", "mode", "points": [...]}]}
 * Stats    JSON summary of EntropyStats.
 * Manifest JSON describing an expected sweep.
 *
 * All writers go through write_atomic (temp file + rename).
 */

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "genfrontier/core_metrics.hpp"
#include "genfrontier/corpus_stats.hpp"
#include "genfrontier/frontier.hpp"

namespace genfrontier::io {

inline constexpr std::string_view kPointsCsvHeader =
    "method,temperature,nfe,n_samples,entropy_nats,cross_entropy_nats,gen_ppl,kl_hat_nats";

void write_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

struct ReadOptions {
  bool strict = true;
  std::optional<std::uint32_t> vocab_size;
};

struct ParseIssue {
  std::size_t line = 0;
  std::string message;
};

// ---- samples ----

ScoredSample parse_sample_line(std::string_view line, std::optional<std::uint32_t> vocab_size = std::nullopt);
std::string format_sample_line(const ScoredSample& sample);

/// Single-pass reader. Strict mode throws DataError on the first bad line
/// ("<source>:<line>: ..."); lenient mode skips it and records an issue.
class SampleReader {
 public:
  SampleReader(std::istream& in, ReadOptions options, std::string source = "<stream>");

  std::optional<ScoredSample> next();
  const std::vector<ParseIssue>& issues() const noexcept { return issues_; }

 private:
  std::istream& in_;
  ReadOptions options_;
  std::string source_;
  std::size_t line_no_ = 0;
  std::vector<ParseIssue> issues_;
};

struct SampleReadResult {
  std::vector<ScoredSample> samples;
  std::vector<ParseIssue> issues;
};

/// Throws DataError("... no samples") when nothing usable was read.
SampleReadResult read_samples(const std::filesystem::path& path, const ReadOptions& options = {});
void write_samples(const std::filesystem::path& path, std::span<const ScoredSample> samples);

// ---- corpus ----

struct CorpusDocument {
  std::string doc_id;
  std::vector<TokenId> tokens;
};

CorpusDocument parse_corpus_line(std::string_view line);

struct CorpusReadResult {
  EntropyStats stats;
  std::vector<ParseIssue> issues;
};

/// Streams a corpus file through CorpusEntropyAccumulator.
CorpusReadResult corpus_entropy_from_file(const std::filesystem::path& path, std::size_t window_len,
                                          std::size_t bins, const ReadOptions& options = {});

void write_corpus(const std::filesystem::path& path, std::span<const CorpusDocument> docs);

// ---- operating points ----

enum class PointFormat { Csv, Json };

/// .json -> Json, anything else -> Csv.
PointFormat point_format_for(const std::filesystem::path& path);

std::string format_points(std::span<const OperatingPoint> points, PointFormat format);
void emit_points(const std::filesystem::path& path, std::span<const OperatingPoint> points, PointFormat format);
std::vector<OperatingPoint> parse_points(std::string_view text, PointFormat format);
std::vector<OperatingPoint> read_points(const std::filesystem::path& path);

// ---- frontiers ----

std::string format_frontiers(std::span<const Frontier> frontiers);
std::vector<Frontier> parse_frontiers(std::string_view text);
std::vector<Frontier> read_frontiers(const std::filesystem::path& path);
void write_frontiers(const std::filesystem::path& path, std::span<const Frontier> frontiers);

// ---- corpus statistics ----

std::string format_stats(const EntropyStats& stats);
EntropyStats parse_stats(std::string_view text);
EntropyStats read_stats(const std::filesystem::path& path);

// ---- manifest ----

struct RunManifest {
  std::vector<std::string> methods;
  std::vector<std::pair<double, int>> sweep;  ///< (temperature, nfe)
  std::uint32_t vocab_size = 0;
  std::vector<std::string> sample_files;
  std::string reference_model;
  std::string created;
};

RunManifest parse_manifest(std::string_view text);
RunManifest read_manifest(const std::filesystem::path& path);
std::string format_manifest(const RunManifest& manifest);

/// Throws DataError if the sample's cell is not in the sweep, its method is
/// not listed, or a token is outside vocab_size.
void check_against_manifest(const ScoredSample& sample, const RunManifest& manifest);

}  // namespace genfrontier::io
