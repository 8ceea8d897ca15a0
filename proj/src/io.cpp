// SPDX-License-Identifier: Apache-2.0

#include "genfrontier/io.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "genfrontier/error.hpp"
#include "json.hpp"

namespace genfrontier::io {

using json = nlohmann::ordered_json;

namespace {

std::string sig9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw DataError(what + ": invalid JSON (" + e.what() + ")");
  }
}

template <typename T>
T require(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw DataError(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw DataError(std::string("field '") + key + "' has the wrong type");
  }
}

double require_number(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw DataError(std::string("missing field '") + key + "'");
  if (!it->is_number()) throw DataError(std::string("field '") + key + "' must be a number");
  return it->get<double>();
}

std::int64_t require_integer(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw DataError(std::string("missing field '") + key + "'");
  if (!it->is_number_integer()) throw DataError(std::string("field '") + key + "' must be an integer");
  return it->get<std::int64_t>();
}

std::vector<TokenId> require_tokens(const json& obj) {
  const auto it = obj.find("tokens");
  if (it == obj.end()) throw DataError("missing field 'tokens'");
  if (!it->is_array()) throw DataError("field 'tokens' must be an array");
  std::vector<TokenId> tokens;
  tokens.reserve(it->size());
  for (std::size_t i = 0; i < it->size(); ++i) {
    const auto& v = (*it)[i];
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0 || v.get<std::int64_t>() > 0xFFFFFFFFLL) {
      throw DataError("tokens[" + std::to_string(i) + "] is not a non-negative 32-bit integer");
    }
    tokens.push_back(static_cast<TokenId>(v.get<std::int64_t>()));
  }
  return tokens;
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double to_double(const std::string& s, const char* column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(std::string("column '") + column + "': not a number: '" + s + "'");
  }
}

int to_int(const std::string& s, const char* column) {
  const double v = to_double(s, column);
  if (v != std::floor(v)) throw DataError(std::string("column '") + column + "': not an integer");
  return static_cast<int>(v);
}

OperatingPoint point_from_fields(const std::string& method, double temperature, int nfe, int n_samples,
                                 double entropy, double cross_entropy) {
  if (!(temperature > 0.0)) throw DataError("operating point temperature must be positive");
  if (nfe < 1) throw DataError("operating point nfe must be >= 1");
  if (n_samples < 0) throw DataError("operating point n_samples must be non-negative");
  return make_operating_point({method, temperature, nfe}, n_samples, entropy, cross_entropy);
}

json frontier_to_json(const Frontier& f) {
  json pts = json::array();
  for (const auto& p : f.points()) {
    pts.push_back({{"entropy_nats", p.entropy},
                   {"log_ppl_nats", p.log_ppl},
                   {"temperature", p.temperature},
                   {"n_samples", p.n_samples}});
  }
  return {{"method", f.method_id()}, {"nfe", f.nfe()}, {"mode", to_string(f.mode())}, {"points", pts}};
}

}  // namespace

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("unwritable path: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw DataError("write failed: " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("unwritable path: " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- samples ----

ScoredSample parse_sample_line(std::string_view line, std::optional<std::uint32_t> vocab_size) {
  const json obj = parse_json(line, "sample record");
  if (!obj.is_object()) throw DataError("sample record must be a JSON object");
  ScoredSample s;
  s.method_id = require<std::string>(obj, "method");
  s.temperature = require_number(obj, "temperature");
  const auto nfe = require_integer(obj, "nfe");
  if (nfe < 1 || nfe > 1'000'000'000) throw DataError("field 'nfe' must be a positive integer");
  s.nfe = static_cast<int>(nfe);
  s.seed = require_integer(obj, "seed");
  s.tokens = require_tokens(obj);
  const auto it = obj.find("ref_nll");
  if (it == obj.end()) throw DataError("missing field 'ref_nll'");
  if (!it->is_array()) throw DataError("field 'ref_nll' must be an array");
  for (std::size_t i = 0; i < it->size(); ++i) {
    if (!(*it)[i].is_number()) throw DataError("ref_nll[" + std::to_string(i) + "] is not a number");
    s.ref_nll.push_back((*it)[i].get<double>());
  }
  validate(s, vocab_size);
  return s;
}

std::string format_sample_line(const ScoredSample& s) {
  json obj = {{"method", s.method_id}, {"temperature", s.temperature}, {"nfe", s.nfe},
              {"seed", s.seed},        {"tokens", s.tokens},           {"ref_nll", s.ref_nll}};
  return obj.dump();
}

SampleReader::SampleReader(std::istream& in, ReadOptions options, std::string source)
    : in_(in), options_(options), source_(std::move(source)) {}

std::optional<ScoredSample> SampleReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (blank(line)) continue;
    try {
      return parse_sample_line(line, options_.vocab_size);
    } catch (const DataError& e) {
      if (options_.strict) throw DataError(source_ + ":" + std::to_string(line_no_) + ": " + e.what());
      issues_.push_back({line_no_, e.what()});
    }
  }
  return std::nullopt;
}

SampleReadResult read_samples(const std::filesystem::path& path, const ReadOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  SampleReader reader(in, options, path.string());
  SampleReadResult result;
  while (auto s = reader.next()) result.samples.push_back(std::move(*s));
  result.issues = reader.issues();
  if (result.samples.empty()) throw DataError(path.string() + ": no samples");
  return result;
}

void write_samples(const std::filesystem::path& path, std::span<const ScoredSample> samples) {
  std::string out;
  for (const auto& s : samples) out += format_sample_line(s) + "\n";
  write_atomic(path, out);
}

// ---- corpus ----

CorpusDocument parse_corpus_line(std::string_view line) {
  const json obj = parse_json(line, "corpus record");
  if (!obj.is_object()) throw DataError("corpus record must be a JSON object");
  CorpusDocument doc;
  const auto id = obj.find("doc_id");
  if (id == obj.end()) throw DataError("missing field 'doc_id'");
  doc.doc_id = id->is_string() ? id->get<std::string>() : id->dump();
  doc.tokens = require_tokens(obj);
  return doc;
}

CorpusReadResult corpus_entropy_from_file(const std::filesystem::path& path, std::size_t window_len,
                                          std::size_t bins, const ReadOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  CorpusEntropyAccumulator acc(window_len);
  CorpusReadResult result;
  std::string line;
  std::size_t line_no = 0;
  std::size_t docs = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    try {
      auto doc = parse_corpus_line(line);
      if (options.vocab_size) {
        for (TokenId t : doc.tokens) {
          if (t >= *options.vocab_size) throw DataError("token " + std::to_string(t) + " outside vocab_size");
        }
      }
      acc.add_document(doc.tokens);
      ++docs;
    } catch (const DataError& e) {
      if (options.strict) throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      result.issues.push_back({line_no, e.what()});
    }
  }
  if (docs == 0) throw DataError(path.string() + ": empty corpus");
  result.stats = acc.finish(bins);
  return result;
}

void write_corpus(const std::filesystem::path& path, std::span<const CorpusDocument> docs) {
  std::string out;
  for (const auto& d : docs) out += json({{"doc_id", d.doc_id}, {"tokens", d.tokens}}).dump() + "\n";
  write_atomic(path, out);
}

// ---- operating points ----

PointFormat point_format_for(const std::filesystem::path& path) {
  return path.extension() == ".json" ? PointFormat::Json : PointFormat::Csv;
}

std::string format_points(std::span<const OperatingPoint> points, PointFormat format) {
  std::vector<OperatingPoint> sorted(points.begin(), points.end());
  std::stable_sort(sorted.begin(), sorted.end(), point_order);
  if (format == PointFormat::Csv) {
    std::string out(kPointsCsvHeader);
    out += "\n";
    for (const auto& p : sorted) {
      out += csv_field(p.method_id) + "," + sig9(p.temperature) + "," + std::to_string(p.nfe) + "," +
             std::to_string(p.n_samples) + "," + sig9(p.unigram_entropy) + "," + sig9(p.cross_entropy) + "," +
             sig9(p.gen_ppl) + "," + sig9(p.kl_hat) + "\n";
    }
    return out;
  }
  json arr = json::array();
  for (const auto& p : sorted) {
    arr.push_back({{"method", p.method_id},
                   {"temperature", p.temperature},
                   {"nfe", p.nfe},
                   {"n_samples", p.n_samples},
                   {"entropy_nats", p.unigram_entropy},
                   {"cross_entropy_nats", p.cross_entropy},
                   {"gen_ppl", p.gen_ppl},
                   {"kl_hat_nats", p.kl_hat}});
  }
  return arr.dump(2) + "\n";
}

void emit_points(const std::filesystem::path& path, std::span<const OperatingPoint> points, PointFormat format) {
  write_atomic(path, format_points(points, format));
}

std::vector<OperatingPoint> parse_points(std::string_view text, PointFormat format) {
  std::vector<OperatingPoint> out;
  if (format == PointFormat::Json) {
    const json arr = parse_json(text, "points");
    if (!arr.is_array()) throw DataError("points JSON must be an array");
    for (const auto& o : arr) {
      const auto nfe = require_integer(o, "nfe");
      const auto n = require_integer(o, "n_samples");
      out.push_back(point_from_fields(require<std::string>(o, "method"), require_number(o, "temperature"),
                                      static_cast<int>(nfe), static_cast<int>(n), require_number(o, "entropy_nats"),
                                      require_number(o, "cross_entropy_nats")));
    }
    return out;
  }
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw DataError("points CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kPointsCsvHeader) throw DataError("points CSV header mismatch: '" + line + "'");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto f = split_csv(line);
    if (f.size() != 8) throw DataError("points CSV line " + std::to_string(line_no) + ": expected 8 fields");
    try {
      out.push_back(point_from_fields(f[0], to_double(f[1], "temperature"), to_int(f[2], "nfe"),
                                      to_int(f[3], "n_samples"), to_double(f[4], "entropy_nats"),
                                      to_double(f[5], "cross_entropy_nats")));
    } catch (const DataError& e) {
      throw DataError("points CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<OperatingPoint> read_points(const std::filesystem::path& path) {
  return parse_points(read_file(path), point_format_for(path));
}

// ---- frontiers ----

std::string format_frontiers(std::span<const Frontier> frontiers) {
  json arr = json::array();
  for (const auto& f : frontiers) arr.push_back(frontier_to_json(f));
  return json({{"frontiers", arr}}).dump(2) + "\n";
}

std::vector<Frontier> parse_frontiers(std::string_view text) {
  const json doc = parse_json(text, "frontiers");
  const auto it = doc.find("frontiers");
  if (it == doc.end() || !it->is_array()) throw DataError("frontier file must contain a 'frontiers' array");
  std::vector<Frontier> out;
  for (const auto& f : *it) {
    std::vector<FrontierPoint> pts;
    const auto p = f.find("points");
    if (p == f.end() || !p->is_array()) throw DataError("frontier missing 'points' array");
    for (const auto& k : *p) {
      pts.push_back({require_number(k, "entropy_nats"), require_number(k, "log_ppl_nats"),
                     require_number(k, "temperature"), static_cast<int>(require_integer(k, "n_samples"))});
    }
    out.push_back(Frontier::from_points(require<std::string>(f, "method"),
                                        static_cast<int>(require_integer(f, "nfe")), std::move(pts),
                                        parse_frontier_mode(require<std::string>(f, "mode"))));
  }
  return out;
}

std::vector<Frontier> read_frontiers(const std::filesystem::path& path) {
  try {
    return parse_frontiers(read_file(path));
  } catch (const UsageError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_frontiers(const std::filesystem::path& path, std::span<const Frontier> frontiers) {
  write_atomic(path, format_frontiers(frontiers));
}

// ---- corpus statistics ----

std::string format_stats(const EntropyStats& s) {
  json hist = json::array();
  for (const auto& b : s.histogram) hist.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}});
  json obj = {{"units", "nats"},
              {"n_windows", s.n_windows},
              {"window_len", s.window_len},
              {"n_documents", s.n_documents},
              {"n_skipped_documents", s.n_skipped_documents},
              {"mean", s.mean},
              {"median", s.median},
              {"q1", s.q1},
              {"q3", s.q3},
              {"sigma", s.sigma},
              {"min", s.min},
              {"max", s.max},
              {"iqr_band", {s.q1, s.q3}},
              {"sigma_band", {s.mean - s.sigma, s.mean + s.sigma}},
              {"histogram", hist}};
  return obj.dump(2) + "\n";
}

EntropyStats parse_stats(std::string_view text) {
  const json o = parse_json(text, "stats");
  EntropyStats s;
  s.n_windows = static_cast<std::size_t>(require_integer(o, "n_windows"));
  s.window_len = static_cast<std::size_t>(require_integer(o, "window_len"));
  s.n_documents = static_cast<std::size_t>(require_integer(o, "n_documents"));
  s.n_skipped_documents = static_cast<std::size_t>(require_integer(o, "n_skipped_documents"));
  s.mean = require_number(o, "mean");
  s.median = require_number(o, "median");
  s.q1 = require_number(o, "q1");
  s.q3 = require_number(o, "q3");
  s.sigma = require_number(o, "sigma");
  s.min = require_number(o, "min");
  s.max = require_number(o, "max");
  if (const auto h = o.find("histogram"); h != o.end() && h->is_array()) {
    for (const auto& b : *h) {
      s.histogram.push_back({require_number(b, "lo"), require_number(b, "hi"),
                             static_cast<std::size_t>(require_integer(b, "count"))});
    }
  }
  if (!(s.q1 <= s.median && s.median <= s.q3) || s.sigma < 0.0) {
    throw DataError("stats violate q1 <= median <= q3 or sigma >= 0");
  }
  return s;
}

EntropyStats read_stats(const std::filesystem::path& path) { return parse_stats(read_file(path)); }

// ---- manifest ----

RunManifest parse_manifest(std::string_view text) {
  const json o = parse_json(text, "manifest");
  RunManifest m;
  m.methods = require<std::vector<std::string>>(o, "methods");
  const auto sw = o.find("sweep");
  if (sw == o.end() || !sw->is_array()) throw DataError("manifest missing 'sweep' array");
  for (const auto& c : *sw) {
    m.sweep.emplace_back(require_number(c, "temperature"), static_cast<int>(require_integer(c, "nfe")));
  }
  const auto vocab = require_integer(o, "vocab_size");
  if (vocab < 1) throw DataError("manifest vocab_size must be positive");
  m.vocab_size = static_cast<std::uint32_t>(vocab);
  if (o.contains("sample_files")) m.sample_files = require<std::vector<std::string>>(o, "sample_files");
  if (o.contains("reference_model")) m.reference_model = require<std::string>(o, "reference_model");
  if (o.contains("created")) m.created = require<std::string>(o, "created");
  return m;
}

RunManifest read_manifest(const std::filesystem::path& path) { return parse_manifest(read_file(path)); }

std::string format_manifest(const RunManifest& m) {
  json sweep = json::array();
  for (const auto& [t, nfe] : m.sweep) sweep.push_back({{"temperature", t}, {"nfe", nfe}});
  return json({{"methods", m.methods},
               {"sweep", sweep},
               {"vocab_size", m.vocab_size},
               {"sample_files", m.sample_files},
               {"reference_model", m.reference_model},
               {"created", m.created}})
             .dump(2) +
         "\n";
}

void check_against_manifest(const ScoredSample& sample, const RunManifest& manifest) {
  if (std::find(manifest.methods.begin(), manifest.methods.end(), sample.method_id) == manifest.methods.end()) {
    throw DataError("method '" + sample.method_id + "' not listed in manifest");
  }
  const bool in_sweep = std::any_of(manifest.sweep.begin(), manifest.sweep.end(), [&](const auto& cell) {
    return cell.first == sample.temperature && cell.second == sample.nfe;
  });
  if (!in_sweep) {
    throw DataError("cell (temperature " + sig9(sample.temperature) + ", nfe " + std::to_string(sample.nfe) +
                    ") not in manifest sweep");
  }
  validate(sample, manifest.vocab_size);
}

}  // namespace genfrontier::io
