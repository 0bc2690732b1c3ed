#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gandr/error.hpp"
#include "gandr/retrieval.hpp"

namespace gandr {

enum class DatasetFormat { TSV, JSONL };

// .jsonl / .json are JSONL, everything else TSV.
DatasetFormat format_for(const std::filesystem::path& path);

struct DatasetSpec {
  std::optional<std::filesystem::path> train;
  std::optional<std::filesystem::path> dev;
  std::optional<std::filesystem::path> test;
  DatasetFormat format = DatasetFormat::TSV;
  // TSV: a 0-based column index, or a header name when header is set.
  // JSONL: a field name. Empty fields pick the format's default.
  std::string utterance_column;
  std::string parse_column;
  std::string domain_column;
  bool header = false;
  ParseOptions parse;
};

struct RowIssue {
  std::size_t line = 0;  // 1-based line number in the file
  RowErrorKind kind = RowErrorKind::MalformedRow;
  std::string message;
};

// Every line of the file ends up counted exactly once:
// lines == exemplars + issues + blank_lines + (header ? 1 : 0).
struct LoadResult {
  std::vector<Exemplar> exemplars;
  std::vector<RowIssue> issues;
  std::size_t lines = 0;
  std::size_t blank_lines = 0;
};

// Exemplar ids are the 0-based data-row index (blank lines and the header do
// not count); rejected rows keep their id slot so ids stay stable under
// fixes. Throws IoError when the file cannot be read.
LoadResult load_file(const std::filesystem::path& path, const DatasetSpec& spec);

// Same, but throws RowError for the first bad row.
std::vector<Exemplar> load_file_strict(const std::filesystem::path& path, const DatasetSpec& spec);

struct Dataset {
  std::vector<Exemplar> train;
  std::vector<Exemplar> dev;
  std::vector<Exemplar> test;
};

Dataset load_dataset(const DatasetSpec& spec);

enum class SplitKind { Full, FixedCount, Fraction };

struct SplitSpec {
  SplitKind kind = SplitKind::Full;
  std::size_t count = 0;
  double fraction = 1.0;
  std::uint64_t seed = 0;

  // "full" | "count:<n>" | "fraction:<f>"; throws ConfigError.
  static SplitSpec parse(const std::string& text, std::uint64_t seed = 0);
  std::string to_string() const;
};

// Uniform sample without replacement (partial Fisher-Yates over indices with
// Rng(seed)), returned in corpus order. Fraction takes floor(f * N).
// Throws CountExceedsCorpus or ConfigError.
std::vector<Exemplar> make_split(const std::vector<Exemplar>& exemplars, const SplitSpec& split);

// Versioned store file: exemplars as JSON lines followed by both TF-IDF
// indexes, preceded by the configuration that built it. Throws VersionMismatch
// or CorruptFile.
void save_store(const ExemplarStore& store, std::ostream& out,
                const nlohmann::ordered_json& config = {});
ExemplarStore load_store(std::istream& in);
void save_store(const ExemplarStore& store, const std::filesystem::path& path,
                const nlohmann::ordered_json& config = {});
ExemplarStore load_store(const std::filesystem::path& path);

// Writes through a temporary file in the same directory, then renames.
void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& write);

std::string read_file(const std::filesystem::path& path);

}  // namespace gandr
