#pragma once

// PredictionRecord JSONL files. The first line is a header object
// {"gandr_records": <version>, "config": {...}}; each following line is one
// record with fields named as in PredictionRecord.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "gandr/pipeline.hpp"

namespace gandr {

inline constexpr int kRecordsVersion = 1;

nlohmann::ordered_json to_json(const PredictionRecord& record);
PredictionRecord record_from_json(const nlohmann::json& j);

struct RecordsFile {
  nlohmann::ordered_json config;
  std::vector<PredictionRecord> records;
};

void write_records(std::ostream& out, const nlohmann::ordered_json& config,
                   const std::vector<PredictionRecord>& records);
// Throws VersionMismatch or CorruptFile.
RecordsFile read_records(std::istream& in);

void save_records(const std::filesystem::path& path, const nlohmann::ordered_json& config,
                  const std::vector<PredictionRecord>& records);
RecordsFile load_records(const std::filesystem::path& path);

}  // namespace gandr
