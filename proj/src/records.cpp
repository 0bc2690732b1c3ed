#include "gandr/records.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "gandr/data_io.hpp"
#include "gandr/error.hpp"

namespace gandr {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json to_json(const RetrievalEntry& e) {
  ordered_json j;
  j["exemplar_id"] = e.score.exemplar_id;
  j["relevance"] = e.score.relevance;
  j["input_sim"] = e.score.input_sim;
  j["output_sim"] = e.score.output_sim;
  j["rank"] = e.score.rank;
  j["input"] = e.input;
  j["output"] = e.output;
  return j;
}

ordered_json to_json(const AugmentedInput& a) {
  ordered_json j;
  j["text"] = a.text;
  j["query"] = a.query;
  j["exemplar_ids"] = a.exemplar_ids;
  j["truncated"] = a.truncated;
  return j;
}

ordered_json to_json(const std::vector<RetrievalEntry>& entries) {
  ordered_json arr = ordered_json::array();
  for (const auto& e : entries) arr.push_back(to_json(e));
  return arr;
}

std::vector<RetrievalEntry> entries_from_json(const json& arr) {
  std::vector<RetrievalEntry> out;
  for (const auto& j : arr) {
    RetrievalEntry e;
    e.score.exemplar_id = j.at("exemplar_id").get<ExemplarId>();
    e.score.relevance = j.at("relevance").get<double>();
    e.score.input_sim = j.at("input_sim").get<double>();
    e.score.output_sim = j.at("output_sim").get<double>();
    e.score.rank = j.at("rank").get<std::size_t>();
    e.input = j.at("input").get<std::string>();
    e.output = j.at("output").get<std::string>();
    out.push_back(std::move(e));
  }
  return out;
}

AugmentedInput augmented_from_json(const json& j) {
  AugmentedInput a;
  a.text = j.at("text").get<std::string>();
  a.query = j.at("query").get<std::string>();
  a.exemplar_ids = j.at("exemplar_ids").get<std::vector<ExemplarId>>();
  a.truncated = j.at("truncated").get<bool>();
  return a;
}

template <typename J>
J optional_string(const std::optional<std::string>& s) {
  return s ? J(*s) : J(nullptr);
}

std::optional<std::string> string_or_null(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::string>();
}

}  // namespace

ordered_json to_json(const PredictionRecord& r) {
  ordered_json j;
  j["sample_id"] = r.sample_id;
  j["query"] = r.query;
  j["gold"] = optional_string<ordered_json>(r.gold);
  j["domain"] = optional_string<ordered_json>(r.domain);
  j["pass1_retrievals"] = to_json(r.pass1_retrievals);
  j["pass1_augmented"] = to_json(r.pass1_augmented);
  j["preliminary"] = r.preliminary;
  j["preliminary_fallback"] = r.preliminary_fallback;
  j["pass2_retrievals"] = to_json(r.pass2_retrievals);
  j["pass2_augmented"] = to_json(r.pass2_augmented);
  j["final"] = r.final;
  j["status"] = to_string(r.status);
  j["error"] = r.error;
  return j;
}

PredictionRecord record_from_json(const json& j) {
  PredictionRecord r;
  r.sample_id = j.at("sample_id").get<ExemplarId>();
  r.query = j.at("query").get<std::string>();
  r.gold = string_or_null(j.at("gold"));
  r.domain = string_or_null(j.at("domain"));
  r.pass1_retrievals = entries_from_json(j.at("pass1_retrievals"));
  r.pass1_augmented = augmented_from_json(j.at("pass1_augmented"));
  r.preliminary = j.at("preliminary").get<std::string>();
  r.preliminary_fallback = j.at("preliminary_fallback").get<bool>();
  r.pass2_retrievals = entries_from_json(j.at("pass2_retrievals"));
  r.pass2_augmented = augmented_from_json(j.at("pass2_augmented"));
  r.final = j.at("final").get<std::string>();
  r.status = parse_record_status(j.at("status").get<std::string>());
  r.error = j.at("error").get<std::string>();
  return r;
}

void write_records(std::ostream& out, const ordered_json& config,
                   const std::vector<PredictionRecord>& records) {
  ordered_json header;
  header["gandr_records"] = kRecordsVersion;
  header["config"] = config;
  out << header.dump() << '\n';
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

RecordsFile read_records(std::istream& in) {
  RecordsFile file;
  std::string line;
  if (!std::getline(in, line)) throw CorruptFile("records file is empty");
  try {
    const auto header = ordered_json::parse(line);
    if (!header.is_object() || !header.contains("gandr_records")) {
      throw CorruptFile("records file lacks a header line");
    }
    const int version = header.at("gandr_records").get<int>();
    if (version != kRecordsVersion) {
      throw VersionMismatch("records version " + std::to_string(version) + ", expected " +
                            std::to_string(kRecordsVersion));
    }
    file.config = header.value("config", ordered_json::object());
  } catch (const json::exception& e) {
    throw CorruptFile(std::string("bad records header: ") + e.what());
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      file.records.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw CorruptFile("records line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return file;
}

void save_records(const std::filesystem::path& path, const ordered_json& config,
                  const std::vector<PredictionRecord>& records) {
  write_file_atomic(path, [&](std::ostream& out) { write_records(out, config, records); });
}

RecordsFile load_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_records(in);
}

}  // namespace gandr
