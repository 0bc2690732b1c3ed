#include "gandr/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <unistd.h>

#include <json.hpp>

#include "gandr/rng.hpp"

namespace gandr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kStoreMagic = "gandr-store";
constexpr int kStoreVersion = 1;

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    cells.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return cells;
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

bool parse_index(const std::string& s, std::size_t& out) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return false;
  }
  out = static_cast<std::size_t>(std::stoull(s));
  return true;
}

struct RawRow {
  std::string utterance;
  std::string parse;
  std::optional<std::string> domain;
};

class RowReader {
 public:
  explicit RowReader(const DatasetSpec& spec) : spec_(spec) {}

  // Returns true when this line was consumed as the header.
  bool maybe_header(const std::string& line) {
    if (!spec_.header || seen_header_) return false;
    seen_header_ = true;
    if (spec_.format == DatasetFormat::TSV) {
      const auto names = split_tabs(line);
      for (std::size_t i = 0; i < names.size(); ++i) header_[names[i]] = i;
    }
    return true;
  }

  RawRow read(const std::string& line) const {
    return spec_.format == DatasetFormat::TSV ? read_tsv(line) : read_jsonl(line);
  }

 private:
  std::optional<std::size_t> resolve(const std::string& column, std::size_t fallback) const {
    if (column.empty()) return fallback;
    std::size_t idx = 0;
    if (parse_index(column, idx)) return idx;
    auto it = header_.find(column);
    if (it == header_.end()) {
      throw ConfigError("column '" + column + "' is not an index or a header name");
    }
    return it->second;
  }

  RawRow read_tsv(const std::string& line) const {
    const auto cells = split_tabs(line);
    const auto u = *resolve(spec_.utterance_column, 0);
    const auto p = *resolve(spec_.parse_column, 1);
    if (u >= cells.size() || p >= cells.size()) {
      throw std::runtime_error("expected at least " + std::to_string(std::max(u, p) + 1) +
                               " tab-separated columns, found " + std::to_string(cells.size()));
    }
    RawRow row{cells[u], cells[p], std::nullopt};
    const auto d = *resolve(spec_.domain_column, 2);
    if (d < cells.size() && !cells[d].empty()) {
      row.domain = cells[d];
    } else if (!spec_.domain_column.empty()) {
      throw std::runtime_error("missing domain column");
    }
    return row;
  }

  RawRow read_jsonl(const std::string& line) const {
    const json obj = json::parse(line);
    if (!obj.is_object()) throw std::runtime_error("row is not a JSON object");
    const std::string u = spec_.utterance_column.empty() ? "utterance" : spec_.utterance_column;
    const std::string p = spec_.parse_column.empty() ? "parse" : spec_.parse_column;
    const std::string d = spec_.domain_column.empty() ? "domain" : spec_.domain_column;
    if (!obj.contains(u) || !obj[u].is_string()) throw std::runtime_error("missing string field '" + u + "'");
    if (!obj.contains(p) || !obj[p].is_string()) throw std::runtime_error("missing string field '" + p + "'");
    RawRow row{obj[u].get<std::string>(), obj[p].get<std::string>(), std::nullopt};
    if (obj.contains(d) && obj[d].is_string()) {
      row.domain = obj[d].get<std::string>();
    } else if (!spec_.domain_column.empty()) {
      throw std::runtime_error("missing string field '" + d + "'");
    }
    return row;
  }

  const DatasetSpec& spec_;
  bool seen_header_ = false;
  std::unordered_map<std::string, std::size_t> header_;
};

[[noreturn]] void corrupt_store(const std::string& why) {
  throw CorruptFile("store file: " + why);
}

std::string store_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) corrupt_store(std::string("truncated before ") + what);
  return line;
}

}  // namespace

DatasetFormat format_for(const fs::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".jsonl" || ext == ".json") ? DatasetFormat::JSONL : DatasetFormat::TSV;
}

LoadResult load_file(const fs::path& path, const DatasetSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  LoadResult result;
  RowReader reader(spec);
  std::string line;
  ExemplarId next_id = 0;
  while (std::getline(in, line)) {
    ++result.lines;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (reader.maybe_header(line)) continue;
    if (is_blank(line)) {
      ++result.blank_lines;
      continue;
    }
    const ExemplarId id = next_id++;
    RawRow row;
    try {
      row = reader.read(line);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      result.issues.push_back({result.lines, RowErrorKind::MalformedRow, e.what()});
      continue;
    }
    if (row.utterance.empty() || is_blank(row.utterance)) {
      result.issues.push_back({result.lines, RowErrorKind::MalformedRow, "empty utterance"});
      continue;
    }
    if (collides_with_separators(row.utterance) || collides_with_separators(row.parse)) {
      result.issues.push_back({result.lines, RowErrorKind::SeparatorCollision,
                               "utterance or parse contains '||' or a standalone '&'"});
      continue;
    }
    try {
      result.exemplars.push_back(make_exemplar(id, std::move(row.utterance), std::move(row.parse),
                                               std::move(row.domain), spec.parse));
    } catch (const RejectedExemplar& e) {
      result.issues.push_back({result.lines, RowErrorKind::MalformedRow, e.what()});
    }
  }
  if (in.bad()) throw IoError("read error on " + path.string());
  return result;
}

std::vector<Exemplar> load_file_strict(const fs::path& path, const DatasetSpec& spec) {
  auto result = load_file(path, spec);
  if (!result.issues.empty()) {
    const auto& first = result.issues.front();
    throw RowError(first.kind, first.line, path.string() + ": " + first.message);
  }
  return std::move(result.exemplars);
}

Dataset load_dataset(const DatasetSpec& spec) {
  Dataset data;
  if (spec.train) data.train = load_file_strict(*spec.train, spec);
  if (spec.dev) data.dev = load_file_strict(*spec.dev, spec);
  if (spec.test) data.test = load_file_strict(*spec.test, spec);
  return data;
}

SplitSpec SplitSpec::parse(const std::string& text, std::uint64_t seed) {
  SplitSpec split;
  split.seed = seed;
  if (text == "full") return split;
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string value = colon == std::string::npos ? "" : text.substr(colon + 1);
  try {
    std::size_t used = 0;
    if (kind == "count") {
      split.kind = SplitKind::FixedCount;
      split.count = std::stoull(value, &used);
    } else if (kind == "fraction") {
      split.kind = SplitKind::Fraction;
      split.fraction = std::stod(value, &used);
    } else {
      throw ConfigError("unknown split '" + text + "'");
    }
    if (used != value.size()) throw ConfigError("bad split value '" + value + "'");
  } catch (const std::logic_error&) {
    throw ConfigError("bad split value '" + value + "'");
  }
  if (split.kind == SplitKind::Fraction && !(split.fraction > 0.0 && split.fraction <= 1.0)) {
    throw ConfigError("split fraction must be in (0, 1]");
  }
  return split;
}

std::string SplitSpec::to_string() const {
  switch (kind) {
    case SplitKind::Full:
      return "full";
    case SplitKind::FixedCount:
      return "count:" + std::to_string(count);
    case SplitKind::Fraction: {
      std::ostringstream s;
      s << "fraction:" << fraction;
      return s.str();
    }
  }
  return "full";
}

std::vector<Exemplar> make_split(const std::vector<Exemplar>& exemplars, const SplitSpec& split) {
  const std::size_t total = exemplars.size();
  std::size_t n = total;
  switch (split.kind) {
    case SplitKind::Full:
      return exemplars;
    case SplitKind::FixedCount:
      n = split.count;
      if (n > total) throw CountExceedsCorpus(n, total);
      break;
    case SplitKind::Fraction:
      if (!(split.fraction > 0.0 && split.fraction <= 1.0)) {
        throw ConfigError("split fraction must be in (0, 1]");
      }
      n = static_cast<std::size_t>(std::floor(split.fraction * static_cast<double>(total) + 1e-9));
      n = std::min(n, total);
      break;
  }
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(split.seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<Exemplar> out;
  out.reserve(n);
  for (auto i : idx) out.push_back(exemplars[i]);
  return out;
}

void save_store(const ExemplarStore& store, std::ostream& out, const nlohmann::ordered_json& config) {
  const auto& opts = store.options();
  out << kStoreMagic << ' ' << kStoreVersion << '\n';
  out << "config " << (config.is_null() ? std::string("{}") : config.dump()) << '\n';
  out << "prefixes " << opts.parse.intent_prefix << ' ' << opts.parse.slot_prefix << '\n';
  out << "exemplars " << store.size() << '\n';
  for (const auto& ex : store.exemplars()) {
    json row = {{"id", ex.id}, {"input", ex.input}, {"output", ex.output}};
    row["domain"] = ex.domain ? json(*ex.domain) : json(nullptr);
    out << row.dump() << '\n';
  }
  out << "index input\n";
  store.input_index().save(out);
  out << "index output\n";
  store.output_index().save(out);
  out << "end\n";
}

ExemplarStore load_store(std::istream& in) {
  {
    std::istringstream header(store_line(in, "header"));
    std::string magic;
    int version = 0;
    if (!(header >> magic) || magic != kStoreMagic) corrupt_store("bad magic");
    if (!(header >> version)) corrupt_store("missing version");
    if (version != kStoreVersion) {
      throw VersionMismatch("store version " + std::to_string(version) + ", expected " +
                            std::to_string(kStoreVersion));
    }
  }
  {
    const std::string line = store_line(in, "config");
    if (line.rfind("config ", 0) != 0 || !json::accept(line.substr(7))) corrupt_store("bad config line");
  }
  StoreOptions options;
  {
    std::istringstream line(store_line(in, "prefixes"));
    std::string key;
    if (!(line >> key >> options.parse.intent_prefix >> options.parse.slot_prefix) ||
        key != "prefixes") {
      corrupt_store("bad prefixes line");
    }
  }
  std::size_t count = 0;
  {
    std::istringstream line(store_line(in, "exemplar count"));
    std::string key;
    if (!(line >> key >> count) || key != "exemplars") corrupt_store("bad exemplar count");
  }
  std::vector<Exemplar> exemplars;
  exemplars.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::string line = store_line(in, "exemplars");
    try {
      const json row = json::parse(line);
      std::optional<std::string> domain;
      if (!row.at("domain").is_null()) domain = row.at("domain").get<std::string>();
      exemplars.push_back(make_exemplar(row.at("id").get<ExemplarId>(),
                                        row.at("input").get<std::string>(),
                                        row.at("output").get<std::string>(), std::move(domain),
                                        options.parse));
    } catch (const json::exception& e) {
      corrupt_store(std::string("bad exemplar row: ") + e.what());
    } catch (const RejectedExemplar& e) {
      corrupt_store(e.what());
    }
  }
  if (store_line(in, "input index") != "index input") corrupt_store("missing input index");
  auto input_index = TfidfIndex::load(in);
  if (store_line(in, "output index") != "index output") corrupt_store("missing output index");
  auto output_index = TfidfIndex::load(in);
  if (store_line(in, "end marker") != "end") corrupt_store("missing end marker");
  options.input_weighting = input_index.options();
  options.output_weighting = output_index.options();
  return ExemplarStore::assemble(std::move(exemplars), std::move(input_index),
                                 std::move(output_index), std::move(options));
}

void save_store(const ExemplarStore& store, const fs::path& path,
                const nlohmann::ordered_json& config) {
  write_file_atomic(path, [&](std::ostream& out) { save_store(store, out, config); });
}

ExemplarStore load_store(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return load_store(in);
}

void write_file_atomic(const fs::path& path, const std::function<void(std::ostream&)>& write) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    try {
      write(out);
    } catch (...) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw;
    }
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed on " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace gandr
