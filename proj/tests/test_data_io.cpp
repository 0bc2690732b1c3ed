#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "gandr/data_io.hpp"
#include "gandr/error.hpp"
#include "gandr/records.hpp"

using namespace gandr;
using fixtures::TempDir;

namespace {

const char* kTsv =
    "call mom\t[IN:CREATE_CALL [SL:CONTACT mom ] ]\tcalling\n"
    "\n"
    "weather in paris\t[IN:GET_WEATHER [SL:LOCATION paris ] ]\tweather\r\n"
    "broken row\t[IN:GET_WEATHER\tweather\n"
    "tom & jerry\t[IN:PLAY_MEDIA ]\tmedia\n"
    "\t[IN:GET_WEATHER ]\tweather\n"
    "only one column\n"
    "wake me at 7\t[IN:CREATE_ALARM [SL:DATE_TIME at 7 ] ]\talarm\n";

}  // namespace

TEST_CASE("TSV loading keeps row ids and reports every bad row") {
  TempDir dir("dataio");
  fixtures::write_text(dir / "d.tsv", kTsv);
  const auto result = load_file(dir / "d.tsv", DatasetSpec{});
  REQUIRE(result.exemplars.size() == 3);
  CHECK(result.exemplars[0].id == 0);
  CHECK(result.exemplars[1].id == 1);
  CHECK(result.exemplars[1].output == "[IN:GET_WEATHER [SL:LOCATION paris ] ]");
  CHECK(result.exemplars[2].id == 6);
  CHECK(result.exemplars[2].domain == "alarm");
  REQUIRE(result.issues.size() == 4);
  CHECK(result.issues[0].line == 4);
  CHECK(result.issues[0].kind == RowErrorKind::MalformedRow);
  CHECK(result.issues[1].line == 5);
  CHECK(result.issues[1].kind == RowErrorKind::SeparatorCollision);
  CHECK(result.issues[2].line == 6);
  CHECK(result.issues[3].line == 7);
  CHECK(result.blank_lines == 1);
  CHECK(result.lines == result.exemplars.size() + result.issues.size() + result.blank_lines);
}

TEST_CASE("strict loading throws the first row error") {
  TempDir dir("dataio");
  fixtures::write_text(dir / "d.tsv", kTsv);
  try {
    load_file_strict(dir / "d.tsv", DatasetSpec{});
    FAIL("expected RowError");
  } catch (const RowError& e) {
    CHECK(e.line() == 4);
  }
}

TEST_CASE("header columns by name") {
  TempDir dir("dataio");
  fixtures::write_text(dir / "h.tsv", "dom\tparse\ttext\nx\t[IN:A ]\thello there\n");
  DatasetSpec spec;
  spec.header = true;
  spec.utterance_column = "text";
  spec.parse_column = "parse";
  spec.domain_column = "dom";
  const auto result = load_file(dir / "h.tsv", spec);
  REQUIRE(result.exemplars.size() == 1);
  CHECK(result.exemplars[0].input == "hello there");
  CHECK(result.exemplars[0].domain == "x");
  CHECK(result.lines == 2);
  spec.parse_column = "nope";
  CHECK_THROWS_AS(load_file(dir / "h.tsv", spec), ConfigError);
}

TEST_CASE("JSONL loading") {
  TempDir dir("dataio");
  fixtures::write_text(dir / "d.jsonl",
                       "{\"utterance\":\"call mom\",\"parse\":\"[IN:CREATE_CALL ]\",\"domain\":\"calling\"}\n"
                       "not json\n"
                       "{\"utterance\":\"hi\",\"parse\":\"[IN:GREET ]\"}\n");
  DatasetSpec spec;
  spec.format = format_for(dir / "d.jsonl");
  CHECK(spec.format == DatasetFormat::JSONL);
  const auto result = load_file(dir / "d.jsonl", spec);
  REQUIRE(result.exemplars.size() == 2);
  CHECK(result.exemplars[1].id == 2);
  CHECK_FALSE(result.exemplars[1].domain.has_value());
  CHECK(result.issues.size() == 1);
}

TEST_CASE("missing file is an IoError") {
  CHECK_THROWS_AS(load_file("/nonexistent/x.tsv", DatasetSpec{}), IoError);
}

TEST_CASE("split spec parsing") {
  CHECK(SplitSpec::parse("full").kind == SplitKind::Full);
  CHECK(SplitSpec::parse("count:10").count == 10);
  CHECK(SplitSpec::parse("fraction:0.25").fraction == 0.25);
  CHECK(SplitSpec::parse("count:10", 3).to_string() == "count:10");
  CHECK_THROWS_AS(SplitSpec::parse("half"), ConfigError);
  CHECK_THROWS_AS(SplitSpec::parse("fraction:1.5"), ConfigError);
  CHECK_THROWS_AS(SplitSpec::parse("count:x"), ConfigError);
}

TEST_CASE("splits sample without replacement in corpus order") {
  std::vector<Exemplar> ex;
  for (int i = 0; i < 100; ++i) ex.push_back(make_exemplar(i, "w" + std::to_string(i), "[IN:A ]"));
  SplitSpec split = SplitSpec::parse("count:30", 8);
  const auto a = make_split(ex, split);
  REQUIRE(a.size() == 30);
  std::set<ExemplarId> ids;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ids.insert(a[i].id);
    if (i) CHECK(a[i - 1].id < a[i].id);
  }
  CHECK(ids.size() == 30);
  const auto b = make_split(ex, split);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].id == b[i].id);
  const auto c = make_split(ex, SplitSpec::parse("count:30", 9));
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].id != c[i].id;
  CHECK(differs);
  CHECK(make_split(ex, SplitSpec::parse("fraction:0.25")).size() == 25);
  CHECK(make_split(ex, SplitSpec::parse("full")).size() == 100);
  CHECK_THROWS_AS(make_split(ex, SplitSpec::parse("count:101")), CountExceedsCorpus);
}

TEST_CASE("store save/load round-trips byte for byte") {
  std::mt19937_64 gen(43);
  const auto rows = fixtures::random_corpus(gen, 60, 40);
  const auto store = ExemplarStore::build(fixtures::to_exemplars(rows));
  std::stringstream first;
  save_store(store, first, nlohmann::ordered_json{{"command", "index"}});
  const auto loaded = load_store(first);
  std::stringstream second;
  save_store(loaded, second, nlohmann::ordered_json{{"command", "index"}});
  CHECK(first.str() == second.str());
  REQUIRE(loaded.size() == store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    CHECK(loaded.at(i).id == store.at(i).id);
    CHECK(loaded.at(i).domain == store.at(i).domain);
  }
  RetrievalConfig cfg;
  cfg.alpha = 0.5;
  const Query q{rows[0].input, rows[1].output, {}};
  CHECK(retrieve_topk(store, q, cfg) == retrieve_topk(loaded, q, cfg));
}

TEST_CASE("store load rejects other versions and damage") {
  const auto store = ExemplarStore::build({make_exemplar(0, "a", "[IN:A ]")});
  std::stringstream buf;
  save_store(store, buf);
  std::string text = buf.str();
  std::string v2 = text;
  v2.replace(0, std::string("gandr-store 1").size(), "gandr-store 2");
  std::istringstream in2(v2);
  CHECK_THROWS_AS(load_store(in2), VersionMismatch);
  std::istringstream cut(text.substr(0, text.size() - 5));
  CHECK_THROWS_AS(load_store(cut), CorruptFile);
  std::istringstream junk("gandr-store 1\nconfig nope\n");
  CHECK_THROWS_AS(load_store(junk), CorruptFile);
}

TEST_CASE("atomic writes leave no temp file behind on failure") {
  TempDir dir("dataio");
  const auto target = dir / "out.txt";
  fixtures::write_text(target, "old");
  CHECK_THROWS(write_file_atomic(target, [](std::ostream&) { throw std::runtime_error("boom"); }));
  CHECK(fixtures::read_text(target) == "old");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++files;
  CHECK(files == 1);
  write_file_atomic(target, [](std::ostream& o) { o << "new"; });
  CHECK(fixtures::read_text(target) == "new");
}

TEST_CASE("records round-trip through JSONL") {
  PredictionRecord r;
  r.sample_id = 7;
  r.query = "call the \"musicals\" group";
  r.gold = "[IN:CREATE_CALL [SL:GROUP musicals ] ]";
  r.domain = "calling";
  r.pass1_retrievals.push_back({ScoredExemplar{3, 0.5, 0.5, 0.0, 0}, "x", "[IN:A ]"});
  r.pass1_augmented = AugmentedInput{"call || x & [IN:A ]", "call", {3}, false};
  r.preliminary = "[IN:CREATE_CALL";
  r.preliminary_fallback = true;
  r.pass2_retrievals.push_back({ScoredExemplar{4, 0.1 + 0.2, 1.0 / 3.0, 0.7, 0}, "y", "[IN:B ]"});
  r.pass2_augmented = AugmentedInput{"call || y & [IN:B ]", "call", {4}, true};
  r.final = "[IN:CREATE_CALL [SL:GROUP musicals ] ]";
  r.status = RecordStatus::Ok;
  PredictionRecord failed;
  failed.sample_id = 8;
  failed.status = RecordStatus::GenFailed;
  failed.error = "timeout";

  std::stringstream buf;
  write_records(buf, nlohmann::ordered_json{{"alpha", 0.75}}, {r, failed});
  const auto file = read_records(buf);
  CHECK(file.config["alpha"] == 0.75);
  REQUIRE(file.records.size() == 2);
  CHECK(file.records[0] == r);
  CHECK(file.records[1] == failed);

  std::stringstream again;
  write_records(again, file.config, file.records);
  std::stringstream orig;
  write_records(orig, nlohmann::ordered_json{{"alpha", 0.75}}, {r, failed});
  CHECK(again.str() == orig.str());
}

TEST_CASE("records reader rejects bad headers") {
  std::istringstream none("");
  CHECK_THROWS_AS(read_records(none), CorruptFile);
  std::istringstream version("{\"gandr_records\":2,\"config\":{}}\n");
  CHECK_THROWS_AS(read_records(version), VersionMismatch);
  std::istringstream bad_row("{\"gandr_records\":1,\"config\":{}}\n{\"sample_id\":\"x\"}\n");
  CHECK_THROWS_AS(read_records(bad_row), CorruptFile);
}
