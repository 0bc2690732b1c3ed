#include <doctest.h>

#include <sstream>

#include "gandr/error.hpp"
#include "gandr/evaluation.hpp"

using namespace gandr;

namespace {

RetrievalEntry entry(ExemplarId id, const std::string& output) {
  return {ScoredExemplar{id, 0.0, 0.0, 0.0, 0}, "x", output};
}

PredictionRecord record(ExemplarId id, const std::string& gold, const std::string& final,
                        std::vector<std::string> retrieved, std::optional<std::string> domain = {}) {
  PredictionRecord r;
  r.sample_id = id;
  r.query = "q";
  r.gold = gold;
  r.final = final;
  r.domain = std::move(domain);
  for (std::size_t i = 0; i < retrieved.size(); ++i) {
    r.pass2_retrievals.push_back(entry(static_cast<ExemplarId>(i), retrieved[i]));
  }
  return r;
}

}  // namespace

TEST_CASE("exact match normalizes spacing only") {
  CHECK(exact_match("[IN:A [SL:B x ]]", "[IN:A [SL:B x ] ]"));
  CHECK(exact_match("  [IN:A  ]", "[IN:A ]"));
  CHECK_FALSE(exact_match("[IN:A [SL:B X ] ]", "[IN:A [SL:B x ] ]"));
  CHECK(exact_match("[IN:A [SL:B X ] ]", "[in:a [sl:b x ] ]", true));
  CHECK_FALSE(exact_match("[IN:A [SL:B x y ] ]", "[IN:A [SL:B xy ] ]"));
}

TEST_CASE("tree match accepts label case differences") {
  CHECK(tree_match("[in:a [sl:b x ] ]", "[IN:A [SL:B x ] ]"));
  CHECK_FALSE(tree_match("[IN:A", "[IN:A ]"));
}

TEST_CASE("evaluate counts failures as misses") {
  std::vector<PredictionRecord> rs;
  rs.push_back(record(0, "[IN:A ]", "[IN:A ]", {"[IN:A ]"}));
  rs.push_back(record(1, "[IN:B ]", "[IN:B ]", {"[IN:A ]"}));
  rs.back().status = RecordStatus::GenFailed;
  rs.push_back(record(2, "[IN:C ]", "[IN:D ]", {"[IN:D ]", "[IN:C ]"}));
  rs.push_back(record(3, "[IN:E [SL:F x ] ]", "garbage", {"[IN:E [SL:F other value ] ]"}));
  rs.back().status = RecordStatus::Malformed;
  const auto report = evaluate(rs);
  CHECK(report.num_samples == 4);
  CHECK(report.failed == 2);
  CHECK(report.exact_match == doctest::Approx(25.0));
  CHECK(report.template_recall_at_k == doctest::Approx(75.0));
  EvalOptions k1;
  k1.k = 1;
  CHECK(evaluate(rs, k1).template_recall_at_k == doctest::Approx(50.0));
  CHECK(report.per_domain.empty());
}

TEST_CASE("per-domain breakdown sums to the total") {
  std::vector<PredictionRecord> rs;
  rs.push_back(record(0, "[IN:A ]", "[IN:A ]", {}, "alarm"));
  rs.push_back(record(1, "[IN:A ]", "[IN:B ]", {}, "alarm"));
  rs.push_back(record(2, "[IN:C ]", "[IN:C ]", {}, "weather"));
  rs.push_back(record(3, "[IN:C ]", "[IN:C ]", {}));
  const auto report = evaluate(rs);
  REQUIRE(report.per_domain.size() == 3);
  CHECK(report.per_domain.at("alarm").exact_match == doctest::Approx(50.0));
  CHECK(report.per_domain.at("weather").num_samples == 1);
  CHECK(report.per_domain.at("(none)").num_samples == 1);
  std::size_t total = 0;
  for (const auto& [_, m] : report.per_domain) total += m.num_samples;
  CHECK(total == report.num_samples);
  std::ostringstream table;
  print_report(table, report);
  CHECK(table.str().find("weather") != std::string::npos);
  CHECK(to_json(report)["per_domain"]["alarm"]["num_samples"] == 2);
}

TEST_CASE("missing gold throws") {
  std::vector<PredictionRecord> rs{record(0, "[IN:A ]", "[IN:A ]", {})};
  rs[0].gold.reset();
  CHECK_THROWS_AS(evaluate(rs), MissingGold);
  CHECK_THROWS_AS(template_recall_at_k(rs, 1, 4), MissingGold);
}

TEST_CASE("template recall per pass") {
  auto r = record(0, "[IN:A [SL:B x ] ]", "", {"[IN:A [SL:B y ] ]"});
  r.pass1_retrievals = {entry(5, "[IN:Z ]")};
  std::vector<PredictionRecord> rs{r};
  CHECK(template_recall_at_k(rs, 1, 4) == 0.0);
  CHECK(template_recall_at_k(rs, 2, 4) == 100.0);
  CHECK_THROWS_AS(template_recall_at_k(rs, 3, 4), ConfigError);
}

TEST_CASE("set semantics ignores repeated slots") {
  std::vector<PredictionRecord> rs{record(0, "[IN:A [SL:B x ] [SL:B y ] ]", "", {"[IN:A [SL:B z ] ]"})};
  CHECK(template_recall_at_k(rs, 2, 4, TemplateSemantics::Multiset) == 0.0);
  CHECK(template_recall_at_k(rs, 2, 4, TemplateSemantics::Set) == 100.0);
}

TEST_CASE("recall is non-decreasing in k") {
  std::vector<PredictionRecord> rs;
  const std::vector<std::string> outs{"[IN:A ]", "[IN:B ]", "[IN:C ]", "[IN:D ]"};
  const char* golds[] = {"[IN:A ]", "[IN:B ]", "[IN:C ]", "[IN:D ]", "[IN:E ]"};
  for (int i = 0; i < 5; ++i) rs.push_back(record(i, golds[i], "", outs));
  double last = -1.0;
  for (std::size_t k = 1; k <= 5; ++k) {
    const double r = template_recall_at_k(rs, 2, k);
    CHECK(r >= last);
    CHECK(r == doctest::Approx(20.0 * static_cast<double>(std::min<std::size_t>(k, 4))));
    last = r;
  }
}

TEST_CASE("sweep table layout") {
  SweepResult result;
  result.axis = SweepAxis::K;
  result.cells = {{1, 0, 10.0, 20.0}, {1, 1, 30.0, 40.0}, {2, 0, 50.0, 60.0}};
  result.points = {{1, 20.0, 14.142, 30.0, 14.142}, {2, 50.0, 0.0, 60.0, 0.0}};
  std::ostringstream cells, summary;
  write_sweep_tsv(cells, result);
  write_sweep_summary(summary, result);
  CHECK(cells.str() ==
        "k\tseed\texact_match\ttemplate_recall\n"
        "1\t0\t10.0000\t20.0000\n1\t1\t30.0000\t40.0000\n2\t0\t50.0000\t60.0000\n");
  CHECK(summary.str().rfind("k\texact_match\ttemplate_recall", 0) == 0);
  CHECK(parse_sweep_axis("alpha") == SweepAxis::Alpha);
  CHECK_THROWS_AS(parse_sweep_axis("p"), ConfigError);
}

TEST_CASE("sweep statistics and reduction to a single run") {
  std::vector<Exemplar> ex{make_exemplar(0, "call mom", "[IN:CREATE_CALL [SL:CONTACT mom ] ]"),
                           make_exemplar(1, "call dad", "[IN:CREATE_CALL [SL:CONTACT dad ] ]"),
                           make_exemplar(2, "weather today", "[IN:GET_WEATHER [SL:DATE_TIME today ] ]"),
                           make_exemplar(3, "weather in paris", "[IN:GET_WEATHER [SL:LOCATION paris ] ]"),
                           make_exemplar(4, "wake me up", "[IN:CREATE_ALARM ]")};
  const auto store = ExemplarStore::build(ex);
  const auto samples = samples_from(store.exemplars());
  std::unordered_map<std::string, std::string> gold;
  for (const auto& e : ex) gold.emplace(e.input, e.output);
  PipelineConfig cfg;
  cfg.preliminary = std::make_shared<OracleLookupGenerator>(gold);
  cfg.final = std::make_shared<StaticGenerator>("[IN:CREATE_CALL [SL:CONTACT mom ] ]");
  cfg.retrieval.k = 1;
  cfg.retrieval.exclude_self = true;

  const auto result = sweep(store, samples, cfg, SweepAxis::Alpha, {1.0, 0.0}, {0, 1, 2});
  REQUIRE(result.points.size() == 2);
  CHECK(result.points[0].value == 0.0);
  CHECK(result.cells.size() == 6);
  CHECK(result.points[0].exact_match_mean == doctest::Approx(20.0));
  CHECK(result.points[0].exact_match_stddev == 0.0);

  auto single = cfg;
  single.retrieval.alpha = 1.0;
  const auto direct = evaluate(run_dataset(store, single, samples), EvalOptions{});
  const auto one = sweep(store, samples, cfg, SweepAxis::Alpha, {1.0}, {0});
  CHECK(one.cells[0].exact_match == direct.exact_match);
  CHECK(one.cells[0].template_recall == direct.template_recall_at_k);

  const auto byk = sweep(store, samples, cfg, SweepAxis::K, {1, 2, 4}, {0});
  REQUIRE(byk.points.size() == 3);
  CHECK(byk.points[0].template_recall_mean <= byk.points[1].template_recall_mean);
  CHECK(byk.points[1].template_recall_mean <= byk.points[2].template_recall_mean);
  CHECK_THROWS_AS(sweep(store, samples, cfg, SweepAxis::K, {0.5}, {0}), ConfigError);
  CHECK_THROWS_AS(sweep(store, samples, cfg, SweepAxis::K, {}, {0}), ConfigError);
}
