#include <doctest.h>

#include <omp.h>

#include <random>

#include "fixtures.hpp"
#include "gandr/error.hpp"
#include "gandr/pipeline.hpp"

using namespace gandr;

namespace {

// Oracle that also counts batches.
class CountingOracle final : public Generator {
 public:
  explicit CountingOracle(const std::vector<Exemplar>& ex) {
    std::unordered_map<std::string, std::string> table;
    for (const auto& e : ex) table.emplace(e.input, e.output);
    inner_ = std::make_unique<OracleLookupGenerator>(std::move(table));
  }
  GenerationResponse generate(std::span<const std::string> inputs) override {
    ++batches;
    seen.insert(seen.end(), inputs.begin(), inputs.end());
    return inner_->generate(inputs);
  }
  std::string describe() const override { return "counting"; }

  int batches = 0;
  std::vector<std::string> seen;

 private:
  std::unique_ptr<OracleLookupGenerator> inner_;
};

struct World {
  std::vector<fixtures::Row> rows;
  ExemplarStore store;
  std::vector<Sample> samples;
};

World make_world(std::uint64_t seed, std::size_t n = 40) {
  std::mt19937_64 gen(seed);
  auto rows = fixtures::random_corpus(gen, n, 30);
  auto store = ExemplarStore::build(fixtures::to_exemplars(rows));
  auto samples = samples_from(store.exemplars());
  return World{std::move(rows), std::move(store), std::move(samples)};
}

}  // namespace

TEST_CASE("input-only mode runs one pass on the final endpoint") {
  const auto w = make_world(1);
  auto final = std::make_shared<CountingOracle>(w.store.exemplars());
  PipelineConfig cfg;
  cfg.mode = PipelineMode::InputOnly;
  cfg.retrieval.alpha = 0.9;  // ignored
  cfg.final = final;
  const auto records = run_dataset(w.store, cfg, w.samples);
  CHECK(final->batches == 1);
  REQUIRE(records.size() == w.samples.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    CHECK(r.status == RecordStatus::Ok);
    CHECK(r.final == *w.samples[i].gold);
    CHECK(r.pass2_retrievals.empty());
    CHECK(r.preliminary.empty());
    CHECK(r.pass1_retrievals.size() == 4);
    CHECK(final->seen[i] == r.pass1_augmented.text);
  }
}

TEST_CASE("gandr mode runs two batched passes") {
  const auto w = make_world(2);
  auto prelim = std::make_shared<CountingOracle>(w.store.exemplars());
  auto final = std::make_shared<CountingOracle>(w.store.exemplars());
  PipelineConfig cfg;
  cfg.retrieval.alpha = 0.75;
  cfg.preliminary = prelim;
  cfg.final = final;
  const auto records = run_dataset(w.store, cfg, w.samples);
  CHECK(prelim->batches == 1);
  CHECK(final->batches == 1);
  for (const auto& r : records) {
    CHECK(r.status == RecordStatus::Ok);
    CHECK(r.preliminary == *r.gold);
    CHECK_FALSE(r.preliminary_fallback);
    // Pass 1 is top-k at alpha 0, pass 2 at the configured alpha.
    RetrievalConfig first;
    CHECK(r.pass1_retrievals.size() == 4);
    const auto p1 = retrieve_topk(w.store, Query{r.query, {}, {}}, first);
    for (std::size_t i = 0; i < p1.size(); ++i) CHECK(r.pass1_retrievals[i].score == p1[i]);
    RetrievalConfig second;
    second.alpha = 0.75;
    const auto p2 = retrieve_topk(w.store, Query{r.query, r.preliminary, {}}, second);
    for (std::size_t i = 0; i < p2.size(); ++i) CHECK(r.pass2_retrievals[i].score == p2[i]);
    CHECK(r.final_retrievals() == r.pass2_retrievals);
  }
}

TEST_CASE("output-only mode scores outputs alone") {
  const auto w = make_world(3);
  auto g = std::make_shared<CountingOracle>(w.store.exemplars());
  PipelineConfig cfg;
  cfg.mode = PipelineMode::OutputOnly;
  cfg.preliminary = g;
  cfg.final = g;
  const auto records = run_dataset(w.store, cfg, w.samples);
  for (const auto& r : records) {
    for (const auto& e : r.pass2_retrievals) CHECK(e.score.relevance == e.score.output_sim);
  }
}

TEST_CASE("config validation") {
  const auto w = make_world(4, 5);
  PipelineConfig cfg;
  CHECK_THROWS_AS(run_dataset(w.store, cfg, w.samples), ConfigError);
  cfg.final = std::make_shared<StaticGenerator>("[IN:A ]");
  CHECK_THROWS_AS(run_dataset(w.store, cfg, w.samples), ConfigError);
  cfg.mode = PipelineMode::InputOnly;
  CHECK_NOTHROW(run_dataset(w.store, cfg, w.samples));
}

TEST_CASE("generation failures skip the sample or abort") {
  const auto w = make_world(5, 10);
  std::vector<Exemplar> partial(w.store.exemplars().begin(), w.store.exemplars().begin() + 5);
  PipelineConfig cfg;
  cfg.preliminary = std::make_shared<CountingOracle>(partial);
  cfg.final = std::make_shared<CountingOracle>(w.store.exemplars());
  const auto records = run_dataset(w.store, cfg, w.samples);
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].status == (i < 5 ? RecordStatus::Ok : RecordStatus::GenFailed));
    if (i >= 5) CHECK_FALSE(records[i].error.empty());
  }
  cfg.failure_policy = FailurePolicy::Abort;
  CHECK_THROWS_AS(run_dataset(w.store, cfg, w.samples), GenerationError);
}

TEST_CASE("unparsable outputs") {
  const auto w = make_world(6, 10);
  PipelineConfig cfg;
  cfg.preliminary = std::make_shared<StaticGenerator>("[IN:BROKEN [SL:X");
  cfg.final = std::make_shared<StaticGenerator>("not a parse");
  cfg.retrieval.alpha = 0.5;
  const auto records = run_dataset(w.store, cfg, w.samples);
  for (const auto& r : records) {
    CHECK(r.preliminary_fallback);
    CHECK(r.status == RecordStatus::Malformed);
    CHECK(r.final == "not a parse");
    CHECK(r.pass2_retrievals.size() == 4);
  }
}

TEST_CASE("over-budget queries are recorded, not fatal") {
  std::vector<Exemplar> ex{make_exemplar(0, "a b c d e f", "[IN:A ]"), make_exemplar(1, "a", "[IN:B ]")};
  const auto store = ExemplarStore::build(ex);
  const auto samples = samples_from(store.exemplars());
  PipelineConfig cfg;
  cfg.mode = PipelineMode::InputOnly;
  cfg.final = std::make_shared<StaticGenerator>("[IN:A ]");
  cfg.budget = 3;
  const auto records = run_dataset(store, cfg, samples);
  CHECK(records[0].status == RecordStatus::OverBudget);
  CHECK(records[1].status == RecordStatus::Ok);
  CHECK(records[1].pass1_augmented.truncated);
  cfg.failure_policy = FailurePolicy::Abort;
  CHECK_THROWS_AS(run_dataset(store, cfg, samples), QueryExceedsBudget);
}

TEST_CASE("results do not depend on the thread count") {
  const auto w = make_world(7, 60);
  auto g = std::make_shared<CountingOracle>(w.store.exemplars());
  PipelineConfig cfg;
  cfg.preliminary = g;
  cfg.final = g;
  cfg.retrieval.alpha = 0.5;
  cfg.retrieval.mode = RetrievalMode::GeometricSample;
  cfg.retrieval.seed = 12;
  const int before = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = run_dataset(w.store, cfg, w.samples);
  omp_set_num_threads(4);
  const auto four = run_dataset(w.store, cfg, w.samples);
  omp_set_num_threads(before);
  CHECK(one == four);
  cfg.retrieval.seed = 13;
  CHECK_FALSE(run_dataset(w.store, cfg, w.samples) == one);
}

TEST_CASE("gold output side for analysis") {
  const auto w = make_world(8, 20);
  PipelineConfig cfg;
  cfg.preliminary = std::make_shared<StaticGenerator>("[IN:NOTHING_LIKE_IT ]");
  cfg.final = std::make_shared<StaticGenerator>("[IN:A ]");
  cfg.retrieval.alpha = 1.0;
  cfg.gold_output_side = true;
  const auto records = run_dataset(w.store, cfg, w.samples);
  for (const auto& r : records) CHECK(r.pass2_retrievals[0].score.output_sim == doctest::Approx(1.0));
}

TEST_CASE("run_sample equals one row of run_dataset") {
  const auto w = make_world(9, 15);
  auto g = std::make_shared<CountingOracle>(w.store.exemplars());
  PipelineConfig cfg;
  cfg.preliminary = g;
  cfg.final = g;
  const auto all = run_dataset(w.store, cfg, w.samples);
  CHECK(run_sample(w.store, cfg, w.samples[3]) == all[3]);
}

TEST_CASE("stage-1 training data is leave-one-out geometric sampling") {
  const auto w = make_world(10, 30);
  TrainingEmitOptions opts;
  opts.retrieval.k = 3;
  opts.retrieval.p = 0.5;
  opts.retrieval.seed = 1;
  const auto result = emit_training_data(w.store, opts);
  REQUIRE(result.examples.size() == 30);
  CHECK(result.skipped == 0);
  for (const auto& ex : result.examples) {
    CHECK(ex.exemplar_ids.size() == 3);
    for (auto id : ex.exemplar_ids) CHECK(id != ex.id);
    CHECK(ex.target == w.store.find(ex.id)->output);
    CHECK(ex.input.rfind(w.store.find(ex.id)->input + " || ", 0) == 0);
  }
  CHECK(emit_training_data(w.store, opts).examples.front().input == result.examples.front().input);
}

TEST_CASE("stage-2 training data uses preliminary predictions") {
  const auto w = make_world(11, 30);
  TrainingEmitOptions opts;
  opts.stage = 2;
  opts.retrieval.alpha = 0.75;
  CHECK_THROWS_AS(emit_training_data(w.store, opts), ConfigError);
  auto g = std::make_shared<CountingOracle>(w.store.exemplars());
  opts.preliminary = g;
  const auto result = emit_training_data(w.store, opts);
  CHECK(result.examples.size() == 30);
  CHECK(g->batches == 1);
  opts.stage = 3;
  CHECK_THROWS_AS(emit_training_data(w.store, opts), ConfigError);
}
