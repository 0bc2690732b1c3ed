#include "gandr/pipeline.hpp"

#include <exception>

#include "gandr/error.hpp"

namespace gandr {

std::string to_string(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::InputOnly:
      return "input-only";
    case PipelineMode::GandR:
      return "gandr";
    case PipelineMode::OutputOnly:
      return "output-only";
  }
  return "";
}

PipelineMode parse_pipeline_mode(const std::string& text) {
  if (text == "input-only") return PipelineMode::InputOnly;
  if (text == "gandr") return PipelineMode::GandR;
  if (text == "output-only") return PipelineMode::OutputOnly;
  throw ConfigError("unknown mode '" + text + "' (input-only, gandr, output-only)");
}

std::string to_string(RecordStatus status) {
  switch (status) {
    case RecordStatus::Ok:
      return "ok";
    case RecordStatus::GenFailed:
      return "gen_failed";
    case RecordStatus::Malformed:
      return "malformed";
    case RecordStatus::OverBudget:
      return "over_budget";
  }
  return "";
}

RecordStatus parse_record_status(const std::string& text) {
  if (text == "ok") return RecordStatus::Ok;
  if (text == "gen_failed") return RecordStatus::GenFailed;
  if (text == "malformed") return RecordStatus::Malformed;
  if (text == "over_budget") return RecordStatus::OverBudget;
  throw CorruptFile("unknown record status '" + text + "'");
}

double PipelineConfig::effective_alpha() const {
  switch (mode) {
    case PipelineMode::InputOnly:
      return 0.0;
    case PipelineMode::OutputOnly:
      return 1.0;
    case PipelineMode::GandR:
      break;
  }
  return retrieval.alpha;
}

void PipelineConfig::validate() const {
  retrieval.validate();
  if (!final) throw ConfigError("pipeline needs a final endpoint");
  if (mode != PipelineMode::InputOnly && !preliminary) {
    throw ConfigError(to_string(mode) + " mode needs a preliminary endpoint");
  }
}

Sample sample_from(const Exemplar& exemplar) {
  return Sample{exemplar.id, exemplar.input, exemplar.output, exemplar.domain};
}

std::vector<Sample> samples_from(std::span<const Exemplar> exemplars) {
  std::vector<Sample> out;
  out.reserve(exemplars.size());
  for (const auto& ex : exemplars) out.push_back(sample_from(ex));
  return out;
}

namespace {

struct PreparedPass {
  std::vector<RetrievalEntry> retrievals;
  AugmentedInput augmented;
};

PreparedPass prepare_pass(const ExemplarStore& store, const Query& query,
                          const RetrievalConfig& retrieval, std::size_t budget,
                          const TokenCounter& count_tokens, Rng* rng) {
  const auto scored = retrieval.mode == RetrievalMode::TopK
                          ? retrieve_topk(store, query, retrieval)
                          : retrieve_sampled(store, query, retrieval, *rng);
  PreparedPass pass;
  std::vector<const Exemplar*> exemplars;
  exemplars.reserve(scored.size());
  for (const auto& s : scored) {
    const Exemplar* ex = store.find(s.exemplar_id);
    exemplars.push_back(ex);
    pass.retrievals.push_back({s, ex->input, ex->output});
  }
  AugmentOptions augment{budget, count_tokens ? count_tokens : TokenCounter(count_whitespace_tokens)};
  pass.augmented = build_augmented_input(query.input, exemplars, augment);
  return pass;
}

bool pending(const PredictionRecord& r) { return r.status == RecordStatus::Ok; }

// Runs fn(i) for every index in parallel, collecting the first exception by
// index order and rethrowing it after the loop.
template <typename Fn>
void parallel_for_each(std::size_t n, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (long long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void prepare_into(PredictionRecord& record, const ExemplarStore& store, const PipelineConfig& config,
                  const Query& query, const RetrievalConfig& retrieval, Rng* rng, bool second_pass) {
  try {
    auto pass = prepare_pass(store, query, retrieval, config.budget, config.count_tokens, rng);
    if (second_pass) {
      record.pass2_retrievals = std::move(pass.retrievals);
      record.pass2_augmented = std::move(pass.augmented);
    } else {
      record.pass1_retrievals = std::move(pass.retrievals);
      record.pass1_augmented = std::move(pass.augmented);
    }
  } catch (const QueryExceedsBudget& e) {
    if (config.failure_policy == FailurePolicy::Abort) throw;
    record.status = RecordStatus::OverBudget;
    record.error = e.what();
  }
}

// Generates for every still-pending record; returns outputs aligned with
// records (empty for non-pending or failed ones).
std::vector<std::string> generate_phase(Generator& generator, std::vector<PredictionRecord>& records,
                                        const PipelineConfig& config, bool second_pass) {
  std::vector<std::size_t> idx;
  std::vector<std::string> inputs;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!pending(records[i])) continue;
    idx.push_back(i);
    inputs.push_back(second_pass ? records[i].pass2_augmented.text : records[i].pass1_augmented.text);
  }
  std::vector<std::string> outputs(records.size());
  if (inputs.empty()) return outputs;
  auto response = generator.generate(inputs);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    auto& item = response.items[j];
    auto& record = records[idx[j]];
    if (item.ok()) {
      outputs[idx[j]] = std::move(*item.output);
      continue;
    }
    if (config.failure_policy == FailurePolicy::Abort) throw GenerationError(*item.failure);
    record.status = RecordStatus::GenFailed;
    record.error = GenerationError(*item.failure).what();
  }
  return outputs;
}

void finish(PredictionRecord& record, std::string final, const ParseOptions& parse) {
  if (!pending(record)) return;
  record.final = std::move(final);
  if (!try_parse_top(record.final, parse)) record.status = RecordStatus::Malformed;
}

}  // namespace

std::vector<PredictionRecord> run_dataset(const ExemplarStore& store, const PipelineConfig& config,
                                          std::span<const Sample> samples) {
  config.validate();
  const std::size_t n = samples.size();
  std::vector<PredictionRecord> records(n);
  if (n == 0) return records;

  RetrievalConfig first = config.retrieval;
  first.alpha = 0.0;
  first.mode = RetrievalMode::TopK;

  parallel_for_each(n, [&](std::size_t i) {
    const auto& sample = samples[i];
    auto& record = records[i];
    record.sample_id = sample.id;
    record.query = sample.query;
    record.gold = sample.gold;
    record.domain = sample.domain;
    prepare_into(record, store, config, Query{sample.query, std::nullopt, sample.id}, first,
                 nullptr, false);
  });

  const auto& parse = store.options().parse;
  if (config.mode == PipelineMode::InputOnly) {
    auto finals = generate_phase(*config.final, records, config, false);
    for (std::size_t i = 0; i < n; ++i) finish(records[i], std::move(finals[i]), parse);
    return records;
  }

  auto preliminaries = generate_phase(*config.preliminary, records, config, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (!pending(records[i])) continue;
    records[i].preliminary = std::move(preliminaries[i]);
    records[i].preliminary_fallback = !try_parse_top(records[i].preliminary, parse);
  }

  RetrievalConfig second = config.retrieval;
  second.alpha = config.effective_alpha();
  parallel_for_each(n, [&](std::size_t i) {
    auto& record = records[i];
    if (!pending(record)) return;
    Query query{record.query, record.preliminary, record.sample_id};
    if (config.gold_output_side) query.prediction = record.gold;
    Rng rng(Rng::derive(second.seed, static_cast<std::uint64_t>(record.sample_id)));
    prepare_into(record, store, config, query, second, &rng, true);
  });

  auto finals = generate_phase(*config.final, records, config, true);
  for (std::size_t i = 0; i < n; ++i) finish(records[i], std::move(finals[i]), parse);
  return records;
}

PredictionRecord run_sample(const ExemplarStore& store, const PipelineConfig& config,
                            const Sample& sample) {
  return std::move(run_dataset(store, config, std::span<const Sample>(&sample, 1)).front());
}

TrainingEmitResult emit_training_data(const ExemplarStore& store, const TrainingEmitOptions& options) {
  if (options.stage != 1 && options.stage != 2) throw ConfigError("stage must be 1 or 2");
  if (options.stage == 2 && !options.preliminary) {
    throw ConfigError("stage 2 needs a preliminary endpoint");
  }
  RetrievalConfig sampled = options.retrieval;
  sampled.mode = RetrievalMode::GeometricSample;
  sampled.exclude_self = true;
  sampled.validate();
  if (options.stage == 1) sampled.alpha = 0.0;

  const std::size_t n = store.size();
  std::vector<std::optional<TrainingExample>> examples(n);
  std::vector<std::string> predictions(n);
  std::vector<char> usable(n, 1);
  const TokenCounter counter = count_whitespace_tokens;

  auto emit = [&](std::size_t i, const Query& query, const RetrievalConfig& retrieval,
                  std::uint64_t stream) {
    const auto& ex = store.at(i);
    Rng rng(Rng::derive(retrieval.seed, stream));
    try {
      auto pass = prepare_pass(store, query, retrieval, options.budget, counter, &rng);
      TrainingExample out{ex.id, std::move(pass.augmented.text), ex.output,
                          std::move(pass.augmented.exemplar_ids)};
      examples[i] = std::move(out);
    } catch (const QueryExceedsBudget&) {
      usable[i] = 0;
    }
  };

  if (options.stage == 2) {
    RetrievalConfig first = sampled;
    first.alpha = 0.0;
    if (!options.sample_preliminary) first.mode = RetrievalMode::TopK;
    std::vector<std::string> inputs(n);
    parallel_for_each(n, [&](std::size_t i) {
      const auto& ex = store.at(i);
      Rng rng(Rng::derive(first.seed ^ 0x5354414745320000ULL, static_cast<std::uint64_t>(ex.id)));
      try {
        inputs[i] = prepare_pass(store, Query{ex.input, std::nullopt, ex.id}, first, options.budget,
                                 counter, &rng)
                        .augmented.text;
      } catch (const QueryExceedsBudget&) {
        usable[i] = 0;
      }
    });
    std::vector<std::size_t> idx;
    std::vector<std::string> batch;
    for (std::size_t i = 0; i < n; ++i) {
      if (!usable[i]) continue;
      idx.push_back(i);
      batch.push_back(std::move(inputs[i]));
    }
    auto response = options.preliminary->generate(batch);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      if (response.items[j].ok()) {
        predictions[idx[j]] = std::move(*response.items[j].output);
      } else {
        usable[idx[j]] = 0;
      }
    }
  }

  parallel_for_each(n, [&](std::size_t i) {
    if (!usable[i]) return;
    const auto& ex = store.at(i);
    Query query{ex.input, std::nullopt, ex.id};
    if (options.stage == 2) query.prediction = predictions[i];
    emit(i, query, sampled, static_cast<std::uint64_t>(ex.id));
  });

  TrainingEmitResult result;
  for (auto& e : examples) {
    if (e) {
      result.examples.push_back(std::move(*e));
    } else {
      ++result.skipped;
    }
  }
  return result;
}

}  // namespace gandr
