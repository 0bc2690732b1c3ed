#include "cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "gandr/data_io.hpp"
#include "gandr/error.hpp"
#include "gandr/evaluation.hpp"
#include "gandr/generator.hpp"
#include "gandr/pipeline.hpp"
#include "gandr/records.hpp"
#include "gandr/retrieval.hpp"

namespace gandr::cli {

using nlohmann::ordered_json;

namespace {

struct DatasetFlags {
  std::string path;
  std::string format = "auto";
  std::string utterance_col;
  std::string parse_col;
  std::string domain_col;
  bool header = false;
  std::string split = "full";
  std::uint64_t split_seed = 0;
  bool strict = false;
  std::string intent_prefix = "IN:";
  std::string slot_prefix = "SL:";
};

void add_dataset_flags(CLI::App* app, DatasetFlags& d, const std::string& path_flag, bool required) {
  auto* opt = app->add_option(path_flag, d.path, "Dataset file (TSV or JSONL)");
  if (required) opt->required();
  app->add_option("--format", d.format, "auto, tsv or jsonl")
      ->check(CLI::IsMember({"auto", "tsv", "jsonl"}))
      ->capture_default_str();
  app->add_option("--utterance-col", d.utterance_col, "Utterance column index, header name or JSON field");
  app->add_option("--parse-col", d.parse_col, "Parse column index, header name or JSON field");
  app->add_option("--domain-col", d.domain_col, "Domain column index, header name or JSON field");
  app->add_flag("--header", d.header, "TSV has a header row");
  app->add_option("--split", d.split, "full, count:<n> or fraction:<f>")->capture_default_str();
  app->add_option("--split-seed", d.split_seed, "Seed of the split sampler")->capture_default_str();
  app->add_flag("--strict", d.strict, "Fail on the first malformed row");
  app->add_option("--intent-prefix", d.intent_prefix)->capture_default_str();
  app->add_option("--slot-prefix", d.slot_prefix)->capture_default_str();
}

DatasetSpec spec_of(const DatasetFlags& d) {
  DatasetSpec spec;
  spec.format = d.format == "auto"    ? format_for(d.path)
                : d.format == "jsonl" ? DatasetFormat::JSONL
                                      : DatasetFormat::TSV;
  spec.utterance_column = d.utterance_col;
  spec.parse_column = d.parse_col;
  spec.domain_column = d.domain_col;
  spec.header = d.header;
  spec.parse.intent_prefix = d.intent_prefix;
  spec.parse.slot_prefix = d.slot_prefix;
  return spec;
}

ordered_json echo(const DatasetFlags& d) {
  ordered_json j;
  j["path"] = d.path;
  j["format"] = d.format;
  j["utterance_col"] = d.utterance_col;
  j["parse_col"] = d.parse_col;
  j["domain_col"] = d.domain_col;
  j["header"] = d.header;
  j["split"] = SplitSpec::parse(d.split, d.split_seed).to_string();
  j["split_seed"] = d.split_seed;
  j["strict"] = d.strict;
  j["intent_prefix"] = d.intent_prefix;
  j["slot_prefix"] = d.slot_prefix;
  return j;
}

std::vector<Exemplar> load(const DatasetFlags& d, std::ostream& err) {
  const auto spec = spec_of(d);
  std::vector<Exemplar> exemplars;
  if (d.strict) {
    exemplars = load_file_strict(d.path, spec);
  } else {
    auto result = load_file(d.path, spec);
    const std::size_t shown = std::min<std::size_t>(result.issues.size(), 10);
    for (std::size_t i = 0; i < shown; ++i) {
      err << d.path << ":" << result.issues[i].line << ": skipped: " << result.issues[i].message << "\n";
    }
    if (result.issues.size() > shown) {
      err << d.path << ": " << (result.issues.size() - shown) << " more rows skipped\n";
    }
    exemplars = std::move(result.exemplars);
  }
  return make_split(exemplars, SplitSpec::parse(d.split, d.split_seed));
}

struct EndpointFlags {
  std::string preliminary_url;
  std::string final_url;
  long long timeout_ms = 30000;
  std::size_t max_batch = 32;
  std::size_t retries = 2;
  std::string record_preliminary;
  std::string record_final;
};

void add_endpoint_flags(CLI::App* app, EndpointFlags& e, bool with_final) {
  app->add_option("--preliminary-url", e.preliminary_url,
                  "Preliminary endpoint: http://..., replay:<log>, oracle:<dataset> or static:<text>")
      ->envname("GANDR_PRELIMINARY_URL");
  if (with_final) {
    app->add_option("--final-url", e.final_url, "Final endpoint, same forms as --preliminary-url")
        ->envname("GANDR_FINAL_URL");
  }
  app->add_option("--timeout-ms", e.timeout_ms, "Per-request timeout of remote endpoints")
      ->envname("GANDR_TIMEOUT_MS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--max-batch", e.max_batch, "Inputs per remote request")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--retries", e.retries, "Retries of a failed remote request")->capture_default_str();
  app->add_option("--record-preliminary", e.record_preliminary,
                  "Write preliminary generations to a replay log");
  if (with_final) {
    app->add_option("--record-final", e.record_final, "Write final generations to a replay log");
  }
}

std::shared_ptr<Generator> make_endpoint(const std::string& url, const EndpointFlags& e,
                                         std::size_t jobs, const std::string& record) {
  auto endpoint = parse_endpoint(url);
  endpoint.timeout = std::chrono::milliseconds(e.timeout_ms);
  endpoint.max_batch = e.max_batch;
  endpoint.retry.retries = e.retries;
  if (jobs > 0) endpoint.max_in_flight = jobs;
  auto generator = make_generator(endpoint);
  if (!record.empty()) generator = std::make_shared<RecordingGenerator>(generator, record);
  return generator;
}

void set_jobs(std::size_t jobs) {
  if (jobs > 0) omp_set_num_threads(static_cast<int>(jobs));
}

RetrievalMode parse_retrieval_mode(const std::string& text) {
  if (text == "topk") return RetrievalMode::TopK;
  if (text == "sample") return RetrievalMode::GeometricSample;
  throw ConfigError("unknown retrieval mode '" + text + "' (topk, sample)");
}

FailurePolicy parse_failure_policy(const std::string& text) {
  if (text == "skip") return FailurePolicy::SkipSample;
  if (text == "abort") return FailurePolicy::Abort;
  throw ConfigError("unknown failure policy '" + text + "' (skip, abort)");
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Flags shared by run and sweep.
struct RunFlags {
  std::string store;
  DatasetFlags data;
  double alpha = 0.75;
  std::size_t k = 4;
  double p = 0.5;
  std::string mode = "gandr";
  std::string retrieval = "topk";
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  bool exclude_self = false;
  std::string failure_policy = "skip";
  std::size_t jobs = 0;
  EndpointFlags endpoints;
  CLI::Option* alpha_opt = nullptr;
};

void add_run_flags(CLI::App* app, RunFlags& r) {
  app->add_option("--store", r.store, "Store built by 'index'")->required();
  add_dataset_flags(app, r.data, "--data", true);
  r.alpha_opt = app->add_option("--alpha", r.alpha, "Output-similarity weight (gandr mode)")
                    ->check(CLI::Range(0.0, 1.0))
                    ->capture_default_str();
  app->add_option("--k", r.k, "Exemplars per augmented input")
      ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()).name("k >= 1"))
      ->capture_default_str();
  app->add_option("--p", r.p, "Geometric sampling parameter")->capture_default_str();
  app->add_option("--mode", r.mode, "input-only, gandr or output-only")
      ->check(CLI::IsMember({"input-only", "gandr", "output-only"}))
      ->capture_default_str();
  app->add_option("--retrieval", r.retrieval, "Pass-2 retrieval: topk or sample")
      ->check(CLI::IsMember({"topk", "sample"}))
      ->capture_default_str();
  app->add_option("--seed", r.seed, "Sampling seed")->capture_default_str();
  app->add_option("--budget", r.budget, "Token budget of augmented inputs (0 = unlimited)")
      ->capture_default_str();
  app->add_flag("--exclude-self", r.exclude_self, "Never retrieve the query's own id (leave-one-out)");
  app->add_option("--failure-policy", r.failure_policy, "skip or abort")
      ->check(CLI::IsMember({"skip", "abort"}))
      ->capture_default_str();
  app->add_option("--jobs", r.jobs, "Worker threads (0 = runtime default)")->capture_default_str();
  add_endpoint_flags(app, r.endpoints, true);
}

struct PreparedRun {
  ExemplarStore store;
  std::vector<Sample> samples;
  PipelineConfig config;
  ordered_json echo;
};

PreparedRun prepare_run(const RunFlags& r, std::ostream& err) {
  const auto mode = parse_pipeline_mode(r.mode);
  if (mode != PipelineMode::GandR && r.alpha_opt->count() > 0) {
    throw ConfigError("--alpha is not allowed in " + r.mode + " mode");
  }
  PipelineConfig config;
  config.mode = mode;
  config.retrieval.alpha = r.alpha;
  config.retrieval.k = r.k;
  config.retrieval.p = r.p;
  config.retrieval.mode = parse_retrieval_mode(r.retrieval);
  config.retrieval.seed = r.seed;
  config.retrieval.exclude_self = r.exclude_self;
  config.retrieval.validate();
  if (r.budget > 0) config.budget = r.budget;
  config.failure_policy = parse_failure_policy(r.failure_policy);
  if (r.endpoints.final_url.empty()) throw ConfigError("--final-url is required");
  if (mode != PipelineMode::InputOnly && r.endpoints.preliminary_url.empty()) {
    throw ConfigError("--preliminary-url is required in " + r.mode + " mode");
  }

  ordered_json echo;
  echo["store"] = r.store;
  echo["data"] = cli::echo(r.data);
  echo["mode"] = r.mode;
  echo["alpha"] = config.effective_alpha();
  echo["k"] = r.k;
  echo["p"] = r.p;
  echo["retrieval"] = r.retrieval;
  echo["seed"] = r.seed;
  echo["budget"] = r.budget;
  echo["exclude_self"] = r.exclude_self;
  echo["failure_policy"] = r.failure_policy;
  echo["preliminary"] = mode == PipelineMode::InputOnly ? ordered_json(nullptr)
                                                        : ordered_json(r.endpoints.preliminary_url);
  echo["final"] = r.endpoints.final_url;
  echo["timeout_ms"] = r.endpoints.timeout_ms;
  echo["max_batch"] = r.endpoints.max_batch;
  echo["retries"] = r.endpoints.retries;

  set_jobs(r.jobs);
  auto store = load_store(r.store);
  auto samples = samples_from(load(r.data, err));
  if (mode != PipelineMode::InputOnly) {
    config.preliminary =
        make_endpoint(r.endpoints.preliminary_url, r.endpoints, r.jobs, r.endpoints.record_preliminary);
  }
  config.final = make_endpoint(r.endpoints.final_url, r.endpoints, r.jobs, r.endpoints.record_final);
  return PreparedRun{std::move(store), std::move(samples), std::move(config), std::move(echo)};
}

bool all_gold(const std::vector<PredictionRecord>& records) {
  return !records.empty() && std::all_of(records.begin(), records.end(),
                                         [](const PredictionRecord& r) { return r.gold.has_value(); });
}

void print_retrievals(std::ostream& out, const std::vector<RetrievalEntry>& entries) {
  if (entries.empty()) {
    out << "  (none)\n";
    return;
  }
  out << "  rank  id        relevance  input_sim  output_sim\n";
  for (const auto& e : entries) {
    char line[128];
    std::snprintf(line, sizeof line, "  %4zu  %-8lld  %9.4f  %9.4f  %10.4f\n", e.score.rank,
                  e.score.exemplar_id, e.score.relevance, e.score.input_sim, e.score.output_sim);
    out << line << "        " << e.input << "  =>  " << e.output << "\n";
  }
}

// Subcommands.

int cmd_index(const DatasetFlags& d, const std::string& out_path, bool sublinear, std::ostream& out,
              std::ostream& err) {
  ordered_json config;
  config["command"] = "index";
  config["train"] = echo(d);
  config["tf"] = sublinear ? "sublinear" : "raw";
  auto exemplars = load(d, err);
  StoreOptions options;
  options.parse = spec_of(d).parse;
  if (sublinear) {
    options.input_weighting.tf = TermFrequency::Sublinear;
    options.output_weighting.tf = TermFrequency::Sublinear;
  }
  const auto store = ExemplarStore::build(std::move(exemplars), options);
  save_store(store, out_path, config);
  out << "indexed " << store.size() << " exemplars, " << store.input_index().vocabulary().size()
      << " input terms, " << store.output_index().vocabulary().size() << " structure terms -> "
      << out_path << "\n";
  return kExitOk;
}

struct RetrieveFlags {
  std::string store;
  std::string query;
  std::string prediction;
  double alpha = 0.0;
  std::size_t k = 4;
  double p = 0.5;
  std::string retrieval = "topk";
  std::uint64_t seed = 0;
  bool json = false;
};

int cmd_retrieve(const RetrieveFlags& f, std::ostream& out) {
  RetrievalConfig config;
  config.alpha = f.alpha;
  config.k = f.k;
  config.p = f.p;
  config.mode = parse_retrieval_mode(f.retrieval);
  config.seed = f.seed;
  config.validate();
  const auto store = load_store(f.store);
  Query query{f.query, std::nullopt, std::nullopt};
  if (!f.prediction.empty()) query.prediction = f.prediction;
  const auto results = retrieve(store, query, config);
  if (f.json) {
    ordered_json j;
    j["config"] = {{"store", f.store},   {"query", f.query},    {"prediction", f.prediction},
                   {"alpha", f.alpha},   {"k", f.k},            {"p", f.p},
                   {"retrieval", f.retrieval}, {"seed", f.seed}};
    ordered_json list = ordered_json::array();
    for (const auto& s : results) {
      const auto* ex = store.find(s.exemplar_id);
      list.push_back({{"exemplar_id", s.exemplar_id},
                      {"relevance", s.relevance},
                      {"input_sim", s.input_sim},
                      {"output_sim", s.output_sim},
                      {"rank", s.rank},
                      {"input", ex->input},
                      {"output", ex->output}});
    }
    j["results"] = list;
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  std::vector<RetrievalEntry> entries;
  for (const auto& s : results) {
    const auto* ex = store.find(s.exemplar_id);
    entries.push_back({s, ex->input, ex->output});
  }
  out << "query: " << f.query << "\n";
  print_retrievals(out, entries);
  return kExitOk;
}

int cmd_run(const RunFlags& r, const std::string& out_path, std::ostream& out, std::ostream& err) {
  auto run = prepare_run(r, err);
  ordered_json echo{{"command", "run"}};
  echo.update(run.echo);
  const auto records = run_dataset(run.store, run.config, run.samples);
  save_records(out_path, echo, records);
  std::size_t failed = 0;
  for (const auto& rec : records) failed += rec.status != RecordStatus::Ok;
  out << "wrote " << records.size() << " records (" << failed << " not ok) -> " << out_path << "\n";
  if (all_gold(records)) {
    EvalOptions eval;
    eval.k = r.k;
    print_report(out, evaluate(records, eval));
  }
  return kExitOk;
}

struct EvalFlags {
  std::string records;
  std::size_t k = 0;
  std::string semantics = "multiset";
  bool case_insensitive = false;
  std::string json_out;
};

int cmd_eval(const EvalFlags& f, std::ostream& out) {
  const auto file = load_records(f.records);
  EvalOptions options;
  options.k = f.k > 0 ? f.k : file.config.value("k", std::size_t{4});
  options.semantics = f.semantics == "set" ? TemplateSemantics::Set : TemplateSemantics::Multiset;
  options.case_insensitive = f.case_insensitive;
  auto report = evaluate(file.records, options);
  report.config["records"] = f.records;
  report.config["run"] = file.config;
  print_report(out, report);
  const bool has_pass2 = std::any_of(file.records.begin(), file.records.end(),
                                     [](const PredictionRecord& r) { return !r.pass2_retrievals.empty(); });
  out << "pass-1 template recall@" << options.k << "  "
      << fmt(template_recall_at_k(file.records, 1, options.k, options.semantics), 2) << "\n";
  if (has_pass2) {
    out << "pass-2 template recall@" << options.k << "  "
        << fmt(template_recall_at_k(file.records, 2, options.k, options.semantics), 2) << "\n";
  }
  if (!f.json_out.empty()) {
    write_file_atomic(f.json_out, [&](std::ostream& o) { o << to_json(report).dump(2) << "\n"; });
  }
  return kExitOk;
}

struct SweepFlags {
  RunFlags run;
  std::string axis = "alpha";
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  std::size_t eval_k = 4;
  std::string out;
  std::string summary_out;
};

int cmd_sweep(const SweepFlags& f, std::ostream& out, std::ostream& err) {
  const auto axis = parse_sweep_axis(f.axis);
  if (axis == SweepAxis::Alpha && parse_pipeline_mode(f.run.mode) != PipelineMode::GandR) {
    throw ConfigError("an alpha sweep needs gandr mode");
  }
  auto run = prepare_run(f.run, err);
  std::vector<std::uint64_t> seeds = f.seeds.empty() ? std::vector<std::uint64_t>{f.run.seed} : f.seeds;
  EvalOptions eval;
  eval.k = f.eval_k;
  const auto result = sweep(run.store, run.samples, run.config, axis, f.values, seeds, eval);

  ordered_json echo{{"command", "sweep"}, {"axis", f.axis}, {"values", f.values}, {"seeds", seeds},
                    {"eval_k", f.eval_k}};
  echo.update(run.echo);
  echo.erase("seed");
  if (axis == SweepAxis::Alpha) echo.erase("alpha");
  if (axis == SweepAxis::K) echo.erase("k");
  const std::string comment = "# " + echo.dump() + "\n";
  write_file_atomic(f.out, [&](std::ostream& o) {
    o << comment;
    write_sweep_tsv(o, result);
  });
  if (!f.summary_out.empty()) {
    write_file_atomic(f.summary_out, [&](std::ostream& o) {
      o << comment;
      write_sweep_summary(o, result);
    });
  }
  write_sweep_summary(out, result);
  return kExitOk;
}

struct EmitFlags {
  std::string store;
  int stage = 1;
  double alpha = 0.75;
  std::size_t k = 4;
  double p = 0.5;
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  bool sample_preliminary = false;
  std::size_t jobs = 0;
  EndpointFlags endpoints;
  std::string out;
};

int cmd_emit(const EmitFlags& f, std::ostream& out) {
  TrainingEmitOptions options;
  options.stage = f.stage;
  options.retrieval.alpha = f.alpha;
  options.retrieval.k = f.k;
  options.retrieval.p = f.p;
  options.retrieval.seed = f.seed;
  if (f.budget > 0) options.budget = f.budget;
  options.sample_preliminary = f.sample_preliminary;
  if (f.stage == 2) {
    if (f.endpoints.preliminary_url.empty()) throw ConfigError("stage 2 needs --preliminary-url");
  }
  ordered_json echo{{"command", "emit-train"},
                    {"store", f.store},
                    {"stage", f.stage},
                    {"alpha", f.stage == 1 ? 0.0 : f.alpha},
                    {"k", f.k},
                    {"p", f.p},
                    {"seed", f.seed},
                    {"budget", f.budget},
                    {"sample_preliminary", f.sample_preliminary},
                    {"preliminary", f.stage == 2 ? ordered_json(f.endpoints.preliminary_url)
                                                 : ordered_json(nullptr)}};
  set_jobs(f.jobs);
  const auto store = load_store(f.store);
  if (f.stage == 2) {
    options.preliminary =
        make_endpoint(f.endpoints.preliminary_url, f.endpoints, f.jobs, f.endpoints.record_preliminary);
  }
  const auto result = emit_training_data(store, options);
  write_file_atomic(f.out, [&](std::ostream& o) {
    o << ordered_json{{"gandr_training", 1}, {"config", echo}}.dump() << "\n";
    for (const auto& ex : result.examples) {
      o << ordered_json{{"id", ex.id},
                        {"input", ex.input},
                        {"target", ex.target},
                        {"exemplar_ids", ex.exemplar_ids}}
               .dump()
        << "\n";
    }
  });
  out << "wrote " << result.examples.size() << " training examples (" << result.skipped
      << " skipped) -> " << f.out << "\n";
  return kExitOk;
}

int cmd_trace(const std::string& records_path, long long sample_id, std::ostream& out) {
  const auto file = load_records(records_path);
  const PredictionRecord* record = nullptr;
  for (const auto& r : file.records) {
    if (r.sample_id == sample_id) {
      record = &r;
      break;
    }
  }
  if (!record) throw NotFound("no sample " + std::to_string(sample_id) + " in " + records_path);
  const auto mode = file.config.value("mode", std::string("gandr"));
  out << "sample " << record->sample_id;
  if (record->domain) out << "  (" << *record->domain << ")";
  out << "\nquery:       " << record->query << "\n";
  if (record->gold) out << "gold:        " << *record->gold << "\n";
  out << "\npass 1 retrieval (input similarity)\n";
  print_retrievals(out, record->pass1_retrievals);
  if (mode != "input-only") {
    out << "preliminary: " << record->preliminary;
    if (record->preliminary_fallback) out << "  (unparsable, structure labels scanned)";
    out << "\n\npass 2 retrieval (alpha " << file.config.value("alpha", 0.0) << ")\n";
    print_retrievals(out, record->pass2_retrievals);
  }
  out << "final:       " << record->final << "\n";
  if (record->gold) {
    out << "exact match: " << (exact_match(record->final, *record->gold) ? "yes" : "no") << "\n";
  }
  out << "status:      " << to_string(record->status);
  if (!record->error.empty()) out << " (" << record->error << ")";
  out << "\n";
  return kExitOk;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exemplar retrieval and two-pass augmented generation for semantic parsing", "gandr"};
  app.set_config("--config", "", "INI/TOML file of option values ([<subcommand>] sections)");
  app.require_subcommand(1);

  auto* index = app.add_subcommand("index", "Build and save an exemplar store");
  DatasetFlags index_data;
  std::string index_out;
  bool sublinear = false;
  add_dataset_flags(index, index_data, "--train", true);
  index->add_option("--out", index_out, "Store file to write")->required();
  index->add_flag("--sublinear-tf", sublinear, "Use 1 + ln(tf) term frequencies");

  auto* retrieve_cmd = app.add_subcommand("retrieve", "Rank store exemplars for one query");
  RetrieveFlags rf;
  retrieve_cmd->add_option("--store", rf.store)->required();
  retrieve_cmd->add_option("--query", rf.query)->required();
  retrieve_cmd->add_option("--prediction", rf.prediction, "Output-side query (a parse)");
  retrieve_cmd->add_option("--alpha", rf.alpha)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  retrieve_cmd->add_option("--k", rf.k)->check(CLI::PositiveNumber)->capture_default_str();
  retrieve_cmd->add_option("--p", rf.p)->capture_default_str();
  retrieve_cmd->add_option("--retrieval", rf.retrieval)
      ->check(CLI::IsMember({"topk", "sample"}))
      ->capture_default_str();
  retrieve_cmd->add_option("--seed", rf.seed)->capture_default_str();
  retrieve_cmd->add_flag("--json", rf.json, "Print JSON");

  auto* run_cmd = app.add_subcommand("run", "Run the pipeline over a dataset");
  RunFlags run_flags;
  std::string run_out;
  add_run_flags(run_cmd, run_flags);
  run_cmd->add_option("--out", run_out, "Records file to write")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Score a records file");
  EvalFlags ef;
  eval_cmd->add_option("--records", ef.records)->required();
  eval_cmd->add_option("--k", ef.k, "Template recall cutoff (default: the run's k)");
  eval_cmd->add_option("--semantics", ef.semantics, "Template comparison: multiset or set")
      ->check(CLI::IsMember({"multiset", "set"}))
      ->capture_default_str();
  eval_cmd->add_flag("--case-insensitive", ef.case_insensitive);
  eval_cmd->add_option("--json", ef.json_out, "Also write the report as JSON");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run the pipeline over a grid of alpha or k");
  SweepFlags sf;
  add_run_flags(sweep_cmd, sf.run);
  sweep_cmd->add_option("--axis", sf.axis, "alpha or k")
      ->check(CLI::IsMember({"alpha", "k"}))
      ->capture_default_str();
  sweep_cmd->add_option("--values", sf.values, "Grid values, comma separated")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--seeds", sf.seeds, "Seeds, comma separated (default: --seed)")->delimiter(',');
  sweep_cmd->add_option("--eval-k", sf.eval_k, "Template recall cutoff on the alpha axis")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep_cmd->add_option("--out", sf.out, "Per-cell TSV to write")->required();
  sweep_cmd->add_option("--summary-out", sf.summary_out, "Per-value mean/stddev TSV to write");

  auto* emit_cmd = app.add_subcommand("emit-train", "Write geometric-sampled training inputs");
  EmitFlags mf;
  emit_cmd->add_option("--store", mf.store)->required();
  emit_cmd->add_option("--stage", mf.stage, "1 (input similarity) or 2 (relevance with predictions)")
      ->check(CLI::IsMember({1, 2}))
      ->capture_default_str();
  emit_cmd->add_option("--alpha", mf.alpha)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  emit_cmd->add_option("--k", mf.k)->check(CLI::PositiveNumber)->capture_default_str();
  emit_cmd->add_option("--p", mf.p)->capture_default_str();
  emit_cmd->add_option("--seed", mf.seed)->capture_default_str();
  emit_cmd->add_option("--budget", mf.budget, "0 = unlimited")->capture_default_str();
  emit_cmd->add_flag("--sample-preliminary", mf.sample_preliminary,
                     "Stage 2: sample the exemplars of the preliminary pass too");
  emit_cmd->add_option("--jobs", mf.jobs)->capture_default_str();
  add_endpoint_flags(emit_cmd, mf.endpoints, false);
  emit_cmd->add_option("--out", mf.out)->required();

  auto* trace_cmd = app.add_subcommand("trace", "Show both passes of one sample");
  std::string trace_records;
  long long trace_id = 0;
  trace_cmd->add_option("--records", trace_records)->required();
  trace_cmd->add_option("--sample-id", trace_id)->required();

  std::vector<const char*> argv{"gandr"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (index->parsed()) return cmd_index(index_data, index_out, sublinear, out, err);
  if (retrieve_cmd->parsed()) return cmd_retrieve(rf, out);
  if (run_cmd->parsed()) return cmd_run(run_flags, run_out, out, err);
  if (eval_cmd->parsed()) return cmd_eval(ef, out);
  if (sweep_cmd->parsed()) return cmd_sweep(sf, out, err);
  if (emit_cmd->parsed()) return cmd_emit(mf, out);
  if (trace_cmd->parsed()) return cmd_trace(trace_records, trace_id, out);
  return kExitUsage;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const MissingPrediction& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CountExceedsCorpus& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace gandr::cli
