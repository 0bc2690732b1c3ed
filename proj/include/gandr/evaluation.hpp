#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gandr/pipeline.hpp"
#include "gandr/top_parse.hpp"

namespace gandr {

// Sequence-level match after bracket-aware whitespace normalization.
bool exact_match(std::string_view prediction, std::string_view gold, bool case_insensitive = false);

// Diagnostic only: both sides parse and the trees are structurally equal.
bool tree_match(std::string_view prediction, std::string_view gold, const ParseOptions& options = {});

// Percentage of records where one of the first min(k, available) retrievals of
// the given pass (1 or 2) has the gold parse's template. Throws MissingGold.
double template_recall_at_k(std::span<const PredictionRecord> records, int which_pass, std::size_t k,
                            TemplateSemantics semantics = TemplateSemantics::Multiset,
                            const ParseOptions& parse = {});

struct EvalOptions {
  std::size_t k = 4;
  TemplateSemantics semantics = TemplateSemantics::Multiset;
  bool case_insensitive = false;
  ParseOptions parse;
};

struct DomainMetrics {
  std::size_t num_samples = 0;
  double exact_match = 0.0;
  double template_recall_at_k = 0.0;
};

struct EvalReport {
  std::size_t num_samples = 0;
  double exact_match = 0.0;
  double template_recall_at_k = 0.0;
  double tree_match = 0.0;
  std::size_t failed = 0;  // records whose status is not ok
  std::map<std::string, DomainMetrics> per_domain;
  nlohmann::ordered_json config;
};

// Exact match over final predictions, template recall over the retrievals that
// fed them. Per-domain rows appear when any record carries a domain; records
// without one go under "(none)". Throws MissingGold.
EvalReport evaluate(std::span<const PredictionRecord> records, const EvalOptions& options = {});

nlohmann::ordered_json to_json(const EvalReport& report);
void print_report(std::ostream& out, const EvalReport& report);

enum class SweepAxis { Alpha, K };

std::string to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(const std::string& text);

struct SweepCell {
  double value = 0.0;
  std::uint64_t seed = 0;
  double exact_match = 0.0;
  double template_recall = 0.0;
};

struct SweepPoint {
  double value = 0.0;
  double exact_match_mean = 0.0;
  double exact_match_stddev = 0.0;
  double template_recall_mean = 0.0;
  double template_recall_stddev = 0.0;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::Alpha;
  std::vector<SweepPoint> points;  // ascending value
  std::vector<std::uint64_t> seeds;
  std::vector<SweepCell> cells;    // ascending value, then seed order
};

// Runs the pipeline once per (value, seed) cell. On the K axis template recall
// is measured at the swept K; on the alpha axis at options.k. Stddev is the
// sample standard deviation (0 for a single seed).
SweepResult sweep(const ExemplarStore& store, std::span<const Sample> samples,
                  const PipelineConfig& base, SweepAxis axis, std::vector<double> values,
                  const std::vector<std::uint64_t>& seeds, const EvalOptions& options = {});

// value<TAB>seed<TAB>exact_match<TAB>template_recall, one row per cell.
void write_sweep_tsv(std::ostream& out, const SweepResult& result);
// value<TAB>exact_match<TAB>template_recall<TAB>..._stddev, one row per point;
// the first two columns are the (x, exact match) plot series.
void write_sweep_summary(std::ostream& out, const SweepResult& result);

}  // namespace gandr
