#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gandr/augment.hpp"
#include "gandr/generator.hpp"
#include "gandr/retrieval.hpp"

namespace gandr {

enum class PipelineMode { InputOnly, GandR, OutputOnly };
enum class FailurePolicy { SkipSample, Abort };

std::string to_string(PipelineMode mode);
PipelineMode parse_pipeline_mode(const std::string& text);

struct PipelineConfig {
  // Pass-2 retrieval. Pass 1 always retrieves top-k with alpha = 0.
  RetrievalConfig retrieval;
  std::size_t budget = std::numeric_limits<std::size_t>::max();
  TokenCounter count_tokens = count_whitespace_tokens;
  std::shared_ptr<Generator> preliminary;
  std::shared_ptr<Generator> final;
  PipelineMode mode = PipelineMode::GandR;
  FailurePolicy failure_policy = FailurePolicy::SkipSample;
  // Analysis only: pass 2 scores outputs against the gold parse instead of
  // the preliminary prediction.
  bool gold_output_side = false;

  // 0 for InputOnly, 1 for OutputOnly, retrieval.alpha otherwise.
  double effective_alpha() const;
  // Throws ConfigError.
  void validate() const;
};

enum class RecordStatus { Ok, GenFailed, Malformed, OverBudget };

std::string to_string(RecordStatus status);
RecordStatus parse_record_status(const std::string& text);

struct RetrievalEntry {
  ScoredExemplar score;
  std::string input;
  std::string output;
  bool operator==(const RetrievalEntry&) const = default;
};

struct PredictionRecord {
  ExemplarId sample_id = 0;
  std::string query;
  std::optional<std::string> gold;
  std::optional<std::string> domain;
  std::vector<RetrievalEntry> pass1_retrievals;
  AugmentedInput pass1_augmented;
  std::string preliminary;
  bool preliminary_fallback = false;  // preliminary did not parse
  std::vector<RetrievalEntry> pass2_retrievals;
  AugmentedInput pass2_augmented;
  std::string final;
  RecordStatus status = RecordStatus::Ok;
  std::string error;

  // Retrievals that fed the final prediction.
  const std::vector<RetrievalEntry>& final_retrievals() const {
    return pass2_retrievals.empty() ? pass1_retrievals : pass2_retrievals;
  }
  bool operator==(const PredictionRecord&) const = default;
};

struct Sample {
  ExemplarId id = 0;
  std::string query;
  std::optional<std::string> gold;
  std::optional<std::string> domain;
};

Sample sample_from(const Exemplar& exemplar);
std::vector<Sample> samples_from(std::span<const Exemplar> exemplars);

// Both passes for one sample.
PredictionRecord run_sample(const ExemplarStore& store, const PipelineConfig& config,
                            const Sample& sample);

// One record per sample, in order. Retrieval runs in parallel across samples;
// each pass's generations go to the endpoint as one batch.
std::vector<PredictionRecord> run_dataset(const ExemplarStore& store, const PipelineConfig& config,
                                          std::span<const Sample> samples);

struct TrainingExample {
  ExemplarId id = 0;
  std::string input;   // augmented input
  std::string target;  // gold parse
  std::vector<ExemplarId> exemplar_ids;
};

struct TrainingEmitOptions {
  int stage = 1;
  // k, p, seed, and alpha (stage 2) of the geometric sampling.
  RetrievalConfig retrieval;
  std::size_t budget = std::numeric_limits<std::size_t>::max();
  // Stage 2 only: produces stage-1 predictions for the training inputs.
  std::shared_ptr<Generator> preliminary;
  // Stage 2: sample the preliminary-pass exemplars instead of taking top-k.
  bool sample_preliminary = false;
};

struct TrainingEmitResult {
  std::vector<TrainingExample> examples;
  std::size_t skipped = 0;  // preliminary generation failed or over budget
};

// Training inputs for an external trainer. Every store exemplar is a query
// against the rest of the store (leave-one-out) with geometric sampling;
// stage 1 at alpha = 0, stage 2 at the configured alpha using stage-1
// predictions.
TrainingEmitResult emit_training_data(const ExemplarStore& store, const TrainingEmitOptions& options);

}  // namespace gandr
