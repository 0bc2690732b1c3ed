#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gandr/kernels.hpp"
#include "gandr/rng.hpp"
#include "gandr/tfidf.hpp"
#include "gandr/top_parse.hpp"

namespace gandr {

using ExemplarId = long long;

struct Exemplar {
  ExemplarId id = 0;
  std::string input;
  std::string output;
  ParseTree parse;
  std::vector<std::string> input_tokens;
  std::vector<std::string> structure_tokens;
  std::optional<std::string> domain;
};

// True when text could not be split back out of an augmented input: it holds
// "||" anywhere or a standalone "&" token.
bool collides_with_separators(std::string_view text);

// Parses the gold output and tokenizes both sides. Throws RejectedExemplar
// for a malformed parse or a separator collision.
Exemplar make_exemplar(ExemplarId id, std::string input, std::string output,
                       std::optional<std::string> domain = std::nullopt,
                       const ParseOptions& options = {});

enum class RetrievalMode { TopK, GeometricSample };

struct RetrievalConfig {
  double alpha = 0.0;  // weight of output similarity
  std::size_t k = 4;
  double p = 0.5;      // geometric rank-sampling parameter
  RetrievalMode mode = RetrievalMode::TopK;
  std::uint64_t seed = 0;
  bool exclude_self = false;

  // Throws ConfigError.
  void validate() const;
};

struct ScoredExemplar {
  ExemplarId exemplar_id = 0;
  double relevance = 0.0;
  double input_sim = 0.0;
  double output_sim = 0.0;
  std::size_t rank = 0;  // position among eligible candidates (after self exclusion)
  bool operator==(const ScoredExemplar&) const = default;
};

struct Query {
  std::string input;
  std::optional<std::string> prediction;  // output side; usually the preliminary parse
  std::optional<ExemplarId> self_id;      // skipped when exclude_self is on
};

struct StoreOptions {
  WeightingOptions input_weighting;
  WeightingOptions output_weighting;
  ParseOptions parse;
  kernels::Kernel kernel = kernels::Kernel::Auto;
};

class ExemplarStore {
 public:
  // Builds the input-token and structure-token indexes over the same doc ids.
  // Throws EmptyCorpus or DuplicateId.
  static ExemplarStore build(std::vector<Exemplar> exemplars, StoreOptions options = {});

  // Restores a store from already-built indexes (persistence path).
  static ExemplarStore assemble(std::vector<Exemplar> exemplars, TfidfIndex input_index,
                                TfidfIndex output_index, StoreOptions options);

  std::size_t size() const { return exemplars_.size(); }
  const std::vector<Exemplar>& exemplars() const { return exemplars_; }
  const Exemplar& at(std::size_t doc) const { return exemplars_[doc]; }
  const Exemplar* find(ExemplarId id) const;
  const TfidfIndex& input_index() const { return input_index_; }
  const TfidfIndex& output_index() const { return output_index_; }
  const StoreOptions& options() const { return options_; }

 private:
  ExemplarStore(std::vector<Exemplar> exemplars, TfidfIndex input_index,
                TfidfIndex output_index, StoreOptions options);

  std::vector<Exemplar> exemplars_;
  TfidfIndex input_index_;
  TfidfIndex output_index_;
  StoreOptions options_;
  std::unordered_map<ExemplarId, std::size_t> by_id_;
};

// Ordering key: relevance on a 1e-12 grid, so scores that differ only by
// floating-point summation noise tie and fall back to ascending id.
long long relevance_key(double relevance);

// Every exemplar scored by (1 - alpha) * input_sim + alpha * output_sim, in
// descending relevance, ties by ascending id. Throws MissingPrediction when
// alpha > 0 and the query has no prediction.
std::vector<ScoredExemplar> score_all(const ExemplarStore& store, const Query& query,
                                      double alpha);

std::vector<ScoredExemplar> retrieve_topk(const ExemplarStore& store, const Query& query,
                                          const RetrievalConfig& config);

// K distinct exemplars: each draw picks position r among the remaining ranked
// candidates with probability proportional to p (1 - p)^r. Results come back
// in rank order. Throws StoreTooSmall.
std::vector<ScoredExemplar> retrieve_sampled(const ExemplarStore& store, const Query& query,
                                             const RetrievalConfig& config, Rng& rng);

// Dispatches on config.mode; sampled mode draws from Rng(config.seed).
std::vector<ScoredExemplar> retrieve(const ExemplarStore& store, const Query& query,
                                     const RetrievalConfig& config);

}  // namespace gandr
