#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gandr {

// Lower-cased word tokens. Whitespace and punctuation (ASCII plus the common
// Unicode punctuation and space blocks) separate tokens and are dropped.
std::vector<std::string> tokenize_text(std::string_view text);

using TermId = std::uint32_t;

struct SparseEntry {
  TermId term;
  double weight;
  bool operator==(const SparseEntry&) const = default;
};

// Entries sorted by strictly increasing term id.
struct SparseVector {
  std::vector<SparseEntry> entries;

  bool empty() const { return entries.empty(); }
  double norm() const;
  bool operator==(const SparseVector&) const = default;
};

double dot(const SparseVector& a, const SparseVector& b);
// Cosine similarity; 0 when either side is the zero vector.
double similarity(const SparseVector& a, const SparseVector& b);

enum class TermFrequency { Raw, Sublinear };

struct WeightingOptions {
  TermFrequency tf = TermFrequency::Raw;
  bool normalize = true;
  bool operator==(const WeightingOptions&) const = default;
};

class Vocabulary {
 public:
  // Returns the id of term, or -1 when unknown.
  long long find(std::string_view term) const;
  const std::string& term(TermId id) const { return terms_[id]; }
  std::uint32_t document_frequency(TermId id) const { return df_[id]; }
  std::size_t size() const { return terms_.size(); }
  std::size_t num_documents() const { return num_documents_; }

 private:
  friend class TfidfIndex;
  TermId intern(const std::string& term);

  std::unordered_map<std::string, TermId> ids_;
  std::vector<std::string> terms_;
  std::vector<std::uint32_t> df_;
  std::size_t num_documents_ = 0;
};

struct Posting {
  std::uint32_t doc;
  double weight;
};

// Immutable TF-IDF index over a tokenized corpus. Document ids are dense in
// [0, N) and follow the order of the documents passed to build().
class TfidfIndex {
 public:
  // idf(t) = ln((1 + N) / (1 + df(t))) + 1. Throws EmptyCorpus.
  static TfidfIndex build(std::span<const std::vector<std::string>> documents,
                          WeightingOptions options = {});

  // Unknown tokens are ignored.
  SparseVector vectorize(std::span<const std::string> tokens) const;

  const Vocabulary& vocabulary() const { return vocabulary_; }
  const WeightingOptions& options() const { return options_; }
  std::size_t num_documents() const { return documents_.size(); }
  const SparseVector& document(std::size_t doc) const { return documents_[doc]; }
  std::span<const Posting> postings(TermId term) const { return postings_[term]; }
  double idf(TermId term) const { return idf_[term]; }

  // Line-based versioned text format; weights are written as hex floats so
  // save -> load -> save is byte-identical.
  void save(std::ostream& out) const;
  static TfidfIndex load(std::istream& in);

 private:
  SparseVector weigh(std::vector<std::pair<TermId, std::uint32_t>> counts) const;
  void finalize();

  Vocabulary vocabulary_;
  WeightingOptions options_;
  std::vector<double> idf_;
  std::vector<SparseVector> documents_;
  std::vector<std::vector<Posting>> postings_;
};

}  // namespace gandr
