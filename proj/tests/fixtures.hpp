#pragma once

// Shared test helpers: temp dirs, synthetic corpora, and an independent
// brute-force relevance scorer that does not use the library's TF-IDF code.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "gandr/retrieval.hpp"

namespace fixtures {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("gandr-" + tag + "-" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Row {
  std::string input;
  std::string output;
  std::vector<std::string> input_terms;      // lowercase word tokens
  std::vector<std::string> structure_terms;  // labels, pre-order
  std::string domain;
};

// Random corpus: words from a vocabulary of `vocab` terms, parses built from
// a handful of intents and slots. Structure terms are recorded at generation
// time so the oracle never needs the parser.
inline std::vector<Row> random_corpus(std::mt19937_64& gen, std::size_t n, std::size_t vocab) {
  static const char* intents[] = {"IN:CREATE_CALL", "IN:GET_WEATHER", "IN:SEND_MESSAGE",
                                  "IN:CREATE_ALARM", "IN:GET_EVENT"};
  static const char* slots[] = {"SL:CONTACT", "SL:GROUP", "SL:LOCATION", "SL:DATE_TIME",
                                "SL:CONTENT", "SL:CATEGORY_EVENT"};
  std::uniform_int_distribution<std::size_t> word(0, vocab - 1);
  std::uniform_int_distribution<int> len(1, 8);
  std::uniform_int_distribution<int> nslots(0, 3);
  std::uniform_int_distribution<int> pick_intent(0, 4);
  std::uniform_int_distribution<int> pick_slot(0, 5);
  std::vector<Row> rows;
  for (std::size_t i = 0; i < n; ++i) {
    Row row;
    const int words = len(gen);
    for (int w = 0; w < words; ++w) {
      const std::string t = "w" + std::to_string(word(gen));
      row.input_terms.push_back(t);
      row.input += (w ? " " : "") + t;
    }
    const std::string intent = intents[pick_intent(gen)];
    row.structure_terms.push_back(intent);
    row.output = "[" + intent;
    const int s = nslots(gen);
    for (int j = 0; j < s; ++j) {
      const std::string slot = slots[pick_slot(gen)];
      row.structure_terms.push_back(slot);
      row.output += " [" + slot + " " + row.input_terms[static_cast<std::size_t>(j) % row.input_terms.size()] + " ]";
    }
    row.output += " ]";
    row.domain = intent.substr(3);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<gandr::Exemplar> to_exemplars(const std::vector<Row>& rows) {
  std::vector<gandr::Exemplar> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.push_back(gandr::make_exemplar(static_cast<gandr::ExemplarId>(i), rows[i].input,
                                       rows[i].output, rows[i].domain));
  }
  return out;
}

// Raw-tf, smoothed-idf, L2-normalized TF-IDF over term lists, computed from
// scratch with ordered maps.
class BruteTfidf {
 public:
  explicit BruteTfidf(const std::vector<std::vector<std::string>>& docs) : n_(docs.size()) {
    for (const auto& d : docs) {
      std::map<std::string, int> seen;
      for (const auto& t : d) seen[t] = 1;
      for (const auto& [t, _] : seen) ++df_[t];
    }
    for (const auto& d : docs) docs_.push_back(vectorize(d));
  }

  std::map<std::string, double> vectorize(const std::vector<std::string>& terms) const {
    std::map<std::string, double> v;
    for (const auto& t : terms) {
      auto it = df_.find(t);
      if (it == df_.end()) continue;
      v[t] += 1.0;
    }
    double sq = 0.0;
    for (auto& [t, w] : v) {
      w *= std::log((1.0 + static_cast<double>(n_)) / (1.0 + df_.at(t))) + 1.0;
      sq += w * w;
    }
    if (sq > 0) {
      for (auto& [t, w] : v) w /= std::sqrt(sq);
    }
    return v;
  }

  static double cosine(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
    double d = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [t, w] : a) {
      na += w * w;
      auto it = b.find(t);
      if (it != b.end()) d += w * it->second;
    }
    for (const auto& [t, w] : b) nb += w * w;
    if (na == 0 || nb == 0) return 0.0;
    return d / (std::sqrt(na) * std::sqrt(nb));
  }

  const std::map<std::string, double>& doc(std::size_t i) const { return docs_[i]; }

 private:
  std::size_t n_;
  std::map<std::string, int> df_;
  std::vector<std::map<std::string, double>> docs_;
};

struct BruteHit {
  long long id;
  std::size_t rank;
};

// Exhaustive scorer: R = (1 - alpha) cos_in + alpha cos_out over every
// document, sorted by R on a 1e-12 grid then by id.
inline std::vector<BruteHit> brute_topk(const std::vector<Row>& rows, const std::vector<std::string>& query_terms,
                                        const std::vector<std::string>& query_structure, double alpha,
                                        std::size_t k) {
  std::vector<std::vector<std::string>> in_docs, out_docs;
  for (const auto& r : rows) {
    in_docs.push_back(r.input_terms);
    out_docs.push_back(r.structure_terms);
  }
  BruteTfidf in(in_docs), out(out_docs);
  const auto qi = in.vectorize(query_terms);
  const auto qo = out.vectorize(query_structure);
  std::vector<std::pair<long long, long long>> keyed;  // (key, id)
  for (std::size_t d = 0; d < rows.size(); ++d) {
    const double r = (1.0 - alpha) * BruteTfidf::cosine(qi, in.doc(d)) +
                     alpha * BruteTfidf::cosine(qo, out.doc(d));
    keyed.emplace_back(std::llround(r * 1e12), static_cast<long long>(d));
  }
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<BruteHit> hits;
  for (std::size_t r = 0; r < std::min(k, keyed.size()); ++r) hits.push_back({keyed[r].second, r});
  return hits;
}

}  // namespace fixtures
