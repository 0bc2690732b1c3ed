#include "gandr/tfidf.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "gandr/error.hpp"

namespace gandr {

namespace {

constexpr std::string_view kMagic = "gandr-tfidf";
constexpr int kVersion = 1;

bool decode_utf8(std::string_view s, std::size_t& i, char32_t& cp) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = 0;
  if (b0 < 0x80) {
    cp = b0;
    len = 1;
  } else if ((b0 & 0xE0) == 0xC0) {
    cp = b0 & 0x1F;
    len = 2;
  } else if ((b0 & 0xF0) == 0xE0) {
    cp = b0 & 0x0F;
    len = 3;
  } else if ((b0 & 0xF8) == 0xF0) {
    cp = b0 & 0x07;
    len = 4;
  } else {
    ++i;
    return false;
  }
  if (i + len > s.size()) {
    ++i;
    return false;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return false;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += len;
  return true;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool in(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

bool is_boundary(char32_t cp) {
  if (cp < 0x80) {
    if (cp == '_') return false;
    return !std::isalnum(static_cast<int>(cp));
  }
  // Unicode spaces.
  if (cp == 0x85 || cp == 0xA0 || cp == 0x1680 || in(cp, 0x2000, 0x200B) ||
      cp == 0x2028 || cp == 0x2029 || cp == 0x202F || cp == 0x205F || cp == 0x3000 ||
      cp == 0xFEFF) {
    return true;
  }
  // Latin-1 punctuation and symbols, minus the letter-like and digit-like ones.
  if (in(cp, 0xA1, 0xBF)) {
    return !(cp == 0xAA || cp == 0xB2 || cp == 0xB3 || cp == 0xB5 || cp == 0xB9 ||
             cp == 0xBA || in(cp, 0xBC, 0xBE));
  }
  if (cp == 0xD7 || cp == 0xF7) return true;
  if (in(cp, 0x2010, 0x2027) || in(cp, 0x2030, 0x205E)) return true;
  if (in(cp, 0x3001, 0x3003) || in(cp, 0x3008, 0x3011) || in(cp, 0x3014, 0x301F)) return true;
  if (in(cp, 0xFF01, 0xFF0F) || in(cp, 0xFF1A, 0xFF20) || in(cp, 0xFF3B, 0xFF40) ||
      in(cp, 0xFF5B, 0xFF65)) {
    return true;
  }
  if (cp == 0x060C || cp == 0x061B || cp == 0x061F || cp == 0x06D4) return true;
  if (cp == 0x0964 || cp == 0x0965 || cp == 0x0E5A || cp == 0x0E5B) return true;
  return false;
}

char32_t to_lower(char32_t cp) {
  if (in(cp, 'A', 'Z')) return cp + 0x20;
  if (cp < 0x80) return cp;
  if (in(cp, 0xC0, 0xDE) && cp != 0xD7) return cp + 0x20;
  if (in(cp, 0x100, 0x137) || in(cp, 0x14A, 0x177)) return (cp % 2 == 0) ? cp + 1 : cp;
  if (in(cp, 0x139, 0x148) || in(cp, 0x179, 0x17E)) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp == 0x178) return 0xFF;
  if (in(cp, 0x391, 0x3A9) && cp != 0x3A2) return cp + 0x20;
  if (in(cp, 0x410, 0x42F)) return cp + 0x20;
  if (in(cp, 0x400, 0x40F)) return cp + 0x50;
  return cp;
}

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

[[noreturn]] void corrupt(const std::string& why) {
  throw CorruptFile("tfidf index: " + why);
}

std::string next_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) corrupt(std::string("truncated before ") + what);
  return line;
}

std::string expect_key(std::istream& in, std::string_view key) {
  std::string line = next_line(in, key.data());
  if (line.size() <= key.size() || line.compare(0, key.size(), key) != 0 ||
      line[key.size()] != ' ') {
    corrupt("expected '" + std::string(key) + "', got '" + line + "'");
  }
  return line.substr(key.size() + 1);
}

std::size_t parse_count(const std::string& s, const char* what) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || errno != 0) corrupt(std::string("bad ") + what + " '" + s + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::vector<std::string> tokenize_text(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    char32_t cp = 0;
    if (!decode_utf8(text, i, cp)) {
      // Invalid byte: keep it verbatim as part of a word.
      current.append(text.substr(start, i - start));
      continue;
    }
    if (is_boundary(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      encode_utf8(to_lower(cp), current);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

double SparseVector::norm() const {
  double sum = 0.0;
  for (const auto& e : entries) sum += e.weight * e.weight;
  return std::sqrt(sum);
}

double dot(const SparseVector& a, const SparseVector& b) {
  double sum = 0.0;
  auto ia = a.entries.begin();
  auto ib = b.entries.begin();
  while (ia != a.entries.end() && ib != b.entries.end()) {
    if (ia->term < ib->term) {
      ++ia;
    } else if (ib->term < ia->term) {
      ++ib;
    } else {
      sum += ia->weight * ib->weight;
      ++ia;
      ++ib;
    }
  }
  return sum;
}

double similarity(const SparseVector& a, const SparseVector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

long long Vocabulary::find(std::string_view term) const {
  auto it = ids_.find(std::string(term));
  return it == ids_.end() ? -1 : static_cast<long long>(it->second);
}

TermId Vocabulary::intern(const std::string& term) {
  auto [it, inserted] = ids_.try_emplace(term, static_cast<TermId>(terms_.size()));
  if (inserted) {
    terms_.push_back(term);
    df_.push_back(0);
  }
  return it->second;
}

TfidfIndex TfidfIndex::build(std::span<const std::vector<std::string>> documents,
                             WeightingOptions options) {
  if (documents.empty()) throw EmptyCorpus();
  TfidfIndex index;
  index.options_ = options;
  auto& vocab = index.vocabulary_;
  vocab.num_documents_ = documents.size();

  std::vector<std::vector<std::pair<TermId, std::uint32_t>>> counts(documents.size());
  for (std::size_t d = 0; d < documents.size(); ++d) {
    std::map<TermId, std::uint32_t> doc_counts;
    for (const auto& token : documents[d]) ++doc_counts[vocab.intern(token)];
    for (const auto& [term, count] : doc_counts) {
      ++vocab.df_[term];
      counts[d].emplace_back(term, count);
    }
  }

  const double n = static_cast<double>(documents.size());
  index.idf_.resize(vocab.size());
  for (std::size_t t = 0; t < vocab.size(); ++t) {
    index.idf_[t] = std::log((1.0 + n) / (1.0 + vocab.df_[t])) + 1.0;
  }

  index.documents_.reserve(documents.size());
  for (auto& c : counts) index.documents_.push_back(index.weigh(std::move(c)));
  index.finalize();
  return index;
}

SparseVector TfidfIndex::weigh(std::vector<std::pair<TermId, std::uint32_t>> counts) const {
  std::sort(counts.begin(), counts.end());
  SparseVector v;
  v.entries.reserve(counts.size());
  for (const auto& [term, count] : counts) {
    const double tf = options_.tf == TermFrequency::Raw
                          ? static_cast<double>(count)
                          : 1.0 + std::log(static_cast<double>(count));
    v.entries.push_back({term, tf * idf_[term]});
  }
  if (options_.normalize) {
    const double norm = v.norm();
    if (norm > 0.0) {
      for (auto& e : v.entries) e.weight /= norm;
    }
  }
  return v;
}

void TfidfIndex::finalize() {
  postings_.assign(vocabulary_.size(), {});
  for (std::size_t d = 0; d < documents_.size(); ++d) {
    for (const auto& e : documents_[d].entries) {
      postings_[e.term].push_back({static_cast<std::uint32_t>(d), e.weight});
    }
  }
}

SparseVector TfidfIndex::vectorize(std::span<const std::string> tokens) const {
  std::map<TermId, std::uint32_t> counts;
  for (const auto& token : tokens) {
    const long long id = vocabulary_.find(token);
    if (id >= 0) ++counts[static_cast<TermId>(id)];
  }
  return weigh({counts.begin(), counts.end()});
}

void TfidfIndex::save(std::ostream& out) const {
  out << kMagic << ' ' << kVersion << '\n';
  out << "tf " << (options_.tf == TermFrequency::Raw ? "raw" : "sublinear") << '\n';
  out << "normalize " << (options_.normalize ? 1 : 0) << '\n';
  out << "documents " << documents_.size() << '\n';
  out << "terms " << vocabulary_.size() << '\n';
  for (std::size_t t = 0; t < vocabulary_.size(); ++t) {
    const auto& term = vocabulary_.terms_[t];
    if (term.empty() || term.find_first_of(" \t\r\n") != std::string::npos) {
      throw Error("tfidf index: term '" + term + "' cannot be persisted");
    }
    out << term << '\t' << vocabulary_.df_[t] << '\n';
  }
  for (const auto& doc : documents_) {
    out << doc.entries.size();
    for (const auto& e : doc.entries) out << ' ' << e.term << ':' << hex_double(e.weight);
    out << '\n';
  }
  out << "end\n";
}

TfidfIndex TfidfIndex::load(std::istream& in) {
  {
    std::istringstream header(next_line(in, "header"));
    std::string magic;
    int version = 0;
    if (!(header >> magic) || magic != kMagic) corrupt("bad magic");
    if (!(header >> version)) corrupt("missing version");
    if (version != kVersion) {
      throw VersionMismatch("tfidf index version " + std::to_string(version) +
                            ", expected " + std::to_string(kVersion));
    }
  }
  TfidfIndex index;
  const std::string tf = expect_key(in, "tf");
  if (tf == "raw") {
    index.options_.tf = TermFrequency::Raw;
  } else if (tf == "sublinear") {
    index.options_.tf = TermFrequency::Sublinear;
  } else {
    corrupt("unknown tf '" + tf + "'");
  }
  const std::string normalize = expect_key(in, "normalize");
  if (normalize != "0" && normalize != "1") corrupt("bad normalize flag");
  index.options_.normalize = normalize == "1";

  const std::size_t num_docs = parse_count(expect_key(in, "documents"), "document count");
  const std::size_t num_terms = parse_count(expect_key(in, "terms"), "term count");
  if (num_docs == 0) corrupt("zero documents");

  auto& vocab = index.vocabulary_;
  vocab.num_documents_ = num_docs;
  for (std::size_t t = 0; t < num_terms; ++t) {
    const std::string line = next_line(in, "vocabulary");
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) corrupt("bad vocabulary line");
    const std::string term = line.substr(0, tab);
    const std::size_t df = parse_count(line.substr(tab + 1), "document frequency");
    if (df == 0 || df > num_docs) corrupt("document frequency out of range");
    if (vocab.intern(term) != t) corrupt("duplicate term '" + term + "'");
    vocab.df_[t] = static_cast<std::uint32_t>(df);
  }

  const double n = static_cast<double>(num_docs);
  index.idf_.resize(num_terms);
  for (std::size_t t = 0; t < num_terms; ++t) {
    index.idf_[t] = std::log((1.0 + n) / (1.0 + vocab.df_[t])) + 1.0;
  }

  std::vector<std::uint32_t> seen_df(num_terms, 0);
  index.documents_.resize(num_docs);
  for (std::size_t d = 0; d < num_docs; ++d) {
    std::istringstream row(next_line(in, "documents"));
    std::size_t nnz = 0;
    if (!(row >> nnz)) corrupt("bad document row");
    auto& entries = index.documents_[d].entries;
    entries.reserve(nnz);
    for (std::size_t k = 0; k < nnz; ++k) {
      std::string cell;
      if (!(row >> cell)) corrupt("short document row");
      const auto colon = cell.find(':');
      if (colon == std::string::npos) corrupt("bad posting '" + cell + "'");
      const std::size_t term = parse_count(cell.substr(0, colon), "term id");
      char* end = nullptr;
      const std::string w = cell.substr(colon + 1);
      const double weight = std::strtod(w.c_str(), &end);
      if (w.empty() || *end != '\0' || !std::isfinite(weight)) corrupt("bad weight '" + w + "'");
      if (term >= num_terms) corrupt("term id out of range");
      if (!entries.empty() && entries.back().term >= term) corrupt("term ids not increasing");
      entries.push_back({static_cast<TermId>(term), weight});
      ++seen_df[term];
    }
    std::string extra;
    if (row >> extra) corrupt("trailing data in document row");
  }
  for (std::size_t t = 0; t < num_terms; ++t) {
    if (seen_df[t] != vocab.df_[t]) corrupt("document frequency disagrees with postings");
  }
  if (next_line(in, "end marker") != "end") corrupt("missing end marker");
  index.finalize();
  return index;
}

}  // namespace gandr
