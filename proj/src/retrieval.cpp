#include "gandr/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "gandr/error.hpp"

namespace gandr {

bool collides_with_separators(std::string_view text) {
  if (text.find("||") != std::string_view::npos) return true;
  for (std::size_t pos = text.find('&'); pos != std::string_view::npos;
       pos = text.find('&', pos + 1)) {
    const bool left = pos == 0 || text[pos - 1] == ' ' || text[pos - 1] == '\t';
    const bool right = pos + 1 == text.size() || text[pos + 1] == ' ' || text[pos + 1] == '\t';
    if (left && right) return true;
  }
  return false;
}

Exemplar make_exemplar(ExemplarId id, std::string input, std::string output,
                       std::optional<std::string> domain, const ParseOptions& options) {
  if (collides_with_separators(input)) throw RejectedExemplar(id, "input contains a separator");
  if (collides_with_separators(output)) throw RejectedExemplar(id, "output contains a separator");
  Exemplar ex;
  ex.id = id;
  try {
    ex.parse = parse_top(output, options);
  } catch (const MalformedParse& e) {
    throw RejectedExemplar(id, e.what());
  }
  ex.input_tokens = tokenize_text(input);
  ex.structure_tokens = structure_tokens(ex.parse);
  ex.input = std::move(input);
  ex.output = std::move(output);
  ex.domain = std::move(domain);
  return ex;
}

void RetrievalConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in [0, 1]");
  if (k == 0) throw ConfigError("k must be positive");
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("p must be in (0, 1]");
}

ExemplarStore::ExemplarStore(std::vector<Exemplar> exemplars, TfidfIndex input_index,
                             TfidfIndex output_index, StoreOptions options)
    : exemplars_(std::move(exemplars)),
      input_index_(std::move(input_index)),
      output_index_(std::move(output_index)),
      options_(std::move(options)) {
  by_id_.reserve(exemplars_.size());
  for (std::size_t i = 0; i < exemplars_.size(); ++i) {
    if (!by_id_.emplace(exemplars_[i].id, i).second) throw DuplicateId(exemplars_[i].id);
  }
}

ExemplarStore ExemplarStore::build(std::vector<Exemplar> exemplars, StoreOptions options) {
  if (exemplars.empty()) throw EmptyCorpus();
  std::vector<std::vector<std::string>> inputs;
  std::vector<std::vector<std::string>> outputs;
  inputs.reserve(exemplars.size());
  outputs.reserve(exemplars.size());
  for (const auto& ex : exemplars) {
    inputs.push_back(ex.input_tokens);
    outputs.push_back(ex.structure_tokens);
  }
  auto input_index = TfidfIndex::build(inputs, options.input_weighting);
  auto output_index = TfidfIndex::build(outputs, options.output_weighting);
  return ExemplarStore(std::move(exemplars), std::move(input_index), std::move(output_index),
                       std::move(options));
}

ExemplarStore ExemplarStore::assemble(std::vector<Exemplar> exemplars, TfidfIndex input_index,
                                      TfidfIndex output_index, StoreOptions options) {
  if (exemplars.empty()) throw EmptyCorpus();
  if (input_index.num_documents() != exemplars.size() ||
      output_index.num_documents() != exemplars.size()) {
    throw CorruptFile("index document counts do not match the exemplar count");
  }
  return ExemplarStore(std::move(exemplars), std::move(input_index), std::move(output_index),
                       std::move(options));
}

const Exemplar* ExemplarStore::find(ExemplarId id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &exemplars_[it->second];
}

long long relevance_key(double relevance) { return std::llround(relevance * 1e12); }

std::vector<ScoredExemplar> score_all(const ExemplarStore& store, const Query& query,
                                      double alpha) {
  if (alpha > 0.0 && !query.prediction) throw MissingPrediction();
  const std::size_t n = store.size();
  const auto kernel = store.options().kernel;

  std::vector<double> input_sim(n, 0.0);
  const auto input_tokens = tokenize_text(query.input);
  kernels::score(kernel, store.input_index(), store.input_index().vectorize(input_tokens),
                 input_sim);

  std::vector<double> output_sim(n, 0.0);
  if (query.prediction) {
    const auto tokens = structure_tokens(*query.prediction, store.options().parse);
    kernels::score(kernel, store.output_index(), store.output_index().vectorize(tokens.tokens),
                   output_sim);
  }

  std::vector<ScoredExemplar> scored(n);
  for (std::size_t d = 0; d < n; ++d) {
    auto& s = scored[d];
    s.exemplar_id = store.at(d).id;
    s.input_sim = input_sim[d];
    s.output_sim = output_sim[d];
    s.relevance = (1.0 - alpha) * input_sim[d] + alpha * output_sim[d];
  }
  std::vector<long long> keys(n);
  for (std::size_t d = 0; d < n; ++d) keys[d] = relevance_key(scored[d].relevance);
  std::vector<std::size_t> order(n);
  for (std::size_t d = 0; d < n; ++d) order[d] = d;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (keys[a] != keys[b]) return keys[a] > keys[b];
    return scored[a].exemplar_id < scored[b].exemplar_id;
  });
  std::vector<ScoredExemplar> ranked;
  ranked.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    ranked.push_back(scored[order[r]]);
    ranked.back().rank = r;
  }
  return ranked;
}

namespace {

std::vector<ScoredExemplar> candidates(const ExemplarStore& store, const Query& query,
                                       const RetrievalConfig& config) {
  auto ranked = score_all(store, query, config.alpha);
  if (config.exclude_self && query.self_id) {
    std::erase_if(ranked, [&](const ScoredExemplar& s) { return s.exemplar_id == *query.self_id; });
    for (std::size_t r = 0; r < ranked.size(); ++r) ranked[r].rank = r;
  }
  return ranked;
}

}  // namespace

std::vector<ScoredExemplar> retrieve_topk(const ExemplarStore& store, const Query& query,
                                          const RetrievalConfig& config) {
  config.validate();
  auto ranked = candidates(store, query, config);
  if (ranked.size() > config.k) ranked.resize(config.k);
  return ranked;
}

std::vector<ScoredExemplar> retrieve_sampled(const ExemplarStore& store, const Query& query,
                                             const RetrievalConfig& config, Rng& rng) {
  config.validate();
  auto remaining = candidates(store, query, config);
  if (remaining.size() < config.k) throw StoreTooSmall(remaining.size(), config.k);

  std::vector<ScoredExemplar> picked;
  picked.reserve(config.k);
  std::vector<double> weights;
  for (std::size_t draw = 0; draw < config.k; ++draw) {
    weights.resize(remaining.size());
    double w = config.p;
    double total = 0.0;
    for (std::size_t r = 0; r < remaining.size(); ++r) {
      weights[r] = w;
      total += w;
      w *= 1.0 - config.p;
    }
    const double u = rng.uniform01() * total;
    std::size_t chosen = remaining.size() - 1;
    double acc = 0.0;
    for (std::size_t r = 0; r < remaining.size(); ++r) {
      acc += weights[r];
      if (u < acc) {
        chosen = r;
        break;
      }
    }
    picked.push_back(remaining[chosen]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(chosen));
  }
  std::sort(picked.begin(), picked.end(),
            [](const ScoredExemplar& a, const ScoredExemplar& b) { return a.rank < b.rank; });
  return picked;
}

std::vector<ScoredExemplar> retrieve(const ExemplarStore& store, const Query& query,
                                     const RetrievalConfig& config) {
  if (config.mode == RetrievalMode::TopK) return retrieve_topk(store, query, config);
  Rng rng(config.seed);
  return retrieve_sampled(store, query, config, rng);
}

}  // namespace gandr
