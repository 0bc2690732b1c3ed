#include "gandr/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "gandr/error.hpp"

namespace gandr {

using nlohmann::ordered_json;

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double percent(std::size_t hits, std::size_t total) {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

Template template_of(std::string_view text, const ParseOptions& parse) {
  return make_template(structure_tokens(text, parse).tokens);
}

bool template_hit(const PredictionRecord& record, const std::vector<RetrievalEntry>& retrievals,
                  std::size_t k, TemplateSemantics semantics, const ParseOptions& parse) {
  if (!record.gold) throw MissingGold(record.sample_id);
  const Template gold = template_of(*record.gold, parse);
  const std::size_t n = std::min(k, retrievals.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (same_template(template_of(retrievals[i].output, parse), gold, semantics)) return true;
  }
  return false;
}

struct Tally {
  std::size_t n = 0;
  std::size_t em = 0;
  std::size_t tr = 0;
  std::size_t tree = 0;
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

}  // namespace

bool exact_match(std::string_view prediction, std::string_view gold, bool case_insensitive) {
  std::string a = normalize_spacing(prediction);
  std::string b = normalize_spacing(gold);
  if (case_insensitive) {
    a = lower(std::move(a));
    b = lower(std::move(b));
  }
  return a == b;
}

bool tree_match(std::string_view prediction, std::string_view gold, const ParseOptions& options) {
  auto p = try_parse_top(prediction, options);
  auto g = try_parse_top(gold, options);
  return p && g && *p == *g;
}

double template_recall_at_k(std::span<const PredictionRecord> records, int which_pass, std::size_t k,
                            TemplateSemantics semantics, const ParseOptions& parse) {
  if (which_pass != 1 && which_pass != 2) throw ConfigError("which_pass must be 1 or 2");
  std::size_t hits = 0;
  for (const auto& r : records) {
    const auto& retrievals = which_pass == 1 ? r.pass1_retrievals : r.pass2_retrievals;
    if (template_hit(r, retrievals, k, semantics, parse)) ++hits;
  }
  return percent(hits, records.size());
}

EvalReport evaluate(std::span<const PredictionRecord> records, const EvalOptions& options) {
  EvalReport report;
  Tally all;
  std::map<std::string, Tally> domains;
  const bool any_domain = std::any_of(records.begin(), records.end(),
                                      [](const PredictionRecord& r) { return r.domain.has_value(); });
  for (const auto& r : records) {
    if (!r.gold) throw MissingGold(r.sample_id);
    const bool ok = r.status == RecordStatus::Ok || r.status == RecordStatus::Malformed;
    const bool em = ok && exact_match(r.final, *r.gold, options.case_insensitive);
    const bool tree = ok && tree_match(r.final, *r.gold, options.parse);
    const bool tr = template_hit(r, r.final_retrievals(), options.k, options.semantics, options.parse);
    if (r.status != RecordStatus::Ok) ++report.failed;
    auto count = [&](Tally& t) {
      ++t.n;
      t.em += em;
      t.tr += tr;
      t.tree += tree;
    };
    count(all);
    if (any_domain) count(domains[r.domain.value_or("(none)")]);
  }
  report.num_samples = all.n;
  report.exact_match = percent(all.em, all.n);
  report.template_recall_at_k = percent(all.tr, all.n);
  report.tree_match = percent(all.tree, all.n);
  for (const auto& [name, t] : domains) {
    report.per_domain[name] = {t.n, percent(t.em, t.n), percent(t.tr, t.n)};
  }
  report.config["k"] = options.k;
  report.config["template_semantics"] =
      options.semantics == TemplateSemantics::Multiset ? "multiset" : "set";
  report.config["case_insensitive"] = options.case_insensitive;
  return report;
}

ordered_json to_json(const EvalReport& report) {
  ordered_json j;
  j["num_samples"] = report.num_samples;
  j["exact_match"] = report.exact_match;
  j["template_recall_at_k"] = report.template_recall_at_k;
  j["tree_match"] = report.tree_match;
  j["failed"] = report.failed;
  ordered_json domains = ordered_json::object();
  for (const auto& [name, m] : report.per_domain) {
    domains[name] = {{"num_samples", m.num_samples},
                     {"exact_match", m.exact_match},
                     {"template_recall_at_k", m.template_recall_at_k}};
  }
  j["per_domain"] = domains;
  j["config"] = report.config;
  return j;
}

void print_report(std::ostream& out, const EvalReport& report) {
  const auto k = report.config.value("k", std::size_t{0});
  out << "samples            " << report.num_samples << "  (failed " << report.failed << ")\n";
  out << "exact match        " << fixed(report.exact_match, 2) << "\n";
  out << "template recall@" << k << (k < 10 ? "  " : " ") << fixed(report.template_recall_at_k, 2)
      << "\n";
  out << "tree match         " << fixed(report.tree_match, 2) << "\n";
  if (!report.per_domain.empty()) {
    out << "\ndomain                 n      EM      TR@" << k << "\n";
    for (const auto& [name, m] : report.per_domain) {
      char line[160];
      std::snprintf(line, sizeof line, "%-18s %6zu  %6.2f  %6.2f\n", name.c_str(), m.num_samples,
                    m.exact_match, m.template_recall_at_k);
      out << line;
    }
  }
}

std::string to_string(SweepAxis axis) { return axis == SweepAxis::Alpha ? "alpha" : "k"; }

SweepAxis parse_sweep_axis(const std::string& text) {
  if (text == "alpha") return SweepAxis::Alpha;
  if (text == "k") return SweepAxis::K;
  throw ConfigError("unknown sweep axis '" + text + "' (alpha, k)");
}

SweepResult sweep(const ExemplarStore& store, std::span<const Sample> samples,
                  const PipelineConfig& base, SweepAxis axis, std::vector<double> values,
                  const std::vector<std::uint64_t>& seeds, const EvalOptions& options) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
  std::stable_sort(values.begin(), values.end());

  SweepResult result;
  result.axis = axis;
  result.seeds = seeds;
  for (double value : values) {
    PipelineConfig config = base;
    EvalOptions eval = options;
    if (axis == SweepAxis::Alpha) {
      config.retrieval.alpha = value;
    } else {
      if (value < 1.0 || value != std::floor(value)) throw ConfigError("k values must be positive integers");
      config.retrieval.k = static_cast<std::size_t>(value);
      eval.k = config.retrieval.k;
    }
    std::vector<double> ems;
    std::vector<double> trs;
    for (auto seed : seeds) {
      config.retrieval.seed = seed;
      const auto records = run_dataset(store, config, samples);
      const auto report = evaluate(records, eval);
      result.cells.push_back({value, seed, report.exact_match, report.template_recall_at_k});
      ems.push_back(report.exact_match);
      trs.push_back(report.template_recall_at_k);
    }
    result.points.push_back({value, mean(ems), stddev(ems), mean(trs), stddev(trs)});
  }
  return result;
}

void write_sweep_tsv(std::ostream& out, const SweepResult& result) {
  out << to_string(result.axis) << "\tseed\texact_match\ttemplate_recall\n";
  for (const auto& c : result.cells) {
    out << c.value << '\t' << c.seed << '\t' << fixed(c.exact_match, 4) << '\t'
        << fixed(c.template_recall, 4) << '\n';
  }
}

void write_sweep_summary(std::ostream& out, const SweepResult& result) {
  out << to_string(result.axis)
      << "\texact_match\ttemplate_recall\texact_match_stddev\ttemplate_recall_stddev\n";
  for (const auto& p : result.points) {
    out << p.value << '\t' << fixed(p.exact_match_mean, 4) << '\t' << fixed(p.template_recall_mean, 4)
        << '\t' << fixed(p.exact_match_stddev, 4) << '\t' << fixed(p.template_recall_stddev, 4) << '\n';
  }
}

}  // namespace gandr
