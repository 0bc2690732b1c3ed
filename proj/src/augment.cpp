#include "gandr/augment.hpp"

#include "gandr/error.hpp"

namespace gandr {

std::size_t count_whitespace_tokens(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (!space && !in_token) ++count;
    in_token = !space;
  }
  return count;
}

AugmentedInput build_augmented_input(std::string_view query,
                                     std::span<const Exemplar* const> exemplars,
                                     const AugmentOptions& options) {
  const std::size_t query_tokens = options.count_tokens(query);
  if (query_tokens > options.budget) throw QueryExceedsBudget(query_tokens, options.budget);

  AugmentedInput result;
  result.query = std::string(query);
  std::size_t kept = exemplars.size();
  for (;;) {
    std::string text(query);
    for (std::size_t i = 0; i < kept; ++i) {
      text += kPairSeparator;
      text += exemplars[i]->input;
      text += kInputOutputSeparator;
      text += exemplars[i]->output;
    }
    if (kept == 0 || options.count_tokens(text) <= options.budget) {
      result.text = std::move(text);
      break;
    }
    --kept;
  }
  result.truncated = kept < exemplars.size();
  for (std::size_t i = 0; i < kept; ++i) result.exemplar_ids.push_back(exemplars[i]->id);
  return result;
}

SplitAugmentedInput split_augmented_input(std::string_view text) {
  SplitAugmentedInput out;
  std::size_t pos = text.find(kPairSeparator);
  out.query = std::string(text.substr(0, pos));
  while (pos != std::string_view::npos) {
    const std::size_t start = pos + kPairSeparator.size();
    pos = text.find(kPairSeparator, start);
    const std::string_view segment = text.substr(start, pos == std::string_view::npos ? pos : pos - start);
    const std::size_t amp = segment.rfind(kInputOutputSeparator);
    if (amp == std::string_view::npos) {
      out.pairs.emplace_back(std::string(segment), std::string());
    } else {
      out.pairs.emplace_back(std::string(segment.substr(0, amp)),
                             std::string(segment.substr(amp + kInputOutputSeparator.size())));
    }
  }
  return out;
}

std::string_view augmented_query(std::string_view text) {
  return text.substr(0, text.find(kPairSeparator));
}

}  // namespace gandr
