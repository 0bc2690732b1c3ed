#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gandr/retrieval.hpp"

namespace gandr {

inline constexpr std::string_view kPairSeparator = " || ";
inline constexpr std::string_view kInputOutputSeparator = " & ";

struct AugmentedInput {
  std::string text;
  std::string query;
  std::vector<ExemplarId> exemplar_ids;
  bool truncated = false;
  bool operator==(const AugmentedInput&) const = default;
};

using TokenCounter = std::function<std::size_t(std::string_view)>;

std::size_t count_whitespace_tokens(std::string_view text);

struct AugmentOptions {
  std::size_t budget = std::numeric_limits<std::size_t>::max();
  TokenCounter count_tokens = count_whitespace_tokens;
};

// query || x1 & y1 || x2 & y2 ... with trailing exemplars dropped whole until
// the token count fits the budget. Throws QueryExceedsBudget.
AugmentedInput build_augmented_input(std::string_view query,
                                     std::span<const Exemplar* const> exemplars,
                                     const AugmentOptions& options = {});

struct SplitAugmentedInput {
  std::string query;
  std::vector<std::pair<std::string, std::string>> pairs;
};

// Inverse of build_augmented_input for separator-free inputs and outputs.
SplitAugmentedInput split_augmented_input(std::string_view text);

// Text before the first pair separator.
std::string_view augmented_query(std::string_view text);

}  // namespace gandr
