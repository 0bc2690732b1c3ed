#pragma once

// Bracketed TOP-style intent/slot parses:
//   [IN:CREATE_CALL [SL:GROUP Musicals ] ]

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gandr {

enum class NodeKind { Intent, Slot };

struct TextSpan {
  std::string text;
  bool operator==(const TextSpan&) const = default;
};

struct ParseChild;

struct ParseNode {
  std::string label;
  NodeKind kind = NodeKind::Intent;
  std::vector<ParseChild> children;
};

struct ParseChild {
  std::variant<TextSpan, ParseNode> value;
};

bool operator==(const ParseNode& a, const ParseNode& b);
inline bool operator==(const ParseChild& a, const ParseChild& b) {
  return a.value == b.value;
}

struct ParseTree {
  ParseNode root;
  std::string source;
};

// Structural equality; the original source text is ignored.
inline bool operator==(const ParseTree& a, const ParseTree& b) {
  return a.root == b.root;
}

struct ParseOptions {
  std::string intent_prefix = "IN:";
  std::string slot_prefix = "SL:";
  // Inputs nested deeper than this are rejected rather than parsed.
  std::size_t max_depth = 256;
};

// Whitespace may separate a bracket from its label.
// Throws MalformedParse on unbalanced brackets, empty or unprefixed labels,
// a slot at the root, or text outside the root node. Labels come back
// upper-cased; text spans keep their case and are single-space joined.
ParseTree parse_top(std::string_view text, const ParseOptions& options = {});
std::optional<ParseTree> try_parse_top(std::string_view text,
                                       const ParseOptions& options = {});

std::string serialize(const ParseNode& node);
std::string serialize(const ParseTree& tree);

// Bracket-aware whitespace normalization: '[' and ']' become their own
// tokens and runs of whitespace collapse to one space. Case is preserved.
std::string normalize_spacing(std::string_view text);

enum class TemplateSemantics { Multiset, Set };

// Intent and slot labels of a parse with slot values removed.
struct Template {
  std::vector<std::string> labels;  // sorted
  std::string canonical;            // labels joined by single spaces

  bool operator==(const Template&) const = default;
};

Template make_template(std::vector<std::string> labels);
Template extract_template(const ParseTree& tree);
bool same_template(const Template& a, const Template& b,
                   TemplateSemantics semantics = TemplateSemantics::Multiset);

// Pre-order list of node labels.
std::vector<std::string> structure_tokens(const ParseTree& tree);

struct StructureTokens {
  std::vector<std::string> tokens;
  // True when the text did not parse and labels were salvaged by a
  // pattern scan that ignores bracket structure.
  bool fallback = false;
};

StructureTokens structure_tokens(std::string_view text,
                                 const ParseOptions& options = {});

}  // namespace gandr
