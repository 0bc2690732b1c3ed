#include "gandr/top_parse.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "gandr/error.hpp"

namespace gandr {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_delim(char c) { return is_space(c) || c == '[' || c == ']'; }

std::string to_upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

void append_word(ParseNode& node, std::string_view word) {
  if (!node.children.empty()) {
    if (auto* span = std::get_if<TextSpan>(&node.children.back().value)) {
      span->text += ' ';
      span->text += word;
      return;
    }
  }
  node.children.push_back(ParseChild{TextSpan{std::string(word)}});
}

void serialize_into(const ParseNode& node, std::string& out) {
  out += '[';
  out += node.label;
  for (const auto& child : node.children) {
    out += ' ';
    if (const auto* span = std::get_if<TextSpan>(&child.value)) {
      out += span->text;
    } else {
      serialize_into(std::get<ParseNode>(child.value), out);
    }
  }
  out += " ]";
}

void collect_labels(const ParseNode& node, std::vector<std::string>& out) {
  out.push_back(node.label);
  for (const auto& child : node.children) {
    if (const auto* sub = std::get_if<ParseNode>(&child.value)) {
      collect_labels(*sub, out);
    }
  }
}

std::string escape_regex(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::string_view("\\^$.|?*+()[]{}").find(c) != std::string_view::npos) out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

bool operator==(const ParseNode& a, const ParseNode& b) {
  return a.label == b.label && a.kind == b.kind && a.children == b.children;
}

ParseTree parse_top(std::string_view text, const ParseOptions& options) {
  const std::string intent_prefix = to_upper(options.intent_prefix);
  const std::string slot_prefix = to_upper(options.slot_prefix);

  // Nodes under construction; back() is the innermost open bracket.
  std::vector<ParseNode> open;
  std::optional<ParseNode> root;

  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (root) throw MalformedParse("content after the root node", i);

    if (c == '[') {
      const std::size_t start = i;
      ++i;
      while (i < n && is_space(text[i])) ++i;
      std::size_t end = i;
      while (end < n && !is_delim(text[end])) ++end;
      if (end == i) throw MalformedParse("empty label", start);
      std::string label = to_upper(text.substr(i, end - i));
      ParseNode node;
      if (starts_with(label, intent_prefix) && label.size() > intent_prefix.size()) {
        node.kind = NodeKind::Intent;
      } else if (starts_with(label, slot_prefix) && label.size() > slot_prefix.size()) {
        node.kind = NodeKind::Slot;
      } else {
        throw MalformedParse("label '" + label + "' lacks an intent or slot prefix", start);
      }
      if (open.empty() && node.kind == NodeKind::Slot) {
        throw MalformedParse("slot at root", start);
      }
      if (open.size() >= options.max_depth) throw MalformedParse("nesting too deep", start);
      node.label = std::move(label);
      open.push_back(std::move(node));
      i = end;
    } else if (c == ']') {
      if (open.empty()) throw MalformedParse("unbalanced ']'", i);
      ParseNode done = std::move(open.back());
      open.pop_back();
      if (open.empty()) {
        root = std::move(done);
      } else {
        open.back().children.push_back(ParseChild{std::move(done)});
      }
      ++i;
    } else {
      if (open.empty()) throw MalformedParse("text outside the root node", i);
      std::size_t end = i;
      while (end < n && !is_delim(text[end])) ++end;
      append_word(open.back(), text.substr(i, end - i));
      i = end;
    }
  }
  if (!open.empty()) throw MalformedParse("unbalanced '['", n);
  if (!root) throw MalformedParse("empty parse", 0);
  return ParseTree{std::move(*root), std::string(text)};
}

std::optional<ParseTree> try_parse_top(std::string_view text,
                                       const ParseOptions& options) {
  try {
    return parse_top(text, options);
  } catch (const MalformedParse&) {
    return std::nullopt;
  }
}

std::string serialize(const ParseNode& node) {
  std::string out;
  serialize_into(node, out);
  return out;
}

std::string serialize(const ParseTree& tree) { return serialize(tree.root); }

std::string normalize_spacing(std::string_view text) {
  std::string out;
  out.reserve(text.size() + 8);
  auto emit_sep = [&] {
    if (!out.empty() && out.back() != ' ') out += ' ';
  };
  for (char c : text) {
    if (is_space(c)) {
      emit_sep();
    } else if (c == '[' || c == ']') {
      emit_sep();
      out += c;
      out += ' ';
    } else {
      out += c;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

Template make_template(std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  Template t;
  for (const auto& l : labels) {
    if (!t.canonical.empty()) t.canonical += ' ';
    t.canonical += l;
  }
  t.labels = std::move(labels);
  return t;
}

Template extract_template(const ParseTree& tree) {
  return make_template(structure_tokens(tree));
}

bool same_template(const Template& a, const Template& b, TemplateSemantics semantics) {
  if (semantics == TemplateSemantics::Multiset) return a.labels == b.labels;
  std::vector<std::string> ua = a.labels;
  std::vector<std::string> ub = b.labels;
  ua.erase(std::unique(ua.begin(), ua.end()), ua.end());
  ub.erase(std::unique(ub.begin(), ub.end()), ub.end());
  return ua == ub;
}

std::vector<std::string> structure_tokens(const ParseTree& tree) {
  std::vector<std::string> out;
  collect_labels(tree.root, out);
  return out;
}

StructureTokens structure_tokens(std::string_view text, const ParseOptions& options) {
  if (auto tree = try_parse_top(text, options)) {
    return {structure_tokens(*tree), false};
  }
  StructureTokens result{{}, true};
  const std::regex pattern("(" + escape_regex(options.intent_prefix) + "|" +
                               escape_regex(options.slot_prefix) + ")\\w+",
                           std::regex::icase);
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), pattern);
       it != std::sregex_iterator(); ++it) {
    result.tokens.push_back(to_upper(it->str()));
  }
  return result;
}

}  // namespace gandr
