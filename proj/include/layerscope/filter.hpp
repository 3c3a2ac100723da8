#pragma once

#include <algorithm>
#include <cctype>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "layerscope/corpus.hpp"

namespace layerscope {

// Filter expressions select token occurrences:
//
//   expr  := term (("||" | "OR") term)*
//   term  := atom (("&&" | "AND") atom)*
//   atom  := "(" expr ")" | field op value
//   field := token | POS | SYNCAT | SENSE | NER | TOKEN_INDEX   (case-insensitive)
//   op    := "==" (equality) | "^=" (prefix)
//   value := "double-quoted string" | integer
//
// The empty expression selects every occurrence.

struct Predicate {
  enum class Op { Equals, Prefix };
  std::string field;  // canonical upper-case feature name, or "token"
  Op op = Op::Equals;
  std::string value;
};

struct FilterNode;
using FilterNodePtr = std::shared_ptr<const FilterNode>;

struct FilterNode {
  enum class Kind { All, Leaf, And, Or };
  Kind kind = Kind::All;
  Predicate predicate;
  std::vector<FilterNodePtr> children;
};

namespace detail {

class FilterParser {
 public:
  explicit FilterParser(std::string_view src) : src_(src) {}

  FilterNodePtr parse() {
    skip_ws();
    if (pos_ == src_.size()) return std::make_shared<FilterNode>();
    auto node = parse_or();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected trailing input");
    return node;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::InvalidConfig, "filter: " + what + " at offset " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(std::string_view tok) {
    skip_ws();
    if (src_.substr(pos_, tok.size()) != tok) return false;
    // Keyword operators must not run into an identifier.
    if (std::isalpha(static_cast<unsigned char>(tok.front())) && pos_ + tok.size() < src_.size() &&
        (std::isalnum(static_cast<unsigned char>(src_[pos_ + tok.size()])) || src_[pos_ + tok.size()] == '_'))
      return false;
    pos_ += tok.size();
    return true;
  }

  FilterNodePtr combine(FilterNode::Kind kind, std::vector<FilterNodePtr> parts) {
    if (parts.size() == 1) return parts.front();
    auto node = std::make_shared<FilterNode>();
    node->kind = kind;
    node->children = std::move(parts);
    return node;
  }

  FilterNodePtr parse_or() {
    std::vector<FilterNodePtr> parts{parse_and()};
    while (accept("||") || accept("OR")) parts.push_back(parse_and());
    return combine(FilterNode::Kind::Or, std::move(parts));
  }

  FilterNodePtr parse_and() {
    std::vector<FilterNodePtr> parts{parse_atom()};
    while (accept("&&") || accept("AND")) parts.push_back(parse_atom());
    return combine(FilterNode::Kind::And, std::move(parts));
  }

  FilterNodePtr parse_atom() {
    if (accept("(")) {
      auto inner = parse_or();
      if (!accept(")")) fail("expected ')'");
      return inner;
    }
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
    if (pos_ == start) fail("expected a field name");
    std::string field(src_.substr(start, pos_ - start));
    std::transform(field.begin(), field.end(), field.begin(), [](unsigned char c) { return std::toupper(c); });
    if (field == "TOKEN") field = "token";

    Predicate p;
    p.field = field;
    if (accept("==")) {
      p.op = Predicate::Op::Equals;
    } else if (accept("^=")) {
      p.op = Predicate::Op::Prefix;
    } else {
      fail("expected '==' or '^='");
    }
    p.value = parse_value();
    auto node = std::make_shared<FilterNode>();
    node->kind = FilterNode::Kind::Leaf;
    node->predicate = std::move(p);
    return node;
  }

  std::string parse_value() {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '"') {
      ++pos_;
      std::string out;
      while (pos_ < src_.size() && src_[pos_] != '"') {
        if (src_[pos_] == '\\' && pos_ + 1 < src_.size()) ++pos_;
        out.push_back(src_[pos_++]);
      }
      if (pos_ == src_.size()) fail("unterminated string");
      ++pos_;
      return out;
    }
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ == start) fail("expected a quoted string or integer");
    return std::string(src_.substr(start, pos_ - start));
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

inline const std::string* field_value(const TokenOccurrence& o, FeatureKind f, std::string& scratch) {
  if (f == FeatureKind::TokenIndex) {
    scratch = std::to_string(o.token_index);
    return &scratch;
  }
  auto it = o.annotations.find(f);
  return it == o.annotations.end() ? nullptr : &it->second;
}

inline bool matches(const Predicate& p, const std::string& value) {
  if (p.op == Predicate::Op::Equals) return value == p.value;
  return value.compare(0, p.value.size(), p.value) == 0;
}

inline void check_fields(const FilterNode& node, const Dataset& ds) {
  if (node.kind == FilterNode::Kind::Leaf) {
    if (node.predicate.field == "token") return;
    auto f = parse_feature(node.predicate.field);
    if (!f || *f == FeatureKind::Ngram || !ds.has_feature(*f))
      throw Error(ErrorCode::UnknownFeature, "feature '" + node.predicate.field + "' is not present in dataset '" + ds.name + "'");
  }
  for (const auto& c : node.children) check_fields(*c, ds);
}

inline bool evaluate(const FilterNode& node, const TokenOccurrence& o) {
  switch (node.kind) {
    case FilterNode::Kind::All: return true;
    case FilterNode::Kind::And:
      return std::all_of(node.children.begin(), node.children.end(), [&](const auto& c) { return evaluate(*c, o); });
    case FilterNode::Kind::Or:
      return std::any_of(node.children.begin(), node.children.end(), [&](const auto& c) { return evaluate(*c, o); });
    case FilterNode::Kind::Leaf: {
      const auto& p = node.predicate;
      if (p.field == "token") return matches(p, o.token);
      std::string scratch;
      const std::string* v = field_value(o, *parse_feature(p.field), scratch);
      return v != nullptr && matches(p, *v);
    }
  }
  return false;
}

}  // namespace detail

inline FilterNodePtr parse_filter(std::string_view expression) { return detail::FilterParser(expression).parse(); }

/// Ids of the occurrences matching `query`, ascending.
inline std::vector<PointId> filter_occurrences(const Dataset& ds, const FilterNode& query) {
  detail::check_fields(query, ds);
  std::vector<PointId> ids;
  for (const auto& o : ds.occurrences) {
    if (detail::evaluate(query, o)) ids.push_back(o.id);
  }
  return ids;
}

inline std::vector<PointId> filter_occurrences(const Dataset& ds, std::string_view expression) {
  return filter_occurrences(ds, *parse_filter(expression));
}

}  // namespace layerscope
