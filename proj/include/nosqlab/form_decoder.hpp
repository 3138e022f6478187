#pragma once

// URL-encoded body decoding with PHP parse_str semantics: bracketed keys
// build nested arrays, so `username[$ne]=1` arrives as {username: {$ne: "1"}}.
//
// Pinned against PHP 8.3 (golden corpus in tests/golden/form_decode.json):
//  - leading spaces of a key are dropped, ' ' and '.' in the root name become '_'
//  - an unclosed '[' on the root turns into '_' and the rest of the name is
//    mangled the same way; an unclosed nested '[' drops the dangling tail
//  - text after a closing ']' that is not followed by '[' is ignored
//  - more than 64 bracket levels deletes the whole root variable
//  - canonical decimal index strings are integer keys; `[]` appends at
//    max(integer key) + 1

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "nosqlab/value.hpp"

namespace nosqlab::form {

class DecodeError : public Error {
 public:
  using Error::Error;
};

inline constexpr int kMaxNestingLevel = 64;

struct FormTree {
  using Map = std::vector<std::pair<std::string, FormTree>>;
  using List = std::vector<FormTree>;

  std::variant<std::string, Map, List> node;

  bool is_leaf() const { return node.index() == 0; }
  bool is_map() const { return node.index() == 1; }
  bool is_list() const { return node.index() == 2; }
  const std::string& leaf() const { return std::get<std::string>(node); }
  const Map& map() const { return std::get<Map>(node); }
  const List& list() const { return std::get<List>(node); }

  const FormTree* find(std::string_view key) const;

  friend bool operator==(const FormTree&, const FormTree&) = default;
};

struct Named {
  std::string key;
  friend bool operator==(const Named&, const Named&) = default;
};
struct Append {
  friend bool operator==(const Append&, const Append&) = default;
};
using Segment = std::variant<Named, Append>;

struct KeyPath {
  std::string root;
  std::vector<Segment> segments;
  int bracket_levels = 0;  // includes an unclosed nested level

  friend bool operator==(const KeyPath&, const KeyPath&) = default;
};

// `raw_key` is already percent-decoded. Throws DecodeError when the root is
// empty (after dropping leading spaces).
KeyPath parse_key_path(std::string_view raw_key);

// '+' is a space, %XX a byte, any other '%' stays literal.
std::string percent_decode(std::string_view text);

// Encodes every byte outside the RFC 3986 unreserved set.
std::string percent_encode(std::string_view text);

// Never throws. The result is always a map.
FormTree decode_form(std::string_view body);

// Leaf -> Text, Map -> Object, List -> Array. No validation whatsoever.
Value form_to_value(const FormTree& tree);

std::size_t node_count(const FormTree& tree);

}  // namespace nosqlab::form
