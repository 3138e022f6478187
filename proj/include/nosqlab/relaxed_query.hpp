#pragma once

// Shell-style query text: bare or quoted keys, single- or double-quoted
// strings, numbers, true/false/null. Strict JSON is a subset.

#include <string>
#include <string_view>

#include "nosqlab/value.hpp"

namespace nosqlab::relaxed {

class ParseError : public OffsetError {
 public:
  using OffsetError::OffsetError;
};

inline constexpr int kMaxDepth = 256;

// Throws ParseError carrying a byte offset in [0, source.size()].
Value parse_relaxed(std::string_view source);

// The vulnerable builder: plain concatenation, no escaping.
std::string build_concat_login_query(std::string_view username_raw, std::string_view password_raw);

}  // namespace nosqlab::relaxed
