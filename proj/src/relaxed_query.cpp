#include "nosqlab/relaxed_query.hpp"

#include <charconv>
#include <cstdint>

namespace nosqlab::relaxed {

namespace {

bool is_ident_start(char c) { return c == '$' || c == '_' || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }
bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

void append_utf8(std::string& out, std::uint32_t cp) {
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

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Value parse_document() {
    skip_ws();
    Value v = parse_value(0);
    skip_ws();
    if (pos_ != src_.size()) fail("trailing characters after value");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  bool at_end() const { return pos_ >= src_.size(); }
  char peek() const { return at_end() ? '\0' : src_[pos_]; }

  void skip_ws() {
    while (!at_end() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
      ++pos_;
  }

  void expect(char c) {
    if (peek() != c || at_end()) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  Value parse_value(int depth) {
    if (depth > kMaxDepth) fail("nesting too deep");
    if (at_end()) fail("unexpected end of input");
    const char c = peek();
    if (c == '{') return parse_object(depth);
    if (c == '[') return parse_array(depth);
    if (c == '\'' || c == '"') return Value(parse_string());
    if (c == '-' || c == '+' || is_digit(c)) return parse_number();
    if (is_ident_start(c)) {
      const std::size_t start = pos_;
      std::string_view word = parse_identifier();
      if (word == "true") return Value(true);
      if (word == "false") return Value(false);
      if (word == "null") return Value();
      pos_ = start;
      fail("unexpected identifier '" + std::string(word) + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  Value parse_object(int depth) {
    expect('{');
    Object obj;
    skip_ws();
    if (peek() == '}' && !at_end()) {
      ++pos_;
      return Value(std::move(obj));
    }
    while (true) {
      skip_ws();
      std::string key = parse_key();
      skip_ws();
      expect(':');
      skip_ws();
      Value item = parse_value(depth + 1);
      obj.set(std::move(key), std::move(item));
      skip_ws();
      if (at_end()) fail("unbalanced '{'");
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() == '}') {
        ++pos_;
        return Value(std::move(obj));
      }
      fail("expected ',' or '}'");
    }
  }

  Value parse_array(int depth) {
    expect('[');
    Array arr;
    skip_ws();
    if (peek() == ']' && !at_end()) {
      ++pos_;
      return Value(std::move(arr));
    }
    while (true) {
      skip_ws();
      arr.push_back(parse_value(depth + 1));
      skip_ws();
      if (at_end()) fail("unbalanced '['");
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() == ']') {
        ++pos_;
        return Value(std::move(arr));
      }
      fail("expected ',' or ']'");
    }
  }

  std::string parse_key() {
    if (at_end()) fail("expected key");
    if (peek() == '\'' || peek() == '"') return parse_string();
    if (!is_ident_start(peek())) fail("expected key");
    return std::string(parse_identifier());
  }

  std::string_view parse_identifier() {
    const std::size_t start = pos_;
    while (!at_end() && is_ident_char(src_[pos_])) ++pos_;
    return src_.substr(start, pos_ - start);
  }

  std::string parse_string() {
    const char quote = src_[pos_];
    const std::size_t open = pos_;
    ++pos_;
    std::string out;
    while (true) {
      if (at_end()) {
        pos_ = open;
        fail("unterminated string literal");
      }
      const char c = src_[pos_++];
      if (c == quote) return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (at_end()) {
        pos_ = open;
        fail("unterminated string literal");
      }
      const char e = src_[pos_];
      if (e == '\\' || e == '\'') {
        out += e;
        ++pos_;
      } else if (quote == '"') {
        out += double_quoted_escape();
      } else {
        out += '\\';  // literal; the next char is read normally
      }
    }
  }

  std::string double_quoted_escape() {
    const char e = src_[pos_++];
    switch (e) {
      case '"': return "\"";
      case '/': return "/";
      case 'b': return "\b";
      case 'f': return "\f";
      case 'n': return "\n";
      case 'r': return "\r";
      case 't': return "\t";
      case 'u': {
        std::uint32_t cp = read_hex4();
        if (cp >= 0xD800 && cp <= 0xDBFF && src_.substr(pos_, 2) == "\\u") {
          const std::size_t save = pos_;
          pos_ += 2;
          const std::uint32_t low = read_hex4();
          if (low >= 0xDC00 && low <= 0xDFFF) {
            cp = 0x10000 + ((cp - 0xD800) << 10) + (low - 0xDC00);
          } else {
            pos_ = save;
          }
        }
        std::string out;
        append_utf8(out, cp);
        return out;
      }
      default:
        --pos_;
        return "\\";
    }
  }

  std::uint32_t read_hex4() {
    if (pos_ + 4 > src_.size()) fail("truncated \\u escape");
    std::uint32_t cp = 0;
    auto [ptr, ec] = std::from_chars(src_.data() + pos_, src_.data() + pos_ + 4, cp, 16);
    if (ec != std::errc() || ptr != src_.data() + pos_ + 4) fail("bad \\u escape");
    pos_ += 4;
    return cp;
  }

  Value parse_number() {
    const std::size_t start = pos_;
    if (peek() == '-' || peek() == '+') ++pos_;
    if (!is_digit(peek()) || at_end()) fail("malformed number");
    while (!at_end() && is_digit(src_[pos_])) ++pos_;
    bool integral = true;
    if (peek() == '.' && !at_end()) {
      integral = false;
      ++pos_;
      if (!is_digit(peek()) || at_end()) fail("malformed number");
      while (!at_end() && is_digit(src_[pos_])) ++pos_;
    }
    if ((peek() == 'e' || peek() == 'E') && !at_end()) {
      integral = false;
      ++pos_;
      if (peek() == '+' || peek() == '-') ++pos_;
      if (!is_digit(peek()) || at_end()) fail("malformed exponent");
      while (!at_end() && is_digit(src_[pos_])) ++pos_;
    }
    std::string_view text = src_.substr(start, pos_ - start);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (integral) {
      std::int64_t n = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
      if (ec == std::errc() && ptr == text.data() + text.size()) return Value(n);
    }
    double d = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), d);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      pos_ = start;
      fail("number out of range");
    }
    return Value(d);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

Value parse_relaxed(std::string_view source) { return Parser(source).parse_document(); }

std::string build_concat_login_query(std::string_view username_raw, std::string_view password_raw) {
  std::string q = "{ username: '";
  q += username_raw;
  q += "', password: '";
  q += password_raw;
  q += "' }";
  return q;
}

}  // namespace nosqlab::relaxed
