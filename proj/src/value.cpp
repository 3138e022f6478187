#include "nosqlab/value.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace nosqlab {

Object::Object(std::initializer_list<Entry> entries) {
  for (const auto& [k, v] : entries) set(k, v);
}

void Object::set(std::string key, Value value) {
  if (Value* existing = find(key)) {
    *existing = std::move(value);
    return;
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

const Value* Object::find(std::string_view key) const {
  for (const auto& entry : entries_)
    if (entry.first == key) return &entry.second;
  return nullptr;
}

Value* Object::find(std::string_view key) {
  for (auto& entry : entries_)
    if (entry.first == key) return &entry.second;
  return nullptr;
}

bool Object::erase(std::string_view key) {
  for (auto it = entries_.begin(); it != entries_.end(); ++it) {
    if (it->first == key) {
      entries_.erase(it);
      return true;
    }
  }
  return false;
}

std::string_view kind_name(ValueKind kind) {
  switch (kind) {
    case ValueKind::Null: return "null";
    case ValueKind::Bool: return "bool";
    case ValueKind::Int: return "int";
    case ValueKind::Float: return "float";
    case ValueKind::Text: return "text";
    case ValueKind::Array: return "array";
    case ValueKind::Object: return "object";
  }
  return "?";
}

namespace {

[[noreturn]] void kind_mismatch(ValueKind want, ValueKind got) {
  throw TypeError("expected " + std::string(kind_name(want)) + ", got " + std::string(kind_name(got)));
}

}  // namespace

bool Value::as_bool() const {
  if (!is_bool()) kind_mismatch(ValueKind::Bool, kind());
  return std::get<bool>(data_);
}

std::int64_t Value::as_int() const {
  if (!is_int()) kind_mismatch(ValueKind::Int, kind());
  return std::get<std::int64_t>(data_);
}

double Value::as_float() const {
  if (!is_float()) kind_mismatch(ValueKind::Float, kind());
  return std::get<double>(data_);
}

double Value::as_number() const {
  if (is_int()) return static_cast<double>(std::get<std::int64_t>(data_));
  if (is_float()) return std::get<double>(data_);
  kind_mismatch(ValueKind::Float, kind());
}

const std::string& Value::as_text() const {
  if (!is_text()) kind_mismatch(ValueKind::Text, kind());
  return std::get<std::string>(data_);
}

const Array& Value::as_array() const {
  if (!is_array()) kind_mismatch(ValueKind::Array, kind());
  return std::get<Array>(data_);
}

Array& Value::as_array() {
  if (!is_array()) kind_mismatch(ValueKind::Array, kind());
  return std::get<Array>(data_);
}

const Object& Value::as_object() const {
  if (!is_object()) kind_mismatch(ValueKind::Object, kind());
  return std::get<Object>(data_);
}

Object& Value::as_object() {
  if (!is_object()) kind_mismatch(ValueKind::Object, kind());
  return std::get<Object>(data_);
}

namespace {

void append_float(std::string& out, double d) {
  if (!std::isfinite(d)) {
    out += "null";
    return;
  }
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, d);
  std::string_view text(buf, static_cast<std::size_t>(end - buf));
  out += text;
  // keep floats distinguishable from ints after a round trip
  if (text.find_first_of(".e") == std::string_view::npos) out += ".0";
}

void append_quoted(std::string& out, std::string_view s) {
  static constexpr char kHex[] = "0123456789abcdef";
  out += '"';
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          out += "\\u00";
          out += kHex[c >> 4];
          out += kHex[c & 0xF];
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += '"';
}

void append_json(std::string& out, const Value& v) {
  switch (v.kind()) {
    case ValueKind::Null: out += "null"; break;
    case ValueKind::Bool: out += v.as_bool() ? "true" : "false"; break;
    case ValueKind::Int: out += std::to_string(v.as_int()); break;
    case ValueKind::Float: append_float(out, v.as_float()); break;
    case ValueKind::Text: append_quoted(out, v.as_text()); break;
    case ValueKind::Array: {
      out += '[';
      bool first = true;
      for (const auto& item : v.as_array()) {
        if (!first) out += ',';
        first = false;
        append_json(out, item);
      }
      out += ']';
      break;
    }
    case ValueKind::Object: {
      out += '{';
      bool first = true;
      for (const auto& [key, item] : v.as_object()) {
        if (!first) out += ',';
        first = false;
        append_quoted(out, key);
        out += ':';
        append_json(out, item);
      }
      out += '}';
      break;
    }
  }
}

constexpr int kMaxJsonDepth = 512;

template <class Json>
Value from_nlohmann(const Json& j, int depth = 0) {
  using json = nlohmann::json;
  if (depth > kMaxJsonDepth) throw JsonError("JSON nesting deeper than " + std::to_string(kMaxJsonDepth));
  switch (j.type()) {
    case json::value_t::null: return Value();
    case json::value_t::boolean: return Value(j.template get<bool>());
    case json::value_t::number_integer: return Value(j.template get<std::int64_t>());
    case json::value_t::number_unsigned: {
      auto u = j.template get<std::uint64_t>();
      if (u <= static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
        return Value(static_cast<std::int64_t>(u));
      return Value(static_cast<double>(u));
    }
    case json::value_t::number_float: return Value(j.template get<double>());
    case json::value_t::string: return Value(j.template get<std::string>());
    case json::value_t::array: {
      Array out;
      out.reserve(j.size());
      for (const auto& item : j) out.push_back(from_nlohmann(item, depth + 1));
      return Value(std::move(out));
    }
    case json::value_t::object: {
      Object out;
      for (const auto& [key, item] : j.items()) out.set(key, from_nlohmann(item, depth + 1));
      return Value(std::move(out));
    }
    default: throw JsonError("unsupported JSON value");
  }
}

}  // namespace

std::string to_json(const Value& v) {
  std::string out;
  append_json(out, v);
  return out;
}

Value parse_json(std::string_view text) {
  // ordered_json keeps object keys in document order
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception& e) {
    throw JsonError(e.what());
  }
  return from_nlohmann(doc);
}

std::string scalar_text(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Text: return v.as_text();
    case ValueKind::Int:
    case ValueKind::Float:
    case ValueKind::Bool:
    case ValueKind::Null: return to_json(v);
    default: throw TypeError("not a scalar: " + std::string(kind_name(v.kind())));
  }
}

std::size_t node_count(const Value& v) {
  std::size_t n = 1;
  if (v.is_array())
    for (const auto& item : v.as_array()) n += node_count(item);
  else if (v.is_object())
    for (const auto& [key, item] : v.as_object()) n += node_count(item);
  return n;
}

}  // namespace nosqlab
