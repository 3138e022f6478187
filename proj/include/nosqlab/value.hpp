#pragma once

// JSON-like value tree shared by the document store, the query layer and the
// HTTP service. Objects keep insertion order and unique keys.

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "nosqlab/error.hpp"

namespace nosqlab {

class Value;

class Object {
 public:
  using Entry = std::pair<std::string, Value>;

  Object() = default;
  Object(std::initializer_list<Entry> entries);

  // Inserts or overwrites in place (first position is kept).
  void set(std::string key, Value value);
  const Value* find(std::string_view key) const;
  Value* find(std::string_view key);
  bool contains(std::string_view key) const { return find(key) != nullptr; }
  bool erase(std::string_view key);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  const std::vector<Entry>& entries() const { return entries_; }

  friend bool operator==(const Object& a, const Object& b);

 private:
  std::vector<Entry> entries_;
};

using Array = std::vector<Value>;

enum class ValueKind { Null, Bool, Int, Float, Text, Array, Object };

std::string_view kind_name(ValueKind kind);

class Value {
 public:
  Value() = default;
  Value(std::nullptr_t) {}
  Value(bool b) : data_(b) {}
  Value(int i) : data_(static_cast<std::int64_t>(i)) {}
  Value(std::int64_t i) : data_(i) {}
  Value(double d) : data_(d) {}
  Value(const char* s) : data_(std::string(s)) {}
  Value(std::string s) : data_(std::move(s)) {}
  Value(std::string_view s) : data_(std::string(s)) {}
  Value(Array a) : data_(std::move(a)) {}
  Value(Object o) : data_(std::move(o)) {}

  ValueKind kind() const { return static_cast<ValueKind>(data_.index()); }

  bool is_null() const { return kind() == ValueKind::Null; }
  bool is_bool() const { return kind() == ValueKind::Bool; }
  bool is_int() const { return kind() == ValueKind::Int; }
  bool is_float() const { return kind() == ValueKind::Float; }
  bool is_number() const { return is_int() || is_float(); }
  bool is_text() const { return kind() == ValueKind::Text; }
  bool is_array() const { return kind() == ValueKind::Array; }
  bool is_object() const { return kind() == ValueKind::Object; }

  // Accessors throw TypeError on a kind mismatch.
  bool as_bool() const;
  std::int64_t as_int() const;
  double as_float() const;
  double as_number() const;  // Int or Float
  const std::string& as_text() const;
  const Array& as_array() const;
  Array& as_array();
  const Object& as_object() const;
  Object& as_object();

  // Strict structural equality: Int 1, Float 1.0 and Text "1" all differ.
  friend bool operator==(const Value& a, const Value& b) { return a.data_ == b.data_; }

 private:
  std::variant<std::monostate, bool, std::int64_t, double, std::string, Array, Object> data_;
};

inline bool operator==(const Object& a, const Object& b) { return a.entries_ == b.entries_; }

// Canonical compact JSON. Non-finite floats render as null.
std::string to_json(const Value& v);

// Strict JSON (RFC 8259) to Value. Integers that fit in int64 become Int,
// everything else numeric becomes Float. Duplicate keys: last wins.
// Throws JsonError.
Value parse_json(std::string_view text);

// Canonical text for scalars: "true", "42", "2.5", the text itself.
std::string scalar_text(const Value& v);

// Node count of the tree (each scalar, array and object counts once).
std::size_t node_count(const Value& v);

}  // namespace nosqlab
