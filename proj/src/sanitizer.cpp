#include "nosqlab/sanitizer.hpp"

#include <algorithm>
#include <cctype>

namespace nosqlab::sanitizer {

std::optional<Role> parse_role(std::string_view name) {
  if (name == "user") return Role::User;
  if (name == "admin") return Role::Admin;
  return std::nullopt;
}

std::string_view role_name(Role role) { return role == Role::Admin ? "admin" : "user"; }

std::string_view kind_name(SanitizeErrorKind kind) {
  switch (kind) {
    case SanitizeErrorKind::NotScalar: return "NotScalar";
    case SanitizeErrorKind::OperatorKey: return "OperatorKey";
    case SanitizeErrorKind::FieldNotAllowed: return "FieldNotAllowed";
    case SanitizeErrorKind::BadContentType: return "BadContentType";
    case SanitizeErrorKind::Forbidden: return "Forbidden";
  }
  return "?";
}

Value cast_scalar_text(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Text: return v;
    case ValueKind::Int:
    case ValueKind::Float:
    case ValueKind::Bool: return Value(scalar_text(v));
    default:
      throw SanitizeError(SanitizeErrorKind::NotScalar, "expected a scalar, got " + std::string(kind_name(v.kind())));
  }
}

namespace {

const std::string* first_operator_key(const Value& v) {
  if (v.is_object()) {
    for (const auto& [key, item] : v.as_object()) {
      if (!key.empty() && key.front() == '$') return &key;
      if (const std::string* nested = first_operator_key(item)) return nested;
    }
  } else if (v.is_array()) {
    for (const auto& item : v.as_array())
      if (const std::string* nested = first_operator_key(item)) return nested;
  }
  return nullptr;
}

}  // namespace

Value reject_operator_keys(const Value& v) {
  if (const std::string* key = first_operator_key(v)) throw SanitizeError(SanitizeErrorKind::OperatorKey, *key);
  return v;
}

std::string escape_string_literal(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 8);
  for (char c : s) {
    if (c == '\\' || c == '\'') out += '\\';
    out += c;
  }
  return out;
}

bool check_field_allowlist(std::string_view field, const std::set<std::string, std::less<>>& allowed) {
  return allowed.find(field) != allowed.end();
}

bool enforce_json_content_type(std::optional<std::string_view> content_type) {
  if (!content_type) return false;
  std::string_view media = content_type->substr(0, content_type->find(';'));
  const auto is_space = [](char c) { return c == ' ' || c == '\t'; };
  while (!media.empty() && is_space(media.front())) media.remove_prefix(1);
  while (!media.empty() && is_space(media.back())) media.remove_suffix(1);
  constexpr std::string_view kJson = "application/json";
  return media.size() == kJson.size() &&
         std::equal(media.begin(), media.end(), kJson.begin(), [](char a, char b) {
           return std::tolower(static_cast<unsigned char>(a)) == b;
         });
}

bool rbac_check(Role session_role, Role required_role) {
  return session_role == Role::Admin || required_role == Role::User;
}

}  // namespace nosqlab::sanitizer
