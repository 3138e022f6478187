#pragma once

// Mitigations applied by the hardened endpoints.

#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "nosqlab/value.hpp"

namespace nosqlab::sanitizer {

enum class Role { User, Admin };

std::optional<Role> parse_role(std::string_view name);
std::string_view role_name(Role role);

enum class SanitizeErrorKind { NotScalar, OperatorKey, FieldNotAllowed, BadContentType, Forbidden };

std::string_view kind_name(SanitizeErrorKind kind);

class SanitizeError : public Error {
 public:
  SanitizeError(SanitizeErrorKind kind, std::string detail)
      : Error(std::string(kind_name(kind)) + ": " + detail), kind_(kind), detail_(std::move(detail)) {}

  SanitizeErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  SanitizeErrorKind kind_;
  std::string detail_;
};

// Text passes through, numbers and booleans render canonically; arrays,
// objects and null raise NotScalar instead of being flattened.
Value cast_scalar_text(const Value& v);

// Returns `v` unchanged, or raises OperatorKey naming the first `$` key in
// depth-first order.
Value reject_operator_keys(const Value& v);

// `\` -> `\\` then `'` -> `\'`. Safe to embed between single quotes in
// relaxed query text.
std::string escape_string_literal(std::string_view s);

bool check_field_allowlist(std::string_view field, const std::set<std::string, std::less<>>& allowed);

// Media type before any `;` parameter, trimmed, case-insensitive.
bool enforce_json_content_type(std::optional<std::string_view> content_type);

// Admin may read everything; user may read user data only.
bool rbac_check(Role session_role, Role required_role);

}  // namespace nosqlab::sanitizer
