#include "nosqlab/document_store.hpp"

#include <optional>

namespace nosqlab::store {

namespace {

bool is_operator_key(std::string_view key) { return !key.empty() && key.front() == '$'; }

bool is_operator_object(const Value& v) {
  if (!v.is_object()) return false;
  for (const auto& [key, item] : v.as_object())
    if (is_operator_key(key)) return true;
  return false;
}

bool is_field_operator(std::string_view op) { return op == "$ne" || op == "$eq" || op == "$gt" || op == "$lt"; }

void validate(const Object& query);

void validate_clause_list(std::string_view op, const Value& list) {
  if (!list.is_array()) throw QueryError(std::string(op) + " needs an array");
  if (list.as_array().empty()) throw QueryError(std::string(op) + " needs a non-empty array");
  for (const auto& clause : list.as_array()) {
    if (!clause.is_object()) throw QueryError(std::string(op) + " entries must be objects");
    validate(clause.as_object());
  }
}

void validate(const Object& query) {
  for (const auto& [key, cond] : query) {
    if (key == "$or" || key == "$and") {
      validate_clause_list(key, cond);
    } else if (key == "$comment") {
      continue;
    } else if (is_operator_key(key)) {
      throw QueryError("unknown top-level operator " + key);
    } else if (is_operator_object(cond)) {
      for (const auto& [op, arg] : cond.as_object()) {
        if (!is_operator_key(op)) throw QueryError("field '" + key + "' mixes operators and plain keys");
        if (!is_field_operator(op)) throw QueryError("unknown operator " + op);
      }
    }
  }
}

// <0, 0, >0, or nullopt when the kinds are not comparable.
std::optional<int> compare(const Value& a, const Value& b) {
  if (a.is_number() && b.is_number()) {
    if (a.is_int() && b.is_int()) return a.as_int() < b.as_int() ? -1 : (a.as_int() > b.as_int() ? 1 : 0);
    double x = a.as_number(), y = b.as_number();
    if (x < y) return -1;
    if (x > y) return 1;
    if (x == y) return 0;
    return std::nullopt;
  }
  if (a.is_text() && b.is_text()) {
    int c = a.as_text().compare(b.as_text());
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
  }
  return std::nullopt;
}

bool match_operator(std::string_view op, const Value* field, const Value& arg) {
  if (op == "$ne") return field == nullptr || !values_equal(*field, arg);
  if (op == "$eq") return field != nullptr && values_equal(*field, arg);
  if (field == nullptr) return false;
  auto c = compare(*field, arg);
  if (!c) return false;
  return op == "$gt" ? *c > 0 : *c < 0;
}

bool match_field(const Value* field, const Value& cond) {
  if (is_operator_object(cond)) {
    for (const auto& [op, arg] : cond.as_object())
      if (!match_operator(op, field, arg)) return false;
    return true;
  }
  return field != nullptr && values_equal(*field, cond);
}

bool match_validated(const Object& query, const Object& doc) {
  for (const auto& [key, cond] : query) {
    if (key == "$or") {
      bool any = false;
      for (const auto& clause : cond.as_array()) {
        if (match_validated(clause.as_object(), doc)) {
          any = true;
          break;
        }
      }
      if (!any) return false;
    } else if (key == "$and") {
      for (const auto& clause : cond.as_array())
        if (!match_validated(clause.as_object(), doc)) return false;
    } else if (key == "$comment") {
      continue;
    } else if (!match_field(doc.find(key), cond)) {
      return false;
    }
  }
  return true;
}

}  // namespace

bool values_equal(const Value& a, const Value& b) {
  if (a.is_number() && b.is_number()) return compare(a, b) == 0;
  if (a.kind() != b.kind()) return false;
  if (a.is_array()) {
    const auto& x = a.as_array();
    const auto& y = b.as_array();
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!values_equal(x[i], y[i])) return false;
    return true;
  }
  if (a.is_object()) {
    const auto& x = a.as_object().entries();
    const auto& y = b.as_object().entries();
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i].first != y[i].first || !values_equal(x[i].second, y[i].second)) return false;
    return true;
  }
  return a == b;
}

bool match_query(const Object& query, const Object& doc) {
  validate(query);
  return match_validated(query, doc);
}

bool match_query(const Value& query, const Value& doc) {
  if (!query.is_object()) throw QueryError("query must be an object");
  if (!doc.is_object()) throw QueryError("document must be an object");
  return match_query(query.as_object(), doc.as_object());
}

Collection& Store::ensure(std::string_view name) {
  auto it = collections_.find(name);
  if (it == collections_.end()) {
    it = collections_.emplace(std::string(name), Collection{}).first;
    it->second.name = std::string(name);
  }
  return it->second;
}

std::int64_t Store::insert(std::string_view collection, Object doc) {
  if (doc.contains("_id")) throw DocumentError("_id is assigned by the store");
  Collection& coll = ensure(collection);
  const std::int64_t id = coll.next_id++;
  Object stored;
  stored.set("_id", Value(id));
  for (auto& [key, item] : doc.entries()) stored.set(key, item);
  coll.docs.push_back(std::move(stored));
  return id;
}

std::int64_t Store::insert(std::string_view collection, const Value& doc) {
  if (!doc.is_object()) throw DocumentError("document must be an object, got " + std::string(kind_name(doc.kind())));
  return insert(collection, doc.as_object());
}

std::vector<Object> Store::find(std::string_view collection, const Object& query) const {
  validate(query);
  std::vector<Object> out;
  const Collection* coll = this->collection(collection);
  if (coll == nullptr) return out;
  for (const auto& doc : coll->docs)
    if (match_validated(query, doc)) out.push_back(doc);
  return out;
}

void Store::replace(std::string_view collection, std::vector<Object> docs) {
  Collection& coll = ensure(collection);
  coll.docs.clear();
  for (auto& doc : docs) {
    doc.erase("_id");
    Object stored;
    stored.set("_id", Value(coll.next_id++));
    for (auto& [key, item] : doc.entries()) stored.set(key, item);
    coll.docs.push_back(std::move(stored));
  }
}

const Collection* Store::collection(std::string_view name) const {
  auto it = collections_.find(name);
  return it == collections_.end() ? nullptr : &it->second;
}

std::vector<std::string> Store::collection_names() const {
  std::vector<std::string> names;
  for (const auto& [name, coll] : collections_) names.push_back(name);
  return names;
}

}  // namespace nosqlab::store
