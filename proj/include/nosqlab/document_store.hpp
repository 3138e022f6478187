#pragma once

// In-memory document database with MongoDB-style operator queries.
//
// Query semantics (top level of a query object):
//   $or / $and   non-empty array of query objects
//   $comment     ignored
//   key: scalar  field present and equal (type-sensitive, Int 1 != Text "1")
//   key: {$ne|$eq|$gt|$lt: v}
// Int and Float compare numerically; any other kind mismatch never matches.

#include <cstdint>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "nosqlab/value.hpp"

namespace nosqlab::store {

class QueryError : public Error {
 public:
  using Error::Error;
};

// Rejected insert: non-object document or caller-supplied _id.
class DocumentError : public TypeError {
 public:
  using TypeError::TypeError;
};

bool match_query(const Object& query, const Object& doc);
// Throws QueryError unless both are objects.
bool match_query(const Value& query, const Value& doc);

// Query-level equality: Int/Float numeric, everything else strict.
bool values_equal(const Value& a, const Value& b);

struct Collection {
  std::string name;
  std::vector<Object> docs;  // insertion order, each starts with _id
  std::int64_t next_id = 1;
};

class Store {
 public:
  std::int64_t insert(std::string_view collection, Object doc);
  std::int64_t insert(std::string_view collection, const Value& doc);

  // Absent collection yields an empty result.
  std::vector<Object> find(std::string_view collection, const Object& query) const;

  // Replaces the contents of `collection` with `docs`, assigning fresh ids.
  void replace(std::string_view collection, std::vector<Object> docs);

  const Collection* collection(std::string_view name) const;
  std::vector<std::string> collection_names() const;
  bool empty() const { return collections_.empty(); }

 private:
  Collection& ensure(std::string_view name);

  std::map<std::string, Collection, std::less<>> collections_;
};

// Readers share, writers are exclusive.
class SharedStore {
 public:
  template <class F>
  decltype(auto) read(F&& fn) const {
    std::shared_lock lock(mutex_);
    return fn(static_cast<const Store&>(store_));
  }

  template <class F>
  decltype(auto) write(F&& fn) {
    std::unique_lock lock(mutex_);
    return fn(store_);
  }

 private:
  mutable std::shared_mutex mutex_;
  Store store_;
};

// Runs map/reduce script sources over `collection` and replaces the
// collection named by options.out with {_id, key, value} documents.
// Returns the out collection name. Throws script::ScriptError.
std::string map_reduce(Store& store, std::string_view collection, std::string_view map_src,
                       std::string_view reduce_src, const Object& options);

}  // namespace nosqlab::store
