#pragma once

// Tree-walking evaluator for the mapReduce script subset.
//
// Globals: `db` (when a store is attached), `Array.sum`, and `emit` while a
// map function runs. Missing properties read as null; reading a property of
// null or a number is an error. Every expression and statement costs one
// step; running out of steps raises BudgetExceeded.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nosqlab/document_store.hpp"
#include "nosqlab/script/parser.hpp"
#include "nosqlab/value.hpp"

namespace nosqlab::script {

class RuntimeError : public ScriptError {
 public:
  using ScriptError::ScriptError;
};

class BudgetExceeded : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

inline constexpr std::size_t kDefaultStepBudget = 100'000;
inline constexpr int kMaxCallDepth = 128;

struct SideEffect {
  std::string collection;
  std::int64_t doc_id = 0;
  friend bool operator==(const SideEffect&, const SideEffect&) = default;
};

struct ExecOutcome {
  bool completed = false;
  std::size_t statements_executed = 0;
  std::vector<SideEffect> side_effects;  // inserts outside mapReduce outputs
  std::vector<std::string> out_collections;  // mapReduce outputs written, in order
  std::string error;  // runtime error text when !completed
};

class RtValue;
struct RtObject;
class HostObject;

using RtArray = std::vector<RtValue>;
using NativeFn = std::function<RtValue(const RtValue& self, std::span<const RtValue> args)>;

struct Native {
  std::string name;
  std::shared_ptr<const NativeFn> fn;
};

// Script-side value: JSON-like data plus functions and host objects.
class RtValue {
 public:
  using Data = std::variant<std::monostate, bool, double, std::string, std::shared_ptr<RtArray>,
                            std::shared_ptr<RtObject>, FunctionRef, Native, std::shared_ptr<HostObject>>;

  RtValue() = default;
  RtValue(bool b) : data_(b) {}
  RtValue(double d) : data_(d) {}
  RtValue(std::string s) : data_(std::move(s)) {}
  RtValue(std::shared_ptr<RtArray> a) : data_(std::move(a)) {}
  RtValue(std::shared_ptr<RtObject> o) : data_(std::move(o)) {}
  RtValue(FunctionRef f) : data_(std::move(f)) {}
  RtValue(Native n) : data_(std::move(n)) {}
  RtValue(std::shared_ptr<HostObject> h) : data_(std::move(h)) {}

  const Data& data() const { return data_; }
  bool is_null() const { return data_.index() == 0; }
  template <class T>
  const T* get_if() const {
    return std::get_if<T>(&data_);
  }

 private:
  Data data_;
};

struct RtObject {
  std::vector<std::pair<std::string, RtValue>> props;
  const RtValue* find(std::string_view key) const;
  void set(std::string key, RtValue value);
};

class HostObject {
 public:
  virtual ~HostObject() = default;
  virtual RtValue get(std::string_view name) = 0;
};

RtValue to_runtime(const Value& v);
// Integral numbers become Int, non-finite numbers null. Functions are rejected.
Value to_value(const RtValue& v);

using EmitSink = std::function<void(const Value& key, const Value& value)>;

class Interpreter {
 public:
  explicit Interpreter(store::Store* store = nullptr, std::size_t step_budget = kDefaultStepBudget);
  ~Interpreter();
  Interpreter(const Interpreter&) = delete;
  Interpreter& operator=(const Interpreter&) = delete;

  // Runs top-level statements in order until the end or a `return`.
  // Runtime errors are reported in the outcome; writes made before the
  // error stay applied.
  ExecOutcome run(std::shared_ptr<const Program> program);

  // Throws RuntimeError.
  Value call(const FunctionRef& fn, const Value& this_binding, std::span<const Value> args);

  // Installs `emit` for the duration of map calls; pass {} to remove.
  void set_emit_sink(EmitSink sink);

  // The mapReduce core shared by db.<c>.mapReduce and store::map_reduce.
  std::string map_reduce(std::string_view collection, const FunctionRef& map_fn, const FunctionRef& reduce_fn,
                         const Value& options);

  std::size_t steps_used() const { return steps_; }
  std::size_t step_budget() const { return budget_; }
  const std::vector<SideEffect>& side_effects() const { return side_effects_; }
  const std::vector<std::string>& out_collections() const { return out_collections_; }

 private:
  class Impl;
  friend class Impl;
  friend class DbHost;
  friend class CollectionHost;

  store::Store* store_;
  std::size_t budget_;
  std::size_t steps_ = 0;
  std::vector<SideEffect> side_effects_;
  std::vector<std::string> out_collections_;
  EmitSink emit_;
  std::unique_ptr<Impl> impl_;
};

// Calls a compiled function inside `env` (its store, emit sink and budget).
Value eval_function(const FunctionRef& fn, const Value& this_binding, std::span<const Value> args,
                    Interpreter& env);

// Parses `src` and runs it against `store`. Throws LexError/SyntaxError
// before anything executes.
ExecOutcome exec_top_level(std::string_view src, store::Store& store,
                           std::size_t step_budget = kDefaultStepBudget);

}  // namespace nosqlab::script
