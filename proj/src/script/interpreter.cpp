#include "nosqlab/script/interpreter.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace nosqlab::script {

const RtValue* RtObject::find(std::string_view key) const {
  for (const auto& [k, v] : props)
    if (k == key) return &v;
  return nullptr;
}

void RtObject::set(std::string key, RtValue value) {
  for (auto& [k, v] : props) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  props.emplace_back(std::move(key), std::move(value));
}

RtValue to_runtime(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Null: return RtValue();
    case ValueKind::Bool: return RtValue(v.as_bool());
    case ValueKind::Int: return RtValue(static_cast<double>(v.as_int()));
    case ValueKind::Float: return RtValue(v.as_float());
    case ValueKind::Text: return RtValue(v.as_text());
    case ValueKind::Array: {
      auto arr = std::make_shared<RtArray>();
      arr->reserve(v.as_array().size());
      for (const auto& item : v.as_array()) arr->push_back(to_runtime(item));
      return RtValue(std::move(arr));
    }
    case ValueKind::Object: {
      auto obj = std::make_shared<RtObject>();
      for (const auto& [key, item] : v.as_object()) obj->props.emplace_back(key, to_runtime(item));
      return RtValue(std::move(obj));
    }
  }
  return RtValue();
}

namespace {

constexpr double kMaxExactInt = 9007199254740992.0;  // 2^53

Value number_value(double d) {
  if (!std::isfinite(d)) return Value();
  if (std::trunc(d) == d && std::fabs(d) <= kMaxExactInt) return Value(static_cast<std::int64_t>(d));
  return Value(d);
}

std::string format_number(double d) {
  if (std::isnan(d)) return "NaN";
  if (std::isinf(d)) return d > 0 ? "Infinity" : "-Infinity";
  if (std::trunc(d) == d && std::fabs(d) <= kMaxExactInt) return std::to_string(static_cast<std::int64_t>(d));
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, end);
}

std::string_view type_name(const RtValue& v) {
  switch (v.data().index()) {
    case 0: return "null";
    case 1: return "boolean";
    case 2: return "number";
    case 3: return "string";
    case 4: return "array";
    case 5: return "object";
    case 6:
    case 7: return "function";
    default: return "host object";
  }
}

}  // namespace

Value to_value(const RtValue& v) {
  if (v.is_null()) return Value();
  if (const auto* b = v.get_if<bool>()) return Value(*b);
  if (const auto* d = v.get_if<double>()) return number_value(*d);
  if (const auto* s = v.get_if<std::string>()) return Value(*s);
  if (const auto* a = v.get_if<std::shared_ptr<RtArray>>()) {
    Array out;
    out.reserve((*a)->size());
    for (const auto& item : **a) out.push_back(to_value(item));
    return Value(std::move(out));
  }
  if (const auto* o = v.get_if<std::shared_ptr<RtObject>>()) {
    Object out;
    for (const auto& [key, item] : (*o)->props) out.set(key, to_value(item));
    return Value(std::move(out));
  }
  throw RuntimeError("cannot store a " + std::string(type_name(v)) + " value");
}

namespace {

struct Scope {
  std::map<std::string, RtValue, std::less<>> vars;
  Scope* parent = nullptr;

  RtValue* lookup(std::string_view name) {
    for (Scope* s = this; s != nullptr; s = s->parent) {
      auto it = s->vars.find(name);
      if (it != s->vars.end()) return &it->second;
    }
    return nullptr;
  }
};

struct Frame {
  Scope* scope = nullptr;
  RtValue self;
  const std::shared_ptr<const Program>* owner = nullptr;
};

struct Flow {
  bool returned = false;
  RtValue value;
};

bool truthy(const RtValue& v) {
  if (v.is_null()) return false;
  if (const auto* b = v.get_if<bool>()) return *b;
  if (const auto* d = v.get_if<double>()) return *d != 0 && !std::isnan(*d);
  if (const auto* s = v.get_if<std::string>()) return !s->empty();
  return true;
}

double to_number(const RtValue& v) {
  if (v.is_null()) return 0;
  if (const auto* b = v.get_if<bool>()) return *b ? 1 : 0;
  if (const auto* d = v.get_if<double>()) return *d;
  if (const auto* s = v.get_if<std::string>()) {
    if (s->empty()) return 0;
    double out = 0;
    auto [ptr, ec] = std::from_chars(s->data(), s->data() + s->size(), out);
    if (ec == std::errc() && ptr == s->data() + s->size()) return out;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::string to_display(const RtValue& v) {
  if (v.is_null()) return "null";
  if (const auto* b = v.get_if<bool>()) return *b ? "true" : "false";
  if (const auto* d = v.get_if<double>()) return format_number(*d);
  if (const auto* s = v.get_if<std::string>()) return *s;
  if (const auto* a = v.get_if<std::shared_ptr<RtArray>>()) {
    std::string out;
    for (std::size_t i = 0; i < (*a)->size(); ++i) {
      if (i) out += ',';
      if (!(**a)[i].is_null()) out += to_display((**a)[i]);
    }
    return out;
  }
  if (v.get_if<std::shared_ptr<RtObject>>()) return "[object Object]";
  return "function";
}

RtValue add(const RtValue& a, const RtValue& b) {
  if (a.get_if<std::string>() || b.get_if<std::string>()) return RtValue(to_display(a) + to_display(b));
  return RtValue(to_number(a) + to_number(b));
}

}  // namespace

class DbHost;
class CollectionHost;

class Interpreter::Impl {
 public:
  explicit Impl(Interpreter& owner) : self_(owner) {}

  Scope globals;
  int call_depth = 0;

  void tick() {
    if (++self_.steps_ > self_.budget_)
      throw BudgetExceeded("step budget of " + std::to_string(self_.budget_) + " exceeded");
  }

  Flow exec_body(const std::vector<Stmt>& body, Frame& frame) {
    for (const auto& stmt : body) {
      Flow flow = exec(stmt, frame);
      if (flow.returned) return flow;
    }
    return {};
  }

  Flow exec(const Stmt& stmt, Frame& frame) {
    tick();
    return std::visit([&](const auto& node) { return exec_node(node, frame); }, stmt.node);
  }

  Flow exec_node(const VarDecl& decl, Frame& frame) {
    frame.scope->vars[decl.name] = decl.init ? eval(*decl.init, frame) : RtValue();
    return {};
  }

  Flow exec_node(const For& loop, Frame& frame) {
    exec(*loop.init, frame);
    while (true) {
      tick();
      if (!truthy(eval(*loop.cond, frame))) return {};
      Flow flow = exec_body(loop.body, frame);
      if (flow.returned) return flow;
      exec(*loop.step, frame);
    }
  }

  Flow exec_node(const Return& ret, Frame& frame) {
    Flow flow;
    flow.returned = true;
    if (ret.value) flow.value = eval(*ret.value, frame);
    return flow;
  }

  Flow exec_node(const ExprStmt& stmt, Frame& frame) {
    eval(stmt.expr, frame);
    return {};
  }

  Flow exec_node(const Block& block, Frame& frame) { return exec_body(block.body, frame); }

  RtValue eval(const Expr& expr, Frame& frame) {
    tick();
    return std::visit([&](const auto& node) { return eval_node(node, frame); }, expr.node);
  }

  RtValue eval_node(const NumLit& lit, Frame&) { return RtValue(lit.value); }
  RtValue eval_node(const StrLit& lit, Frame&) { return RtValue(lit.value); }

  RtValue eval_node(const ObjLit& lit, Frame& frame) {
    auto obj = std::make_shared<RtObject>();
    for (const auto& [key, item] : lit.pairs) obj->set(key, eval(item, frame));
    return RtValue(std::move(obj));
  }

  RtValue eval_node(const ArrayLit& lit, Frame& frame) {
    auto arr = std::make_shared<RtArray>();
    for (const auto& item : lit.items) arr->push_back(eval(item, frame));
    return RtValue(std::move(arr));
  }

  RtValue eval_node(const Ident& id, Frame& frame) {
    if (RtValue* v = frame.scope->lookup(id.name)) return *v;
    throw RuntimeError(id.name + " is not defined");
  }

  RtValue eval_node(const This&, Frame& frame) { return frame.self; }

  RtValue eval_node(const Member& m, Frame& frame) { return get_member(eval(*m.object, frame), m.name); }

  RtValue eval_node(const Index& ix, Frame& frame) {
    RtValue object = eval(*ix.object, frame);
    RtValue index = eval(*ix.index, frame);
    if (const auto* arr = object.get_if<std::shared_ptr<RtArray>>()) {
      if (const auto* d = index.get_if<double>()) {
        if (*d >= 0 && std::trunc(*d) == *d && *d < static_cast<double>((*arr)->size()))
          return (**arr)[static_cast<std::size_t>(*d)];
        return RtValue();
      }
      return get_member(object, to_display(index));
    }
    if (object.get_if<std::shared_ptr<RtObject>>() || object.get_if<std::shared_ptr<HostObject>>())
      return get_member(object, to_display(index));
    throw RuntimeError("cannot index a " + std::string(type_name(object)));
  }

  RtValue eval_node(const Call& call, Frame& frame) {
    RtValue self;
    RtValue callee;
    if (const auto* m = std::get_if<Member>(&call.callee->node)) {
      self = eval(*m->object, frame);
      callee = get_member(self, m->name);
    } else {
      callee = eval(*call.callee, frame);
    }
    std::vector<RtValue> args;
    args.reserve(call.args.size());
    for (const auto& arg : call.args) args.push_back(eval(arg, frame));
    return invoke(callee, self, args);
  }

  RtValue eval_node(const FuncLit& fn, Frame& frame) { return RtValue(FunctionRef{*frame.owner, &fn}); }

  RtValue eval_node(const Binary& bin, Frame& frame) {
    RtValue lhs = eval(*bin.lhs, frame);
    RtValue rhs = eval(*bin.rhs, frame);
    switch (bin.op) {
      case BinaryOp::Add: return add(lhs, rhs);
      case BinaryOp::Sub: return RtValue(to_number(lhs) - to_number(rhs));
      case BinaryOp::Less: {
        const auto* ls = lhs.get_if<std::string>();
        const auto* rs = rhs.get_if<std::string>();
        if (ls && rs) return RtValue(*ls < *rs);
        return RtValue(to_number(lhs) < to_number(rhs));
      }
    }
    return RtValue();
  }

  RtValue eval_node(const PostIncr& incr, Frame& frame) {
    RtValue* slot = frame.scope->lookup(incr.name);
    if (slot == nullptr) throw RuntimeError(incr.name + " is not defined");
    const double old = to_number(*slot);
    *slot = RtValue(old + 1);
    return RtValue(old);
  }

  RtValue eval_node(const Assign& assign, Frame& frame) {
    RtValue value = eval(*assign.value, frame);
    RtValue* slot = frame.scope->lookup(assign.name);
    if (slot == nullptr) throw RuntimeError("assignment to undeclared variable " + assign.name);
    *slot = value;
    return value;
  }

  RtValue get_member(const RtValue& object, std::string_view name) {
    if (const auto* o = object.get_if<std::shared_ptr<RtObject>>()) {
      const RtValue* v = (*o)->find(name);
      return v ? *v : RtValue();
    }
    if (const auto* a = object.get_if<std::shared_ptr<RtArray>>())
      return name == "length" ? RtValue(static_cast<double>((*a)->size())) : RtValue();
    if (const auto* s = object.get_if<std::string>())
      return name == "length" ? RtValue(static_cast<double>(s->size())) : RtValue();
    if (const auto* h = object.get_if<std::shared_ptr<HostObject>>()) return (*h)->get(name);
    if (object.get_if<FunctionRef>() || object.get_if<Native>()) return RtValue();
    throw RuntimeError("cannot read property '" + std::string(name) + "' of " + std::string(type_name(object)));
  }

  RtValue invoke(const RtValue& callee, const RtValue& self, std::span<const RtValue> args) {
    if (const auto* fn = callee.get_if<FunctionRef>()) return call_function(*fn, self, args);
    if (const auto* native = callee.get_if<Native>()) return (*native->fn)(self, args);
    throw RuntimeError(std::string(type_name(callee)) + " is not a function");
  }

  RtValue call_function(const FunctionRef& fn, const RtValue& self, std::span<const RtValue> args) {
    if (call_depth >= kMaxCallDepth) throw RuntimeError("call stack too deep");
    ++call_depth;
    struct Unwind {
      int& depth;
      ~Unwind() { --depth; }
    } unwind{call_depth};

    Scope local;
    local.parent = &globals;
    for (std::size_t i = 0; i < fn.fn->params.size(); ++i)
      local.vars[fn.fn->params[i]] = i < args.size() ? args[i] : RtValue();
    Frame frame;
    frame.scope = &local;
    frame.self = self;
    frame.owner = &fn.owner;
    Flow flow = exec_body(fn.fn->body, frame);
    return flow.returned ? flow.value : RtValue();
  }

 private:
  Interpreter& self_;
};

namespace {

Native make_native(std::string name, NativeFn fn) {
  return Native{std::move(name), std::make_shared<const NativeFn>(std::move(fn))};
}

const FunctionRef& function_arg(std::span<const RtValue> args, std::size_t i, std::string_view what) {
  const FunctionRef* fn = i < args.size() ? args[i].get_if<FunctionRef>() : nullptr;
  if (fn == nullptr) throw RuntimeError("mapReduce: " + std::string(what) + " must be a function");
  return *fn;
}

}  // namespace

class CollectionHost : public HostObject {
 public:
  CollectionHost(Interpreter& interp, std::string name) : interp_(interp), name_(std::move(name)) {}

  RtValue get(std::string_view member) override {
    if (member == "insert") {
      return RtValue(make_native("insert", [this](const RtValue&, std::span<const RtValue> args) {
        if (args.empty()) throw RuntimeError("insert needs a document");
        Value doc = to_value(args[0]);
        std::int64_t id = 0;
        try {
          id = interp_.store_->insert(name_, doc);
        } catch (const Error& e) {
          throw RuntimeError(std::string("insert: ") + e.what());
        }
        interp_.side_effects_.push_back(SideEffect{name_, id});
        return RtValue(static_cast<double>(id));
      }));
    }
    if (member == "mapReduce") {
      return RtValue(make_native("mapReduce", [this](const RtValue&, std::span<const RtValue> args) {
        const FunctionRef& map_fn = function_arg(args, 0, "map");
        const FunctionRef& reduce_fn = function_arg(args, 1, "reduce");
        Value options = args.size() > 2 ? to_value(args[2]) : Value();
        return RtValue(interp_.map_reduce(name_, map_fn, reduce_fn, options));
      }));
    }
    return RtValue();
  }

 private:
  Interpreter& interp_;
  std::string name_;
};

class DbHost : public HostObject {
 public:
  explicit DbHost(Interpreter& interp) : interp_(interp) {}

  RtValue get(std::string_view name) override {
    return RtValue(std::shared_ptr<HostObject>(std::make_shared<CollectionHost>(interp_, std::string(name))));
  }

 private:
  Interpreter& interp_;
};

Interpreter::Interpreter(store::Store* store, std::size_t step_budget)
    : store_(store), budget_(step_budget), impl_(std::make_unique<Impl>(*this)) {
  auto& globals = impl_->globals.vars;
  if (store_ != nullptr) globals["db"] = RtValue(std::shared_ptr<HostObject>(std::make_shared<DbHost>(*this)));

  auto array_ns = std::make_shared<RtObject>();
  array_ns->set("sum", RtValue(make_native("Array.sum", [](const RtValue&, std::span<const RtValue> args) {
                  const auto* arr = args.empty() ? nullptr : args[0].get_if<std::shared_ptr<RtArray>>();
                  if (arr == nullptr) throw RuntimeError("Array.sum expects an array");
                  RtValue total(0.0);
                  for (const auto& item : **arr) total = add(total, item);
                  return total;
                })));
  globals["Array"] = RtValue(std::move(array_ns));

  globals["emit"] = RtValue(make_native("emit", [this](const RtValue&, std::span<const RtValue> args) {
    if (!emit_) throw RuntimeError("emit is only available inside a map function");
    emit_(args.size() > 0 ? to_value(args[0]) : Value(), args.size() > 1 ? to_value(args[1]) : Value());
    return RtValue();
  }));
}

Interpreter::~Interpreter() = default;

void Interpreter::set_emit_sink(EmitSink sink) { emit_ = std::move(sink); }

ExecOutcome Interpreter::run(std::shared_ptr<const Program> program) {
  ExecOutcome outcome;
  const std::size_t effects_before = side_effects_.size();
  const std::size_t outs_before = out_collections_.size();
  // top-level declarations are globals, visible to functions defined later
  Frame frame;
  frame.scope = &impl_->globals;
  frame.owner = &program;
  try {
    for (const auto& stmt : program->statements) {
      Flow flow = impl_->exec(stmt, frame);
      ++outcome.statements_executed;
      if (flow.returned) break;
    }
    outcome.completed = true;
  } catch (const RuntimeError& e) {
    outcome.error = e.what();
  }
  outcome.side_effects.assign(side_effects_.begin() + static_cast<std::ptrdiff_t>(effects_before),
                              side_effects_.end());
  outcome.out_collections.assign(out_collections_.begin() + static_cast<std::ptrdiff_t>(outs_before),
                                 out_collections_.end());
  return outcome;
}

Value Interpreter::call(const FunctionRef& fn, const Value& this_binding, std::span<const Value> args) {
  std::vector<RtValue> rt_args;
  rt_args.reserve(args.size());
  for (const auto& arg : args) rt_args.push_back(to_runtime(arg));
  return to_value(impl_->call_function(fn, to_runtime(this_binding), rt_args));
}

std::string Interpreter::map_reduce(std::string_view collection, const FunctionRef& map_fn,
                                    const FunctionRef& reduce_fn, const Value& options) {
  if (store_ == nullptr) throw RuntimeError("mapReduce needs a database");
  const Value* out = options.is_object() ? options.as_object().find("out") : nullptr;
  if (out == nullptr || !out->is_text() || out->as_text().empty())
    throw RuntimeError("mapReduce options need an 'out' collection name");
  const std::string out_name = out->as_text();

  // snapshot first: inserts made by the map function must not feed back in
  const std::vector<Object> docs = store_->find(collection, Object{});

  std::vector<std::pair<Value, Array>> groups;
  std::unordered_map<std::string, std::size_t> group_index;
  EmitSink previous = std::move(emit_);
  emit_ = [&](const Value& key, const Value& value) {
    const std::string canonical = to_json(key);
    auto [it, inserted] = group_index.emplace(canonical, groups.size());
    if (inserted) groups.emplace_back(key, Array{});
    groups[it->second].second.push_back(value);
  };
  try {
    for (const auto& doc : docs) call(map_fn, Value(doc), {});
  } catch (...) {
    emit_ = std::move(previous);
    throw;
  }
  emit_ = std::move(previous);

  std::vector<Object> results;
  results.reserve(groups.size());
  for (auto& [key, values] : groups) {
    const Value reduce_args[] = {key, Value(std::move(values))};
    Value reduced = call(reduce_fn, Value(), reduce_args);
    results.push_back(Object{{"key", key}, {"value", std::move(reduced)}});
  }
  store_->replace(out_name, std::move(results));
  out_collections_.push_back(out_name);
  return out_name;
}

Value eval_function(const FunctionRef& fn, const Value& this_binding, std::span<const Value> args,
                    Interpreter& env) {
  return env.call(fn, this_binding, args);
}

ExecOutcome exec_top_level(std::string_view src, store::Store& store, std::size_t step_budget) {
  auto program = std::make_shared<const Program>(parse_program(src));
  Interpreter interp(&store, step_budget);
  return interp.run(std::move(program));
}

}  // namespace nosqlab::script

namespace nosqlab::store {

std::string map_reduce(Store& store, std::string_view collection, std::string_view map_src,
                       std::string_view reduce_src, const Object& options) {
  const script::FunctionRef map_fn = script::compile_function(map_src);
  const script::FunctionRef reduce_fn = script::compile_function(reduce_src);
  script::Interpreter interp(&store);
  return interp.map_reduce(collection, map_fn, reduce_fn, Value(options));
}

}  // namespace nosqlab::store
