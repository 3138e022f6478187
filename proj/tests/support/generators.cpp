#include "generators.hpp"

#include <cmath>

namespace testsupport {

using namespace nosqlab;
using namespace nosqlab::script;

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

bool chance(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

template <class T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(items.size()) - 1))];
}

Value small_value(Rng& rng) {
  switch (uniform(rng, 0, 11)) {
    case 0: return Value();
    case 1: return Value(chance(rng, 0.5));
    case 2:
    case 3: return Value(uniform(rng, -1, 3));
    case 4: return Value(pick(rng, std::vector<double>{1.0, 2.5, -0.5, 3.0}));
    case 5:
    case 6:
    case 7: return Value(pick(rng, std::vector<std::string>{"", "a", "b", "1", "ab", "B"}));
    case 8: return Value(Array{Value(uniform(rng, 0, 2))});
    case 9: return Value(Array{});
    case 10: return Value(Object{{"x", uniform(rng, 0, 1)}});
    default: return Value(Object{});
  }
}

std::string tricky_text(Rng& rng, std::size_t max_len) {
  static const std::vector<std::string> pieces = {
      "'", "\\", "\\'", "''", "\"", "{", "}", "[", "]", ",", ":", "$or", "$ne", " ", "\n", "\t", "a", "Z", "0",
      "é", "✓", "\x01", "\x7f", "//", "/*", "%", "&", "=", "+", "\\\\", "\\n"};
  std::string out;
  const int n = uniform(rng, 0, static_cast<int>(max_len));
  for (int i = 0; i < n && out.size() < max_len; ++i) {
    if (chance(rng, 0.15)) out += static_cast<char>(uniform(rng, 1, 255));
    else out += pick(rng, pieces);
  }
  return out;
}

Value any_value(Rng& rng, int depth) {
  const int kind = uniform(rng, 0, depth > 0 ? 7 : 5);
  switch (kind) {
    case 0: return Value();
    case 1: return Value(chance(rng, 0.5));
    case 2: return Value(static_cast<std::int64_t>(rng()));
    case 3: {
      const double d = std::uniform_real_distribution<double>(-1e6, 1e6)(rng);
      return Value(chance(rng, 0.3) ? std::ldexp(d, uniform(rng, -60, 60)) : d);
    }
    case 4:
    case 5: {
      std::string s = tricky_text(rng, 20);
      // keep texts valid UTF-8 for the JSON layer
      for (char& c : s)
        if (static_cast<unsigned char>(c) >= 0x80) c = '?';
      return Value(s);
    }
    case 6: {
      Array a;
      for (int i = uniform(rng, 0, 3); i > 0; --i) a.push_back(any_value(rng, depth - 1));
      return Value(std::move(a));
    }
    default: {
      Object o;
      for (int i = uniform(rng, 0, 3); i > 0; --i)
        o.set(pick(rng, std::vector<std::string>{"a", "b", "$c", "d e", "é", ""}), any_value(rng, depth - 1));
      return Value(std::move(o));
    }
  }
}

std::vector<Value> small_docs(Rng& rng) {
  std::vector<Value> docs;
  for (int i = uniform(rng, 0, 6); i > 0; --i) {
    Object d;
    for (const char* f : {"a", "b", "c"})
      if (chance(rng, 0.7)) d.set(f, small_value(rng));
    docs.emplace_back(std::move(d));
  }
  return docs;
}

Value small_query(Rng& rng, int depth) {
  static const std::vector<std::string> fields = {"a", "b", "c", "d"};
  static const std::vector<std::string> ops = {"$ne", "$eq", "$gt", "$lt"};
  Object q;
  for (int i = uniform(rng, 0, 3); i > 0; --i) {
    const int kind = uniform(rng, 0, depth > 0 ? 7 : 4);
    if (chance(rng, 0.03)) {
      // invalid constructs
      switch (uniform(rng, 0, 3)) {
        case 0: q.set("$or", Array{}); break;
        case 1: q.set("$nor", Array{Object{}}); break;
        case 2: q.set(pick(rng, fields), Object{{"$in", Array{1}}}); break;
        default: q.set(pick(rng, fields), Object{{"$ne", 1}, {"plain", 1}}); break;
      }
      continue;
    }
    switch (kind) {
      case 0:
      case 1: q.set(pick(rng, fields), small_value(rng)); break;
      case 2:
      case 3: {
        Object cond;
        for (int j = uniform(rng, 1, 2); j > 0; --j) cond.set(pick(rng, ops), small_value(rng));
        q.set(pick(rng, fields), Value(std::move(cond)));
        break;
      }
      case 4: q.set("$comment", Value("note")); break;
      default: {
        Array clauses;
        for (int j = uniform(rng, 1, 3); j > 0; --j) clauses.push_back(small_query(rng, depth - 1));
        q.set(kind == 5 ? "$and" : "$or", Value(std::move(clauses)));
      }
    }
  }
  return Value(std::move(q));
}

namespace {

const std::vector<std::string> kNames = {"a", "b", "i", "sum", "emit", "$x", "_y", "db", "Array", "n2"};
const std::vector<std::string> kProps = {"length", "items", "name", "x", "sum", "return", "this", "function"};

std::string script_string(Rng& rng) {
  static const std::vector<std::string> pieces = {"a", " ", "'", "\"", "\\", "\n", "\t", "{", "}", "é", "1", "$"};
  std::string s;
  for (int i = uniform(rng, 0, 6); i > 0; --i) s += pick(rng, pieces);
  return s;
}

Expr expr(Rng& rng, int depth);
Stmt stmt(Rng& rng, int depth);

std::vector<Stmt> stmts(Rng& rng, int depth, int max) {
  std::vector<Stmt> out;
  for (int i = uniform(rng, 0, max); i > 0; --i) out.push_back(stmt(rng, depth - 1));
  return out;
}

Expr callee(Rng& rng, int depth) {
  if (depth <= 0 || chance(rng, 0.4)) return Expr{Ident{pick(rng, kNames)}};
  return Expr{Member{expr(rng, depth - 1), pick(rng, kProps)}};
}

Expr expr(Rng& rng, int depth) {
  const int kind = uniform(rng, 0, depth > 0 ? 12 : 4);
  switch (kind) {
    case 0: return Expr{NumLit{uniform(rng, 0, 4000) / 4.0}};
    case 1: return Expr{StrLit{script_string(rng)}};
    case 2: return Expr{Ident{pick(rng, kNames)}};
    case 3: return Expr{This{}};
    case 4: return Expr{PostIncr{pick(rng, kNames)}};
    case 5: {
      ObjLit o;
      for (int i = uniform(rng, 0, 3); i > 0; --i) {
        std::string key = chance(rng, 0.5) ? pick(rng, kNames) : script_string(rng);
        // the parser merges duplicate keys
        bool seen = false;
        for (const auto& pair : o.pairs) seen |= pair.first == key;
        if (!seen) o.pairs.emplace_back(std::move(key), expr(rng, depth - 1));
      }
      return Expr{std::move(o)};
    }
    case 6: {
      ArrayLit a;
      for (int i = uniform(rng, 0, 3); i > 0; --i) a.items.push_back(expr(rng, depth - 1));
      return Expr{std::move(a)};
    }
    case 7: return Expr{Member{expr(rng, depth - 1), pick(rng, kProps)}};
    case 8: return Expr{Index{expr(rng, depth - 1), expr(rng, depth - 1)}};
    case 9: {
      Call c;
      c.callee = callee(rng, depth - 1);
      for (int i = uniform(rng, 0, 3); i > 0; --i) c.args.push_back(expr(rng, depth - 1));
      return Expr{std::move(c)};
    }
    case 10: {
      FuncLit f;
      for (int i = uniform(rng, 0, 2); i > 0; --i) f.params.push_back(pick(rng, kNames));
      f.body = stmts(rng, depth - 1, 2);
      return Expr{std::move(f)};
    }
    case 11: {
      const BinaryOp op = pick(rng, std::vector<BinaryOp>{BinaryOp::Less, BinaryOp::Add, BinaryOp::Sub});
      return Expr{Binary{op, expr(rng, depth - 1), expr(rng, depth - 1)}};
    }
    default: return Expr{Assign{pick(rng, kNames), expr(rng, depth - 1)}};
  }
}

Stmt stmt(Rng& rng, int depth) {
  switch (uniform(rng, 0, depth > 0 ? 5 : 2)) {
    case 0: {
      VarDecl v{pick(rng, kNames), {}};
      if (chance(rng, 0.8)) v.init = expr(rng, depth);
      return Stmt{std::move(v)};
    }
    case 1: return Stmt{Return{chance(rng, 0.8) ? Box<Expr>(expr(rng, depth)) : Box<Expr>()}};
    case 2: return Stmt{ExprStmt{expr(rng, depth)}};
    case 3: {
      For f;
      f.init = chance(rng, 0.5) ? Stmt{VarDecl{pick(rng, kNames), expr(rng, depth - 1)}}
                                : Stmt{ExprStmt{expr(rng, depth - 1)}};
      f.cond = expr(rng, depth - 1);
      f.step = Stmt{ExprStmt{expr(rng, depth - 1)}};
      f.body = stmts(rng, depth - 1, 3);
      return Stmt{std::move(f)};
    }
    case 4: return Stmt{Block{stmts(rng, depth - 1, 3)}};
    default: return Stmt{ExprStmt{expr(rng, depth)}};
  }
}

}  // namespace

Program script_program(Rng& rng) {
  Program p;
  for (int i = uniform(rng, 1, 4); i > 0; --i) p.statements.push_back(stmt(rng, 4));
  return p;
}

std::string fuzz_body(Rng& rng) {
  std::size_t size;
  const int bucket = uniform(rng, 0, 999);
  if (bucket < 900) size = static_cast<std::size_t>(uniform(rng, 0, 2048));
  else if (bucket < 990) size = static_cast<std::size_t>(uniform(rng, 2049, 64 * 1024));
  else size = static_cast<std::size_t>(uniform(rng, 64 * 1024, 1 << 20));

  static const std::vector<std::string> tokens = {
      "username", "password", "field", "=", "&", "[", "]", "[]", "$ne", "$gt", "$or", "$where", "%5B", "%24",
      "%", "'", "\"", "{", "}", "(", ")", ";", "a);}", "function(", "emit(1,1", "db.x.insert({})", "return 1;",
      "for (;;) {", "price", "amount", "+", "%00", "\\", ":", ",", "null", "1e999", "[[[[[[[[", "]]]]"};
  std::string out;
  out.reserve(size);
  switch (uniform(rng, 0, 2)) {
    case 0:
      while (out.size() < size) out += static_cast<char>(rng() & 0xff);
      break;
    case 1:
      while (out.size() < size) out += pick(rng, tokens);
      break;
    default:
      // nested JSON-ish
      while (out.size() < size) {
        out += pick(rng, std::vector<std::string>{"{\"a\":", "[", "1", ",", "]", "}", "\"x\"", "{", "\"$ne\":"});
      }
  }
  out.resize(size);
  return out;
}

}  // namespace testsupport
