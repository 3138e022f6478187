#pragma once

// AST for the mapReduce script subset. Nodes are plain values: copying an
// AST deep-copies it and == compares structure.

#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace nosqlab::script {

// Owning, deep-copying pointer with value equality.
template <class T>
class Box {
 public:
  Box() = default;
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
  Box(const Box& other) : ptr_(other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr;
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;

  explicit operator bool() const { return ptr_ != nullptr; }
  const T& operator*() const { return *ptr_; }
  const T* operator->() const { return ptr_.get(); }
  const T* get() const { return ptr_.get(); }

  friend bool operator==(const Box& a, const Box& b) {
    if (!a.ptr_ || !b.ptr_) return !a.ptr_ && !b.ptr_;
    return *a.ptr_ == *b.ptr_;
  }

 private:
  std::unique_ptr<T> ptr_;
};

struct Expr;
struct Stmt;

enum class BinaryOp { Less, Add, Sub };

struct NumLit {
  double value = 0;
  friend bool operator==(const NumLit&, const NumLit&) = default;
};
struct StrLit {
  std::string value;
  friend bool operator==(const StrLit&, const StrLit&) = default;
};
struct ObjLit {
  std::vector<std::pair<std::string, Expr>> pairs;
  friend bool operator==(const ObjLit&, const ObjLit&) = default;
};
struct ArrayLit {
  std::vector<Expr> items;
  friend bool operator==(const ArrayLit&, const ArrayLit&) = default;
};
struct Ident {
  std::string name;
  friend bool operator==(const Ident&, const Ident&) = default;
};
struct This {
  friend bool operator==(const This&, const This&) = default;
};
struct Member {
  Box<Expr> object;
  std::string name;
  friend bool operator==(const Member&, const Member&) = default;
};
struct Index {
  Box<Expr> object;
  Box<Expr> index;
  friend bool operator==(const Index&, const Index&) = default;
};
struct Call {
  Box<Expr> callee;  // Member or Ident
  std::vector<Expr> args;
  friend bool operator==(const Call&, const Call&) = default;
};
struct FuncLit {
  std::vector<std::string> params;
  std::vector<Stmt> body;
  friend bool operator==(const FuncLit&, const FuncLit&) = default;
};
struct Binary {
  BinaryOp op = BinaryOp::Add;
  Box<Expr> lhs;
  Box<Expr> rhs;
  friend bool operator==(const Binary&, const Binary&) = default;
};
struct PostIncr {
  std::string name;
  friend bool operator==(const PostIncr&, const PostIncr&) = default;
};
struct Assign {
  std::string name;
  Box<Expr> value;
  friend bool operator==(const Assign&, const Assign&) = default;
};

struct Expr {
  std::variant<NumLit, StrLit, ObjLit, ArrayLit, Ident, This, Member, Index, Call, FuncLit, Binary, PostIncr, Assign>
      node;
  friend bool operator==(const Expr&, const Expr&) = default;
};

struct VarDecl {
  std::string name;
  Box<Expr> init;  // empty when declared without a value
  friend bool operator==(const VarDecl&, const VarDecl&) = default;
};
struct For {
  Box<Stmt> init;
  Box<Expr> cond;
  Box<Stmt> step;
  std::vector<Stmt> body;
  friend bool operator==(const For&, const For&) = default;
};
struct Return {
  Box<Expr> value;  // empty for a bare `return;`
  friend bool operator==(const Return&, const Return&) = default;
};
struct ExprStmt {
  Expr expr;
  friend bool operator==(const ExprStmt&, const ExprStmt&) = default;
};
struct Block {
  std::vector<Stmt> body;
  friend bool operator==(const Block&, const Block&) = default;
};

struct Stmt {
  std::variant<VarDecl, For, Return, ExprStmt, Block> node;
  friend bool operator==(const Stmt&, const Stmt&) = default;
};

struct Program {
  std::vector<Stmt> statements;
  friend bool operator==(const Program&, const Program&) = default;
};

}  // namespace nosqlab::script
