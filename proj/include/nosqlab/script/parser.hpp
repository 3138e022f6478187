#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "nosqlab/error.hpp"
#include "nosqlab/script/ast.hpp"

namespace nosqlab::script {

class ScriptError : public Error {
 public:
  using Error::Error;
};

class LexError : public ScriptError {
 public:
  LexError(const std::string& what, std::size_t offset)
      : ScriptError(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class SyntaxError : public ScriptError {
 public:
  SyntaxError(const std::string& what, std::size_t offset)
      : ScriptError(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

enum class TokenKind {
  Identifier,
  Number,
  String,
  KwFunction,
  KwVar,
  KwFor,
  KwReturn,
  KwThis,
  LParen,
  RParen,
  LBrace,
  RBrace,
  LBracket,
  RBracket,
  Semicolon,
  Comma,
  Dot,
  Colon,
  Less,
  Plus,
  Minus,
  Assign,
  PlusPlus,
  End,
};

std::string_view token_kind_name(TokenKind kind);

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;  // identifier name or decoded string literal
  double number = 0;
  std::size_t offset = 0;

  friend bool operator==(const Token& a, const Token& b) {
    return a.kind == b.kind && a.text == b.text && a.number == b.number;
  }
};

// No End token is appended. Throws LexError.
std::vector<Token> tokenize(std::string_view src);

inline constexpr int kMaxSyntaxDepth = 200;

// Throws LexError or SyntaxError.
Program parse_program(std::string_view src);

// A callable function literal together with the program that owns it.
struct FunctionRef {
  std::shared_ptr<const Program> owner;
  const FuncLit* fn = nullptr;
};

// `src` must be exactly one function literal (optionally followed by ';').
FunctionRef compile_function(std::string_view src);

}  // namespace nosqlab::script
