#include "nosqlab/script/parser.hpp"

#include <charconv>

namespace nosqlab::script {

std::string_view token_kind_name(TokenKind kind) {
  switch (kind) {
    case TokenKind::Identifier: return "identifier";
    case TokenKind::Number: return "number";
    case TokenKind::String: return "string";
    case TokenKind::KwFunction: return "'function'";
    case TokenKind::KwVar: return "'var'";
    case TokenKind::KwFor: return "'for'";
    case TokenKind::KwReturn: return "'return'";
    case TokenKind::KwThis: return "'this'";
    case TokenKind::LParen: return "'('";
    case TokenKind::RParen: return "')'";
    case TokenKind::LBrace: return "'{'";
    case TokenKind::RBrace: return "'}'";
    case TokenKind::LBracket: return "'['";
    case TokenKind::RBracket: return "']'";
    case TokenKind::Semicolon: return "';'";
    case TokenKind::Comma: return "','";
    case TokenKind::Dot: return "'.'";
    case TokenKind::Colon: return "':'";
    case TokenKind::Less: return "'<'";
    case TokenKind::Plus: return "'+'";
    case TokenKind::Minus: return "'-'";
    case TokenKind::Assign: return "'='";
    case TokenKind::PlusPlus: return "'++'";
    case TokenKind::End: return "end of input";
  }
  return "?";
}

namespace {

bool ident_start(char c) { return c == '$' || c == '_' || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
bool digit(char c) { return c >= '0' && c <= '9'; }

TokenKind keyword_or_ident(std::string_view word) {
  if (word == "function") return TokenKind::KwFunction;
  if (word == "var") return TokenKind::KwVar;
  if (word == "for") return TokenKind::KwFor;
  if (word == "return") return TokenKind::KwReturn;
  if (word == "this") return TokenKind::KwThis;
  return TokenKind::Identifier;
}

}  // namespace

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    Token tok;
    tok.offset = i;
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < src.size() && ident_char(src[j])) ++j;
      tok.text = std::string(src.substr(i, j - i));
      tok.kind = keyword_or_ident(tok.text);
      if (tok.kind != TokenKind::Identifier) tok.text.clear();
      i = j;
    } else if (digit(c)) {
      std::size_t j = i;
      while (j < src.size() && digit(src[j])) ++j;
      if (j + 1 < src.size() && src[j] == '.' && digit(src[j + 1])) {
        ++j;
        while (j < src.size() && digit(src[j])) ++j;
      }
      tok.kind = TokenKind::Number;
      std::from_chars(src.data() + i, src.data() + j, tok.number);
      i = j;
    } else if (c == '\'' || c == '"') {
      std::size_t j = i + 1;
      std::string text;
      bool closed = false;
      while (j < src.size()) {
        char d = src[j++];
        if (d == c) {
          closed = true;
          break;
        }
        if (d == '\\' && j < src.size()) {
          char e = src[j++];
          switch (e) {
            case 'n': text += '\n'; break;
            case 't': text += '\t'; break;
            case 'r': text += '\r'; break;
            default: text += e;
          }
          continue;
        }
        text += d;
      }
      if (!closed) throw LexError("unterminated string literal", i);
      tok.kind = TokenKind::String;
      tok.text = std::move(text);
      i = j;
    } else {
      switch (c) {
        case '(': tok.kind = TokenKind::LParen; break;
        case ')': tok.kind = TokenKind::RParen; break;
        case '{': tok.kind = TokenKind::LBrace; break;
        case '}': tok.kind = TokenKind::RBrace; break;
        case '[': tok.kind = TokenKind::LBracket; break;
        case ']': tok.kind = TokenKind::RBracket; break;
        case ';': tok.kind = TokenKind::Semicolon; break;
        case ',': tok.kind = TokenKind::Comma; break;
        case '.': tok.kind = TokenKind::Dot; break;
        case ':': tok.kind = TokenKind::Colon; break;
        case '<': tok.kind = TokenKind::Less; break;
        case '-': tok.kind = TokenKind::Minus; break;
        case '=': tok.kind = TokenKind::Assign; break;
        case '+':
          if (i + 1 < src.size() && src[i + 1] == '+') {
            tok.kind = TokenKind::PlusPlus;
            ++i;
          } else {
            tok.kind = TokenKind::Plus;
          }
          break;
        default: throw LexError(std::string("unexpected character '") + c + "'", i);
      }
      ++i;
    }
    out.push_back(std::move(tok));
  }
  return out;
}

namespace {

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::size_t src_size) : tokens_(std::move(tokens)) {
    Token end;
    end.kind = TokenKind::End;
    end.offset = src_size;
    tokens_.push_back(std::move(end));
  }

  Program program() {
    Program prog;
    while (!at(TokenKind::End)) {
      if (accept(TokenKind::Semicolon)) continue;
      prog.statements.push_back(statement());
    }
    return prog;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  bool at(TokenKind kind) const { return peek().kind == kind; }

  bool accept(TokenKind kind) {
    if (!at(kind)) return false;
    ++pos_;
    return true;
  }

  [[noreturn]] void fail(const std::string& what) const { throw SyntaxError(what, peek().offset); }

  const Token& expect(TokenKind kind) {
    if (!at(kind))
      fail("expected " + std::string(token_kind_name(kind)) + ", found " +
           std::string(token_kind_name(peek().kind)));
    return tokens_[pos_++];
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : parser(p) {
      if (++parser.depth_ > kMaxSyntaxDepth) parser.fail("nesting too deep");
    }
    ~DepthGuard() { --parser.depth_; }
    Parser& parser;
  };

  // `;` may be omitted before `}` and at the end of input.
  void terminator() {
    if (accept(TokenKind::Semicolon)) return;
    if (at(TokenKind::RBrace) || at(TokenKind::End)) return;
    fail("expected ';', found " + std::string(token_kind_name(peek().kind)));
  }

  Stmt statement() {
    DepthGuard guard(*this);
    if (at(TokenKind::KwVar)) {
      Stmt s = var_decl();
      terminator();
      return s;
    }
    if (at(TokenKind::KwFor)) return for_stmt();
    if (accept(TokenKind::KwReturn)) {
      Return ret;
      if (!at(TokenKind::Semicolon) && !at(TokenKind::RBrace) && !at(TokenKind::End)) ret.value = expression();
      terminator();
      return Stmt{std::move(ret)};
    }
    if (at(TokenKind::LBrace)) return Stmt{Block{block()}};
    Stmt s{ExprStmt{expression()}};
    terminator();
    return s;
  }

  Stmt var_decl() {
    expect(TokenKind::KwVar);
    VarDecl decl;
    decl.name = expect(TokenKind::Identifier).text;
    if (accept(TokenKind::Assign)) decl.init = expression();
    return Stmt{std::move(decl)};
  }

  std::vector<Stmt> block() {
    expect(TokenKind::LBrace);
    std::vector<Stmt> body;
    while (!at(TokenKind::RBrace)) {
      if (at(TokenKind::End)) fail("unbalanced '{'");
      if (accept(TokenKind::Semicolon)) continue;
      body.push_back(statement());
    }
    expect(TokenKind::RBrace);
    return body;
  }

  Stmt for_stmt() {
    expect(TokenKind::KwFor);
    expect(TokenKind::LParen);
    For loop;
    loop.init = at(TokenKind::KwVar) ? var_decl() : Stmt{ExprStmt{expression()}};
    expect(TokenKind::Semicolon);
    loop.cond = expression();
    expect(TokenKind::Semicolon);
    loop.step = Stmt{ExprStmt{expression()}};
    expect(TokenKind::RParen);
    if (at(TokenKind::LBrace)) {
      loop.body = block();
    } else {
      loop.body.push_back(statement());
    }
    return Stmt{std::move(loop)};
  }

  Expr expression() {
    DepthGuard guard(*this);
    if (at(TokenKind::Identifier) && peek(1).kind == TokenKind::Assign) {
      Assign assign;
      assign.name = tokens_[pos_].text;
      pos_ += 2;
      assign.value = expression();
      return Expr{std::move(assign)};
    }
    return comparison();
  }

  Expr comparison() {
    Expr lhs = additive();
    while (accept(TokenKind::Less)) lhs = Expr{Binary{BinaryOp::Less, std::move(lhs), additive()}};
    return lhs;
  }

  Expr additive() {
    Expr lhs = postfix();
    while (true) {
      if (accept(TokenKind::Plus)) {
        lhs = Expr{Binary{BinaryOp::Add, std::move(lhs), postfix()}};
      } else if (accept(TokenKind::Minus)) {
        lhs = Expr{Binary{BinaryOp::Sub, std::move(lhs), postfix()}};
      } else {
        return lhs;
      }
    }
  }

  Expr postfix() {
    if (at(TokenKind::Identifier) && peek(1).kind == TokenKind::PlusPlus) {
      PostIncr incr{tokens_[pos_].text};
      pos_ += 2;
      return Expr{std::move(incr)};
    }
    Expr e = primary();
    while (true) {
      if (accept(TokenKind::Dot)) {
        const Token& name = peek();
        // keywords are valid property names
        if (name.kind != TokenKind::Identifier && name.kind != TokenKind::KwFunction &&
            name.kind != TokenKind::KwVar && name.kind != TokenKind::KwFor && name.kind != TokenKind::KwReturn &&
            name.kind != TokenKind::KwThis)
          fail("expected property name");
        std::string prop = name.kind == TokenKind::Identifier ? name.text : keyword_text(name.kind);
        ++pos_;
        e = Expr{Member{std::move(e), std::move(prop)}};
      } else if (accept(TokenKind::LBracket)) {
        Expr index = expression();
        expect(TokenKind::RBracket);
        e = Expr{Index{std::move(e), std::move(index)}};
      } else if (at(TokenKind::LParen)) {
        if (!std::holds_alternative<Member>(e.node) && !std::holds_alternative<Ident>(e.node))
          fail("only names and members can be called");
        ++pos_;
        Call call;
        call.callee = std::move(e);
        call.args = arguments();
        e = Expr{std::move(call)};
      } else {
        return e;
      }
    }
  }

  static std::string keyword_text(TokenKind kind) {
    switch (kind) {
      case TokenKind::KwFunction: return "function";
      case TokenKind::KwVar: return "var";
      case TokenKind::KwFor: return "for";
      case TokenKind::KwReturn: return "return";
      case TokenKind::KwThis: return "this";
      default: return "";
    }
  }

  std::vector<Expr> arguments() {
    std::vector<Expr> args;
    if (accept(TokenKind::RParen)) return args;
    while (true) {
      args.push_back(expression());
      if (accept(TokenKind::RParen)) return args;
      expect(TokenKind::Comma);
    }
  }

  Expr primary() {
    DepthGuard guard(*this);
    const Token& tok = peek();
    switch (tok.kind) {
      case TokenKind::Number: ++pos_; return Expr{NumLit{tok.number}};
      case TokenKind::String: ++pos_; return Expr{StrLit{tok.text}};
      case TokenKind::Identifier: ++pos_; return Expr{Ident{tok.text}};
      case TokenKind::KwThis: ++pos_; return Expr{This{}};
      case TokenKind::LParen: {
        ++pos_;
        Expr inner = expression();
        expect(TokenKind::RParen);
        return inner;
      }
      case TokenKind::LBrace: return object_literal();
      case TokenKind::LBracket: return array_literal();
      case TokenKind::KwFunction: return function_literal();
      default: fail("unexpected " + std::string(token_kind_name(tok.kind)));
    }
  }

  Expr object_literal() {
    expect(TokenKind::LBrace);
    ObjLit obj;
    if (accept(TokenKind::RBrace)) return Expr{std::move(obj)};
    while (true) {
      const Token& key = peek();
      if (key.kind != TokenKind::Identifier && key.kind != TokenKind::String) fail("expected property name");
      std::string name = key.text;
      ++pos_;
      expect(TokenKind::Colon);
      Expr value = expression();
      bool replaced = false;
      for (auto& [k, v] : obj.pairs) {
        if (k == name) {
          v = std::move(value);
          replaced = true;
          break;
        }
      }
      if (!replaced) obj.pairs.emplace_back(std::move(name), std::move(value));
      if (accept(TokenKind::RBrace)) return Expr{std::move(obj)};
      expect(TokenKind::Comma);
    }
  }

  Expr array_literal() {
    expect(TokenKind::LBracket);
    ArrayLit arr;
    if (accept(TokenKind::RBracket)) return Expr{std::move(arr)};
    while (true) {
      arr.items.push_back(expression());
      if (accept(TokenKind::RBracket)) return Expr{std::move(arr)};
      expect(TokenKind::Comma);
    }
  }

  Expr function_literal() {
    expect(TokenKind::KwFunction);
    expect(TokenKind::LParen);
    FuncLit fn;
    if (!accept(TokenKind::RParen)) {
      while (true) {
        fn.params.push_back(expect(TokenKind::Identifier).text);
        if (accept(TokenKind::RParen)) break;
        expect(TokenKind::Comma);
      }
    }
    fn.body = block();
    return Expr{std::move(fn)};
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

}  // namespace

Program parse_program(std::string_view src) { return Parser(tokenize(src), src.size()).program(); }

FunctionRef compile_function(std::string_view src) {
  auto program = std::make_shared<Program>(parse_program(src));
  if (program->statements.size() != 1) throw SyntaxError("expected a single function literal", 0);
  const auto* stmt = std::get_if<ExprStmt>(&program->statements.front().node);
  const FuncLit* fn = stmt ? std::get_if<FuncLit>(&stmt->expr.node) : nullptr;
  if (fn == nullptr) throw SyntaxError("expected a single function literal", 0);
  return FunctionRef{std::move(program), fn};
}

}  // namespace nosqlab::script
